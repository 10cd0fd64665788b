#include "fairlab/error.hpp"
#include "fairlab/policy.hpp"

namespace fairlab {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::Input: return "input";
    case ErrorCode::Unsupported: return "unsupported";
    case ErrorCode::InsufficientData: return "insufficient-data";
    case ErrorCode::Degenerate: return "degenerate";
    case ErrorCode::CalibrationDegenerate: return "calibration-degenerate";
    case ErrorCode::TrainingDegenerate: return "training-degenerate";
    case ErrorCode::Unclassifiable: return "unclassifiable";
    case ErrorCode::Validation: return "validation";
    case ErrorCode::NotFound: return "not-found";
    case ErrorCode::Io: return "io";
    case ErrorCode::State: return "state";
  }
  return "unknown";
}

std::string policy_name(PolicyRegime p) {
  switch (p) {
    case PolicyRegime::Lottery: return "lottery";
    case PolicyRegime::AffirmativeAction: return "affirmative-action";
    case PolicyRegime::Unawareness: return "unawareness";
    case PolicyRegime::Supremacism: return "supremacism";
  }
  return "";
}

PolicyRegime parse_policy(std::string_view name) {
  for (auto p : kAllPolicies)
    if (policy_name(p) == name) return p;
  throw Error(ErrorCode::Input, "unknown policy '" + std::string(name) + "'");
}

std::string sign_name(Sign s) {
  switch (s) {
    case Sign::Negative: return "-";
    case Sign::Zero: return "0";
    case Sign::Positive: return "+";
  }
  return "";
}

Sign parse_sign(std::string_view text) {
  if (text == "-" || text == "\xE2\x88\x92") return Sign::Negative;
  if (text == "0") return Sign::Zero;
  if (text == "+") return Sign::Positive;
  throw Error(ErrorCode::Input, "unknown sign '" + std::string(text) + "'");
}

}  // namespace fairlab
