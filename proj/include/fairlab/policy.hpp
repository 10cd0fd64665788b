#pragma once

#include <array>
#include <string>
#include <string_view>

namespace fairlab {

enum class PolicyRegime { Lottery, AffirmativeAction, Unawareness, Supremacism };

inline constexpr std::array<PolicyRegime, 4> kAllPolicies = {
    PolicyRegime::Lottery, PolicyRegime::AffirmativeAction,
    PolicyRegime::Unawareness, PolicyRegime::Supremacism};

std::string policy_name(PolicyRegime p);
PolicyRegime parse_policy(std::string_view name);

// -1, 0 or +1
enum class Sign : int { Negative = -1, Zero = 0, Positive = 1 };

std::string sign_name(Sign s);
Sign parse_sign(std::string_view text);

}  // namespace fairlab
