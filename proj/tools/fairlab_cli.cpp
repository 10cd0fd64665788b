#include <csignal>
#include <pthread.h>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairlab/fairlab.h"

namespace {

int report(fl_status s) {
  std::cerr << "error (" << fl_status_name(s) << "): " << fl_last_error() << "\n";
  return static_cast<int>(s);
}

std::string take(char* s) {
  std::string out = s ? s : "";
  fl_free_string(s);
  return out;
}

std::string sign_text(const nlohmann::json& g, const std::string& key) {
  return g.at(key + "_sign").get<std::string>();
}

void print_summary(const std::string& run_id, const nlohmann::json& j, const std::string& runs_dir) {
  std::cout << "run " << run_id << "  (" << runs_dir << "/" << run_id << ")\n";
  std::cout << "scenario   " << j["scenario"].get<std::string>() << "\n";
  std::cout << "policy     " << j["policy"].get<std::string>() << "  data bias "
            << j["data_bias"].get<std::string>() << "\n";
  const auto& e = j["effects"];
  std::printf("effects    DE %+.6f (%s)  IE %+.6f (%s)  TE %+.6f\n", e["de"].get<double>(),
              e["de_sign"].get<std::string>().c_str(), e["ie"].get<double>(),
              e["ie_sign"].get<std::string>().c_str(), e["te"].get<double>());
  std::cout << "regime     " << (j["regime"].is_null() ? "unclassified" : j["regime"].get<std::string>())
            << "\n";
  const auto& c = j["criterion"];
  std::cout << "criterion  " << c["notation"].get<std::string>() << "  "
            << (c["passed"].get<bool>() ? "pass" : "fail") << "\n";
  for (const auto& t : c["tests"])
    std::printf("           %-14s stat %+.4f  %s\n", t["statement"].get<std::string>().c_str(),
                t["statistic"].get<double>(), t["independent"].get<bool>() ? "independent" : "dependent");
  const auto& comp = j["compliance"];
  std::printf("compliance gap %+.4f  adverse: %s", comp["gap"].get<double>(),
              comp["adverse"].get<bool>() ? "yes" : "no");
  if (comp.contains("alternative_found"))
    std::printf("  alternative: %s  reduction %.1f%%  accuracy %+.4f",
                comp["alternative_found"].get<bool>() ? "yes" : "no",
                100.0 * comp["disparity_reduction"].get<double>(), comp["accuracy_delta"].get<double>());
  std::printf("\n");
  if (j["gaps"].is_null()) {
    std::cout << "gaps       n/a (" << j["steps"].get<int>() << " steps)\n";
  } else {
    const auto& g = j["gaps"];
    std::cout << "gaps       decision short " << sign_text(g, "decision_short") << " long "
              << sign_text(g, "decision_long") << "  outcome short " << sign_text(g, "outcome_short")
              << " long " << sign_text(g, "outcome_long") << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairlab: causal fairness policy laboratory"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(fl_version()));

  std::string scenario_path, runs_dir = "runs";
  bool as_json = false;
  auto* run = app.add_subcommand("run", "Run a scenario and persist its artifacts");
  run->add_option("scenario", scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--runs-dir", runs_dir, "Directory holding run directories");
  run->add_flag("--json", as_json, "Print the summary as JSON");

  int port = 8080;
  std::string state_dir, host = "127.0.0.1";
  auto* serve = app.add_subcommand("serve", "Serve the /v1 session API");
  serve->add_option("--port", port, "TCP port, 0 for any free port")->check(CLI::Range(0, 65535));
  serve->add_option("--state", state_dir, "State directory for session snapshots")->required();
  serve->add_option("--host", host, "Bind address");

  std::string export_id, format, out_dir;
  auto* exp = app.add_subcommand("export", "Export a run's trajectory and reports");
  exp->add_option("run-id", export_id, "Run id")->required();
  exp->add_option("--format", format, "csv or json")->required()->check(CLI::IsMember({"csv", "json"}));
  exp->add_option("--runs-dir", runs_dir, "Directory holding run directories");
  exp->add_option("--out", out_dir, "Output directory (default <run>/export)");

  std::string de, ie;
  auto* classify = app.add_subcommand("classify", "Classify a (DE, IE) sign pair");
  classify->add_option("--de", de, "Direct-effect sign, e.g. 0, -, +, -+")->required();
  classify->add_option("--ie", ie, "Indirect-effect sign")->required();
  classify->add_flag("--json", as_json, "Print regime and law mapping as JSON");

  auto* validate = app.add_subcommand("validate", "Validate a scenario and print its canonical form");
  validate->add_option("scenario", scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  if (*run) {
    char* id = nullptr;
    char* summary = nullptr;
    if (auto s = fl_run_scenario(scenario_path.c_str(), runs_dir.c_str(), &id, &summary); s != FL_OK)
      return report(s);
    const auto run_id = take(id);
    const auto text = take(summary);
    if (as_json) std::cout << text;
    else print_summary(run_id, nlohmann::json::parse(text), runs_dir);
    return 0;
  }
  if (*serve) {
    fl_service* svc = nullptr;
    if (auto s = fl_service_create(state_dir.c_str(), &svc); s != FL_OK) return report(s);
    int bound = 0;
    if (auto s = fl_service_bind(svc, host.c_str(), port, &bound); s != FL_OK) {
      fl_service_free(svc);
      return report(s);
    }
    // signals go to a waiter thread, never into the serving code
    sigset_t stop_signals;
    sigemptyset(&stop_signals);
    sigaddset(&stop_signals, SIGINT);
    sigaddset(&stop_signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);
    std::thread waiter([svc, stop_signals] {
      int sig = 0;
      sigwait(&stop_signals, &sig);
      fl_service_stop(svc);
    });
    waiter.detach();
    std::cout << "listening on http://" << host << ":" << bound << "/v1" << std::endl;
    auto s = fl_service_run(svc);
    fl_service_free(svc);
    return s == FL_OK ? 0 : report(s);
  }
  if (*exp) {
    char* paths = nullptr;
    if (auto s = fl_export_run(runs_dir.c_str(), export_id.c_str(), format.c_str(),
                               out_dir.empty() ? nullptr : out_dir.c_str(), &paths);
        s != FL_OK)
      return report(s);
    for (const auto& p : nlohmann::json::parse(take(paths))) std::cout << p.get<std::string>() << "\n";
    return 0;
  }
  if (*classify) {
    char* regime = nullptr;
    if (auto s = fl_classify(de.c_str(), ie.c_str(), &regime); s != FL_OK) return report(s);
    const auto name = take(regime);
    if (!as_json) {
      std::cout << name << "\n";
      return 0;
    }
    char* law = nullptr;
    if (auto s = fl_law_mapping(name.c_str(), &law); s != FL_OK) return report(s);
    std::cout << take(law) << "\n";
    return 0;
  }
  if (*validate) {
    std::ifstream in(scenario_path);
    std::stringstream ss;
    ss << in.rdbuf();
    char* canonical = nullptr;
    if (auto s = fl_validate_scenario(ss.str().c_str(), &canonical); s != FL_OK) return report(s);
    std::cout << take(canonical);
    return 0;
  }
  return 0;
}
