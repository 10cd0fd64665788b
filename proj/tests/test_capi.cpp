#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

#include "fairlab/fairlab.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string source(const std::string& rel) { return std::string(FAIRLAB_SOURCE_DIR) + "/" + rel; }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string take(char* s) {
  REQUIRE(s != nullptr);
  std::string out = s;
  fl_free_string(s);
  return out;
}

json small_scenario() {
  auto j = json::parse(slurp(source("scenarios/credit-unawareness.json")));
  j["dataset"]["n"] = 4000;
  j["training"]["epochs"] = 40;
  j["compliance"]["budget"] = 30;
  j["simulation"]["steps"] = 80;
  j["simulation"]["t_short"] = 10;
  j["simulation"]["t_long"] = 60;
  return j;
}

struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<int> k{0};
    path = fs::temp_directory_path() /
           ("fairlab-capi-" + std::to_string(::getpid()) + "-" + std::to_string(k++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct Output {
  int code = -1;
  std::string out;
};

Output cli(const std::string& args) {
  Output o;
  std::string cmd = std::string(FAIRLAB_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* p = ::popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  while (auto n = std::fread(buf, 1, sizeof buf, p)) o.out.append(buf, n);
  int st = ::pclose(p);
  o.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return o;
}

}  // namespace

TEST_CASE("status names and last error") {
  CHECK(std::string(fl_status_name(FL_OK)) == "ok");
  CHECK(std::string(fl_status_name(FL_E_VALIDATION)) == "validation");
  CHECK(std::string(fl_status_name(FL_E_NOT_FOUND)) == "not-found");
  CHECK(std::string(fl_status_name(FL_E_INTERNAL)) == "internal");
  CHECK(std::string(fl_status_name(static_cast<fl_status>(57))) == "unknown");
  CHECK(std::string(fl_version()).size() > 0);

  char* out = nullptr;
  CHECK(fl_classify(nullptr, "0", &out) == FL_E_INPUT);
  CHECK(std::string(fl_last_error()).find("de_sign") != std::string::npos);
  CHECK(out == nullptr);
  CHECK(fl_classify("0", "0", &out) == FL_OK);
  CHECK(std::string(fl_last_error()).empty());
  CHECK(take(out) == "fair-unawareness");
  fl_free_string(nullptr);
}

TEST_CASE("classification through the c api") {
  struct Row {
    const char *de, *ie, *regime;
  };
  for (auto r : {Row{"0", "-+", "fair-lottery"}, Row{"0", "+", "no-discrimination"},
                 Row{"+", "-", "fair-affirmative-action"}, Row{"+", "0", "reverse-discrimination"},
                 Row{"0", "0", "fair-unawareness"}, Row{"0", "-", "covert-discrimination"},
                 Row{"-", "+", "fair-supremacism"}, Row{"-", "0", "overt-discrimination"}}) {
    char* out = nullptr;
    REQUIRE(fl_classify(r.de, r.ie, &out) == FL_OK);
    CHECK(take(out) == r.regime);
  }
  char* out = nullptr;
  CHECK(fl_classify("-", "-", &out) == FL_E_UNCLASSIFIABLE);
  CHECK(fl_classify("?", "0", &out) == FL_E_INPUT);

  REQUIRE(fl_law_mapping("covert-discrimination", &out) == FL_OK);
  auto law = json::parse(take(out));
  CHECK(law["us"] == "disparate-impact");
  CHECK(law["eu"] == "indirect-discrimination");
  CHECK(law["fairness"] == false);
  REQUIRE(fl_law_mapping("overt-discrimination", &out) == FL_OK);
  law = json::parse(take(out));
  CHECK(law["us"] == "disparate-treatment");
  CHECK(law["eu"] == "direct-discrimination");
  REQUIRE(fl_law_mapping("fair-lottery", &out) == FL_OK);
  CHECK(json::parse(take(out))["us"] == "none");
  CHECK(fl_law_mapping("nonsense", &out) == FL_E_INPUT);
}

TEST_CASE("policy assessment through the c api") {
  auto scm = small_scenario()["scm"].dump();
  char* out = nullptr;
  REQUIRE(fl_assess_policy(scm.c_str(), "unawareness", "-", nullptr, &out) == FL_OK);
  auto u = json::parse(take(out));
  CHECK(u["regime"] == "covert-discrimination");
  CHECK(u["de"] == 0.0);
  CHECK(u["ie"].get<double>() == doctest::Approx(-0.4));

  REQUIRE(fl_assess_policy(scm.c_str(), "affirmative-action", "-", "fairness", &out) == FL_OK);
  auto aa = json::parse(take(out));
  CHECK(aa["regime"] == "fair-affirmative-action");
  CHECK(std::abs(aa["te"].get<double>()) <= 1e-9);

  REQUIRE(fl_assess_policy(scm.c_str(), "lottery", "-", "discrimination", &out) == FL_OK);
  auto lot = json::parse(take(out));
  CHECK(lot["regime"] == "no-discrimination");
  CHECK(lot["removal_gap"].get<double>() == doctest::Approx(0.4));

  REQUIRE(fl_assess_policy(scm.c_str(), "supremacism", "-", nullptr, &out) == FL_OK);
  CHECK(json::parse(take(out))["regime"].is_null());

  CHECK(fl_assess_policy(scm.c_str(), "lottery", "-", "astrology", &out) == FL_E_INPUT);
  CHECK(fl_assess_policy("{", "lottery", "-", nullptr, &out) != FL_OK);
  auto zero = small_scenario()["scm"];
  zero["coefficients"]["alpha_aw"] = 0.0;
  CHECK(fl_assess_policy(zero.dump().c_str(), "affirmative-action", "-", nullptr, &out) ==
        FL_E_CALIBRATION_DEGENERATE);
}

TEST_CASE("graphs through the c api") {
  char* out = nullptr;
  REQUIRE(fl_standard_graph("unawareness", &out) == FL_OK);
  const auto g = take(out);
  int sep = -1;
  REQUIRE(fl_d_separated(g.c_str(), "A", "D", "W", &sep) == FL_OK);
  CHECK(sep == 1);
  REQUIRE(fl_d_separated(g.c_str(), "A", "D", "", &sep) == FL_OK);
  CHECK(sep == 0);
  REQUIRE(fl_d_separated(g.c_str(), "A", "Y", "W,D", &sep) == FL_OK);
  CHECK(sep == 1);

  REQUIRE(fl_standard_graph("affirmative-action", &out) == FL_OK);
  const auto aa = take(out);
  REQUIRE(fl_d_separated(aa.c_str(), "A", "D", "W", &sep) == FL_OK);
  CHECK(sep == 0);

  REQUIRE(fl_standard_graph(nullptr, &out) == FL_OK);
  CHECK(json::parse(take(out))["acyclic"] == true);
  CHECK(fl_standard_graph("meritocracy", &out) == FL_E_INPUT);
  CHECK(fl_d_separated("{}", "A", "D", nullptr, &sep) == FL_E_INPUT);
}

TEST_CASE("sessions through the c api") {
  fl_session* s = nullptr;
  CHECK(fl_session_create("{}", &s) == FL_E_VALIDATION);
  CHECK(s == nullptr);
  REQUIRE(fl_session_create(small_scenario().dump().c_str(), &s) == FL_OK);
  int t = -1;
  CHECK(fl_session_step(s, 0) == FL_E_INPUT);
  REQUIRE(fl_session_step(s, 15) == FL_OK);
  REQUIRE(fl_session_time(s, &t) == FL_OK);
  CHECK(t == 15);
  CHECK(fl_session_set_policy(s, "lottery") == FL_OK);
  CHECK(fl_session_set_policy(s, "unawareness") == FL_E_STATE);
  CHECK(fl_session_set_policy(s, "meritocracy") == FL_E_INPUT);
  REQUIRE(fl_session_step(s, 5) == FL_OK);

  char* out = nullptr;
  REQUIRE(fl_session_trajectory(s, "json", &out) == FL_OK);
  CHECK(json::parse(take(out))["frames"].size() == 21);
  REQUIRE(fl_session_trajectory(s, "csv", &out) == FL_OK);
  const auto csv = take(out);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 22);
  CHECK(fl_session_trajectory(s, "xml", &out) == FL_E_INPUT);
  REQUIRE(fl_session_summary(s, &out) == FL_OK);
  CHECK(json::parse(take(out))["t"] == 20);
  fl_session_free(s);
  fl_session_free(nullptr);
  CHECK(fl_session_step(nullptr, 1) == FL_E_INPUT);
}

TEST_CASE("validate, run and export through the c api") {
  TempDir dir;
  char* out = nullptr;
  auto text = small_scenario().dump();
  REQUIRE(fl_validate_scenario(text.c_str(), &out) == FL_OK);
  const auto canonical = take(out);
  REQUIRE(fl_validate_scenario(canonical.c_str(), &out) == FL_OK);
  CHECK(take(out) == canonical);
  auto bad = small_scenario();
  bad["dataset"]["n"] = -5;
  CHECK(fl_validate_scenario(bad.dump().c_str(), &out) == FL_E_VALIDATION);
  CHECK(std::string(fl_last_error()).find("dataset.n") != std::string::npos);

  const auto path = (dir.path / "s.json").string();
  std::ofstream(path) << text;
  const auto runs = (dir.path / "runs").string();
  char* id = nullptr;
  char* summary = nullptr;
  REQUIRE(fl_run_scenario(path.c_str(), runs.c_str(), &id, &summary) == FL_OK);
  const auto run_id = take(id);
  CHECK(json::parse(take(summary))["regime"] == "covert-discrimination");
  CHECK(fs::exists(fs::path(runs) / run_id / "trajectory.csv"));

  REQUIRE(fl_export_run(runs.c_str(), run_id.c_str(), "json", nullptr, &out) == FL_OK);
  auto files = json::parse(take(out));
  REQUIRE(files.size() >= 1);
  CHECK(fs::exists(files[0].get<std::string>()));
  CHECK(fl_export_run(runs.c_str(), "ffffffffffffffff", "csv", nullptr, &out) == FL_E_NOT_FOUND);
  CHECK(fl_run_scenario((dir.path / "missing.json").string().c_str(), runs.c_str(), &id, &summary) != FL_OK);
}

TEST_CASE("service lifecycle through the c api") {
  TempDir dir;
  fl_service* svc = nullptr;
  REQUIRE(fl_service_create(dir.path.string().c_str(), &svc) == FL_OK);
  int port = 0;
  REQUIRE(fl_service_bind(svc, "127.0.0.1", 0, &port) == FL_OK);
  CHECK(port > 0);
  fl_status status = FL_E_INTERNAL;
  std::thread th([&] { status = fl_service_run(svc); });
  fl_service_stop(svc);
  th.join();
  CHECK(status == FL_OK);
  fl_service_free(svc);
}

TEST_CASE("cli classify") {
  auto o = cli("classify --de - --ie 0");
  CHECK(o.code == 0);
  CHECK(o.out == "overt-discrimination\n");
  o = cli("classify --de 0 --ie - --json");
  CHECK(o.code == 0);
  CHECK(json::parse(o.out)["eu"] == "indirect-discrimination");
  o = cli("classify --de - --ie -");
  CHECK(o.code == FL_E_UNCLASSIFIABLE);
  CHECK(cli("classify --de 0").code != 0);
}

TEST_CASE("cli validate, run and export") {
  TempDir dir;
  auto bad = small_scenario();
  bad["simulation"]["stpes"] = 3;
  const auto bad_path = (dir.path / "bad.json").string();
  std::ofstream(bad_path) << bad.dump();
  CHECK(cli("validate " + bad_path).code == FL_E_VALIDATION);

  const auto path = (dir.path / "s.json").string();
  std::ofstream(path) << small_scenario().dump(2);
  auto v = cli("validate " + path);
  CHECK(v.code == 0);
  CHECK(json::parse(v.out)["name"] == "credit-unawareness");

  const auto runs = (dir.path / "runs").string();
  auto r = cli("run " + path + " --runs-dir " + runs + " --json");
  REQUIRE(r.code == 0);
  auto summary = json::parse(r.out);
  const auto id = summary["run_id"].get<std::string>();
  CHECK(summary["regime"] == "covert-discrimination");

  auto text = cli("run " + path + " --runs-dir " + runs);
  CHECK(text.code == 0);
  CHECK(text.out.find("covert-discrimination") != std::string::npos);
  CHECK(text.out.find(id) != std::string::npos);

  const auto out = (dir.path / "out").string();
  auto e = cli("export " + id + " --format csv --runs-dir " + runs + " --out " + out);
  REQUIRE(e.code == 0);
  auto first = e.out.substr(0, e.out.find('\n'));
  CHECK(slurp(first) == slurp(runs + "/" + id + "/trajectory.csv"));
  CHECK(cli("export ffffffffffffffff --format csv --runs-dir " + runs).code == FL_E_NOT_FOUND);
  CHECK(cli("export " + id + " --format xml --runs-dir " + runs).code != 0);
}

TEST_CASE("cli serve stops on a signal") {
  TempDir dir;
  const auto log = (dir.path / "serve.log").string();
  pid_t pid = ::fork();
  REQUIRE(pid >= 0);
  if (pid == 0) {
    if (!std::freopen(log.c_str(), "w", stdout)) ::_exit(126);
    ::execl(FAIRLAB_CLI_PATH, FAIRLAB_CLI_PATH, "serve", "--port", "0", "--state",
            dir.path.string().c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  bool listening = false;
  for (int i = 0; i < 500 && !listening; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
    listening = slurp(log).find("listening on http://127.0.0.1:") != std::string::npos;
  }
  CHECK(listening);
  ::kill(pid, SIGINT);
  int st = 0;
  int waited = 0;
  for (int i = 0; i < 500 && waited == 0; ++i) {
    waited = ::waitpid(pid, &st, WNOHANG);
    if (waited == 0) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  if (waited == 0) {
    ::kill(pid, SIGKILL);
    ::waitpid(pid, &st, 0);
    FAIL("serve ignored SIGINT");
  }
  CHECK(WIFEXITED(st));
  CHECK(WEXITSTATUS(st) == 0);
}
