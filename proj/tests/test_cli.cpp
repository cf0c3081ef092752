#include "adaptex/commands.hpp"
#include "adaptex/config.hpp"
#include "adaptex/io.hpp"

#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

using namespace adaptex;
namespace fs = std::filesystem;

namespace {

const char* kImpact = R"(# tiny impact run
[run]
name = tiny
model = impact

[impact]
target_shares = 3
sizes = 1,2
horizon = 3

[impact_grid]
x1_min = 99.5
x1_max = 100.5
x1_count = 7
x4_min = -0.05
x4_max = 0.25
x4_count = 5
m_count = 3
s_nodes = 0,1e-4,1e-3

[scheme]
time_step = 1
h2 = 1
drift = characteristic

[prior]
mean = 0.05
std = 5e-4

[simulate]
paths = 5
)";

const char* kLimit = R"([run]
name = tiny-limit
model = limit

[limit]
horizon = 3
target_shares = 2

[scheme]
time_step = 0.25

[prior]
p = 0.5

[simulate]
paths = 4
decision_step = 0.25

[truth]
schedule = 0:0.8, 1.5:0.3
control = 0:0.8
)";

/// Scratch directory removed at scope exit.
struct Scratch {
  fs::path dir;
  Scratch() {
    std::random_device rd;
    dir = fs::temp_directory_path() / ("adaptex_cli_" + std::to_string(rd()));
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(dir / name) << text;
    return dir / name;
  }
};

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

CommonOptions to(const fs::path& out) {
  CommonOptions o;
  o.out = out;
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config: parse and echo") {
  const RunConfig c = parse(kImpact);
  CHECK(c.name == "tiny");
  CHECK(c.model == ModelKind::impact);
  CHECK(c.impact.target_shares == 3);
  CHECK(c.impact.sizes == std::vector<int>{1, 2});
  CHECK(c.impact_grid.s_nodes.size() == 3);
  CHECK(c.scheme.drift == DriftScheme::characteristic);
  CHECK(c.output_dir() == fs::path("out") / "tiny");
  const auto j = config_json(c);
  CHECK(j["impact"]["target_shares"] == 3);

  const RunConfig l = parse(kLimit);
  CHECK(l.model == ModelKind::limit);
  REQUIRE(l.truth.has_value());
  CHECK(l.truth->at(2.0) == 0.3);
  CHECK(l.control->at(2.0) == 0.8);
}

TEST_CASE("config: field-level errors") {
  const std::string base = kImpact;
  CHECK(error_of(std::string(kImpact).replace(std::string(kImpact).find("[scheme]"), 8, "[scheme]\nbogus = 1"))
            .find("scheme.bogus: unknown key") != std::string::npos);
  CHECK(error_of(base + "[scheme]\nh2 = 2\n").find("syntax") != std::string::npos);
  CHECK(error_of(std::string(kImpact).replace(std::string(kImpact).find("target_shares = 3"), 17, "target_shares = x"))
            .find("impact.target_shares") != std::string::npos);
  CHECK(error_of(std::string(kImpact).replace(std::string(kImpact).find("mean = 0.05"), 11, "mean = 0.5"))
            .find("prior") != std::string::npos);
  CHECK(error_of(std::string(kImpact).replace(std::string(kImpact).find("time_step = 1"), 13, "time_step = 0.7"))
            .find("time_step") != std::string::npos);
  CHECK(error_of(std::string(kImpact).replace(std::string(kImpact).find("model = impact"), 14, "model = fancy"))
            .find("run.model") != std::string::npos);
  CHECK(error_of(std::string(kLimit).replace(std::string(kLimit).find("schedule = 0:0.8, 1.5:0.3"), 25, ""))
            .find("truth.control") != std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/adaptex.ini"), ConfigError);
}

TEST_CASE("presets parse and validate") {
  for (const auto& entry : fs::directory_iterator(ADAPTEX_PRESET_DIR)) {
    if (entry.path().extension() != ".ini") continue;
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(load_config(entry.path()));
  }
}

TEST_CASE("solve: invalid config exits 2 without touching the output") {
  Scratch s;
  const fs::path cfg = s.write("bad.ini", std::string(kImpact) + "[impact]\n");
  const fs::path bad = s.write("bad2.ini", std::string(kImpact).replace(std::string(kImpact).find("h2 = 1"), 6, "h2 = -1"));
  std::ostringstream log;
  CHECK(cmd_solve(cfg, to(s.dir / "out"), log) == kExitConfig);
  CHECK(cmd_solve(bad, to(s.dir / "out"), log) == kExitConfig);
  CHECK(log.str().find("h2") != std::string::npos);
  CHECK_FALSE(fs::exists(s.dir / "out"));
}

TEST_CASE("solve: solver failure exits 3") {
  Scratch s;
  std::string text = kImpact;
  text.replace(text.find("x1_count = 7"), 12, "x1_count = 200000");
  text.replace(text.find("x4_count = 5"), 12, "x4_count = 200000");
  text.replace(text.find("m_count = 3"), 11, "m_count = 20000");
  std::ostringstream log;
  CHECK(cmd_solve(s.write("huge.ini", text), to(s.dir / "out"), log) == kExitSolver);
  CHECK(log.str().find("solver failure") != std::string::npos);
  CHECK_FALSE(fs::exists(s.dir / "out"));
}

TEST_CASE("solve: artifacts, manifest inventory and reproducible hashes") {
  Scratch s;
  const fs::path cfg = s.write("tiny.ini", kImpact);
  std::ostringstream log;
  REQUIRE(cmd_solve(cfg, to(s.dir / "a"), log) == kExitOk);
  REQUIRE(cmd_solve(cfg, to(s.dir / "b"), log) == kExitOk);
  const auto ma = read_json(s.dir / "a" / "manifest.json"), mb = read_json(s.dir / "b" / "manifest.json");
  CHECK(ma["files"] == mb["files"]);
  CHECK(ma["signature"] == mb["signature"]);
  CHECK(ma["residuals"]["max_violation"].get<double>() <= 1e-10);

  std::set<std::string> listed;
  for (const auto& f : ma["files"]) {
    const std::string rel = f["path"];
    listed.insert(rel);
    CHECK(sha256_file(s.dir / "a" / rel) == f["sha256"].get<std::string>());
  }
  for (const auto& entry : fs::recursive_directory_iterator(s.dir / "a"))
    if (entry.is_regular_file() && entry.path().filename() != "manifest.json")
      CHECK(listed.count(fs::relative(entry.path(), s.dir / "a").generic_string()) == 1);

  const std::string bin = slurp(s.dir / "a" / "values.bin");
  REQUIRE(bin.size() > 28);
  CHECK(bin.substr(0, 16) == std::string("\x89" "ADAPTEX-VAL\r\n\x1a\n", 16));
  CHECK(slurp(s.dir / "a" / "policy.csv").rfind("# adaptex policy v1", 0) == 0);
  CHECK(slurp(s.dir / "a" / "values_t0.csv").rfind("# adaptex values v1", 0) == 0);
}

TEST_CASE("dumps round-trip and reject a foreign grid") {
  Scratch s;
  const RunConfig c = parse(kImpact);
  const auto problem = make_problem(c);
  const SolveResult r = backward_solve(*problem, c.scheme);
  const PolicyGrid pol = extract_policy(r.field, *problem, c.scheme);
  write_value_dump(s.dir / "v.bin", r.field, {{"signature", "x"}});
  write_policy_dump(s.dir / "p.bin", pol, {{"signature", "x"}});
  nlohmann::json header;
  const ValueField back = read_value_dump(s.dir / "v.bin", problem->grid(), &header);
  CHECK(header["signature"] == "x");
  REQUIRE(back.slice_count() == r.field.slice_count());
  for (int j = 0; j < back.slice_count(); ++j) CHECK((back.slices[j] - r.field.slices[j]).abs().maxCoeff() == 0.0);
  const PolicyGrid pback = read_policy_dump(s.dir / "p.bin", problem->grid());
  CHECK(pback.actions == pol.actions);

  const Grid other({Axis::integers("x3", 1), Axis::uniform("x", 0.0, 1.0, 3, AxisKind::space)});
  CHECK_THROWS_AS(read_value_dump(s.dir / "v.bin", other), ArtifactError);
  CHECK_THROWS_AS(read_policy_dump(s.dir / "v.bin", problem->grid()), ArtifactError);
  CHECK_THROWS_AS(read_value_dump(s.dir / "missing.bin", problem->grid()), ArtifactError);
}

TEST_CASE("staged directory: commit replaces, abandon leaves nothing") {
  Scratch s;
  const fs::path target = s.dir / "t";
  fs::create_directories(target);
  std::ofstream(target / "old.txt") << "old";
  {
    StagedDirectory st(target);
    std::ofstream(st.path() / "new.txt") << "new";
  }
  CHECK(fs::exists(target / "old.txt"));
  {
    StagedDirectory st(target);
    std::ofstream(st.path() / "new.txt") << "new";
    st.commit();
  }
  CHECK(fs::exists(target / "new.txt"));
  CHECK_FALSE(fs::exists(target / "old.txt"));
  long entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(s.dir)) ++entries;
  CHECK(entries == 1);
}

TEST_CASE("simulate: missing artifact and signature mismatch exit 2 with no outputs") {
  Scratch s;
  const fs::path cfg = s.write("tiny.ini", kImpact);
  std::ostringstream log;
  CHECK(cmd_simulate(cfg, s.dir / "nothing", to(s.dir / "sim"), log) == kExitConfig);
  CHECK_FALSE(fs::exists(s.dir / "sim"));

  REQUIRE(cmd_solve(cfg, to(s.dir / "pol"), log) == kExitOk);
  std::string other = kImpact;
  other.replace(other.find("x1_count = 7"), 12, "x1_count = 9");
  CHECK(cmd_simulate(s.write("other.ini", other), s.dir / "pol", to(s.dir / "sim"), log) == kExitConfig);
  CHECK(log.str().find("signature") != std::string::npos);
  CHECK_FALSE(fs::exists(s.dir / "sim"));

  fs::remove(s.dir / "pol" / "policy.bin");
  CHECK(cmd_simulate(cfg, s.dir / "pol", to(s.dir / "sim"), log) == kExitConfig);
  CHECK_FALSE(fs::exists(s.dir / "sim"));
}

TEST_CASE("simulate: paired arms, trajectories and summary") {
  Scratch s;
  const fs::path cfg = s.write("limit.ini", kLimit);
  std::ostringstream log;
  REQUIRE(cmd_solve(cfg, to(s.dir / "pol"), log) == kExitOk);
  REQUIRE(cmd_simulate(cfg, s.dir / "pol", to(s.dir / "sim"), log) == kExitOk);
  const auto summary = read_json(s.dir / "sim" / "summary.json");
  CHECK(summary["arms"]["truth"]["paths"] == 4);
  CHECK(summary["arms"]["control"]["paths"] == 4);
  CHECK(summary["paired"]["statistic"] == "final_p");
  CHECK(fs::exists(s.dir / "sim" / "truth" / "path_00003.csv"));
  CHECK(slurp(s.dir / "sim" / "control" / "path_00000.csv").rfind("# adaptex trajectory v1 limit", 0) == 0);

  // Same seeds, same outputs.
  REQUIRE(cmd_simulate(cfg, s.dir / "pol", to(s.dir / "sim2"), log) == kExitOk);
  CHECK(read_json(s.dir / "sim" / "manifest.json")["files"] == read_json(s.dir / "sim2" / "manifest.json")["files"]);
}

TEST_CASE("validate: passes, and fails on an injected conjugate fault") {
  Scratch s;
  std::ostringstream ok;
  CHECK(cmd_validate(s.write("tiny.ini", kImpact), {}, ok) == kExitOk);
  CHECK(ok.str().find("FAIL") == std::string::npos);
  CHECK(ok.str().find("PASS coarse residuals") != std::string::npos);

  std::ostringstream bad;
  CHECK(cmd_validate(s.write("fault.ini", std::string(kImpact) + "[validate]\nfault = conjugate\n"), to(s.dir / "v"), bad) ==
        kExitCheckFailed);
  CHECK(bad.str().find("FAIL gaussian bayes") != std::string::npos);
  CHECK(bad.str().find("PASS impact oracle") != std::string::npos);
  CHECK_FALSE(fs::exists(s.dir / "v"));
}
