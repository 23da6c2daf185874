#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

std::string bin() {
  const char* b = std::getenv("CHAINLAB_BIN");
  return b ? b : "./sft-chainlab";
}

std::string example(const std::string& name) {
  const char* d = std::getenv("CHAINLAB_EXAMPLES");
  return (fs::path(d ? d : "problems") / (name + ".json")).string();
}

Run run(const std::string& args, const std::string& env = "") {
  std::string cmd = env + (env.empty() ? "" : " ") + "'" + bin() + "' " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class Scratch {
 public:
  Scratch() {
    dir_ = fs::temp_directory_path() / ("chainlab-test-" + std::to_string(getpid()) + "-" + std::to_string(counter_++));
    fs::create_directories(dir_);
  }
  ~Scratch() { fs::remove_all(dir_); }
  std::string write(const std::string& name, const std::string& text) const {
    auto p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

 private:
  fs::path dir_;
  static inline int counter_ = 0;
};

json read_json(const std::string& path) {
  std::ifstream in(path);
  return json::parse(in);
}

// Three orbits with d q_a = q_b; the perturbation adds d q_b = q_c, so d^2 q_a = q_c.
std::string chain_problem(bool perturbed) {
  json j = {{"schema", "sft-chainlab/1"},
            {"n", 2},
            {"action_bound", "10"},
            {"universes",
             {{"Y",
               {{"seeds",
                 {{{"name", "a"}, {"action", "3"}, {"parity", 1}, {"cz", 4}},
                  {{"name", "b"}, {"action", "2"}, {"parity", 0}, {"cz", 3}},
                  {{"name", "c"}, {"action", "1"}, {"parity", 1}, {"cz", 2}}}}}}}},
            {"tables",
             {{{"name", "d"},
               {"flavor", "I"},
               {"levels", {"Y"}},
               {"entries", {{{"in", "a"}, {"outs", {"b"}}, {"value", "1"}}}}}}}};
  if (perturbed) j["tables"][0]["entries"].push_back({{"in", "b"}, {"outs", {"c"}}, {"value", "1/2"}});
  return j.dump(2);
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> r;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) r.push_back(l);
  return r;
}

}  // namespace

TEST(Cli, EmptyUniverseValidates) {
  auto r = run("validate " + example("empty"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("cli.summary PASS validate"), std::string::npos);
}

TEST(Cli, VanishingExampleHasExactUnit) {
  auto r = run("homology --below 10 " + example("vanishing"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("unit exact: true; CH^{<10} = 0"), std::string::npos) << r.out;
}

TEST(Cli, EvenOrbitsHaveNoDifferential) {
  auto r = run("homology " + example("even-orbits"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("unit exact: false; CH^{<4}: even 8, odd 0"), std::string::npos) << r.out;
}

TEST(Cli, ExamplesRunAllTheirCommands) {
  for (auto name : {"empty", "vanishing", "even-orbits"}) {
    auto r = run("run " + example(name));
    EXPECT_EQ(r.code, 0) << name << "\n" << r.out;
  }
}

TEST(Cli, ConsistentTablePassesAndPerturbedTableFailsWithWitness) {
  Scratch s;
  auto good = s.write("good.json", chain_problem(false));
  auto bad = s.write("bad.json", chain_problem(true));
  EXPECT_EQ(run("d2 " + good).code, 0);
  auto r = run("d2 --json " + s.path("bad.report.json") + " " + bad);
  EXPECT_EQ(r.code, 1) << r.out;
  EXPECT_NE(r.out.find("dga.d_squared FAIL table d: d^2(q_a) has coefficient 1/2 on q_c"), std::string::npos) << r.out;
  auto j = read_json(s.path("bad.report.json"));
  EXPECT_EQ(j["schema"], "sft-chainlab-report/1");
  EXPECT_EQ(j["exit_code"], 1);
  EXPECT_FALSE(j["ok"].get<bool>());
  auto& w = j["checks"][0]["witness"];
  EXPECT_EQ(w["input"], "q_a");
  EXPECT_EQ(w["monomial"], "q_c");
  EXPECT_EQ(w["coefficient"], "1/2");
}

TEST(Cli, PerturbedTableHasResiduals) {
  Scratch s;
  auto r = run("residuals " + s.write("bad.json", chain_problem(true)));
  EXPECT_EQ(r.code, 1) << r.out;
  EXPECT_NE(r.out.find("counts.master_residual FAIL"), std::string::npos);
}

TEST(Cli, SyntaxErrorsAreLocatedByLineAndColumn) {
  Scratch s;
  auto f = s.write("broken.json", "{\n  \"schema\": ,\n}\n");
  auto r = run("validate " + f);
  EXPECT_EQ(r.code, 2) << r.out;
  EXPECT_NE(r.out.find("cli.parse FAIL " + f + ":2:13"), std::string::npos) << r.out;
}

TEST(Cli, SchemaErrorsAreLocatedByPointer) {
  Scratch s;
  auto j = json::parse(chain_problem(false));
  j["tables"][0]["entries"][0]["in"] = "nowhere";
  auto r = run("validate " + s.write("p.json", j.dump()));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("#/tables/0/entries/0/in: unknown orbit 'nowhere'"), std::string::npos) << r.out;

  j = json::parse(chain_problem(false));
  j["schema"] = "sft-chainlab/0";
  r = run("validate " + s.write("q.json", j.dump()));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("#/schema"), std::string::npos) << r.out;

  j = json::parse(chain_problem(false));
  j["tables"][0]["entries"][0]["value"] = 0.5;
  r = run("validate " + s.write("r.json", j.dump()));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("#/tables/0/entries/0/value"), std::string::npos) << r.out;
}

TEST(Cli, MissingActionBoundIsAnInputError) {
  Scratch s;
  auto j = json::parse(chain_problem(false));
  j.erase("action_bound");
  auto f = s.write("p.json", j.dump());
  EXPECT_EQ(run("d2 " + f).code, 2);
  EXPECT_EQ(run("d2 --below 5/2 " + f).code, 0);
  EXPECT_EQ(run("d2 --below x " + f).code, 2);
}

TEST(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("no-such-command " + example("empty")).code, 2);
  EXPECT_EQ(run("validate /no/such/file.json").code, 2);
  EXPECT_EQ(run("strata --tree nowhere " + example("even-orbits")).code, 2);
  EXPECT_EQ(run("d2 --table id " + example("even-orbits")).code, 2);
}

TEST(Cli, EveryReportLineCarriesACheckId) {
  std::regex line(R"(^[a-z_]+\.[a-z_]+ (PASS|FAIL|INFO) .*$)");
  for (auto name : {"empty", "vanishing", "even-orbits"}) {
    auto r = run("run " + example(name));
    for (auto& l : lines(r.out)) EXPECT_TRUE(std::regex_match(l, line)) << l;
  }
}

TEST(Cli, OutputIsIdenticalForAnyNumberOfJobs) {
  Scratch s;
  auto a = run("run --json " + s.path("a.json") + " " + example("even-orbits"));
  auto b = run("run --jobs 3 --json " + s.path("b.json") + " " + example("even-orbits"));
  auto c = run("run --json " + s.path("c.json") + " " + example("even-orbits"), "SFT_CHAINLAB_JOBS=4");
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out, c.out);
  EXPECT_EQ(read_json(s.path("a.json")), read_json(s.path("b.json")));
  EXPECT_EQ(read_json(s.path("a.json")), read_json(s.path("c.json")));
}

TEST(Cli, JobsEnvironmentVariableMustBePositive) {
  auto r = run("validate " + example("empty"), "SFT_CHAINLAB_JOBS=0");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("cli.parse FAIL SFT_CHAINLAB_JOBS"), std::string::npos) << r.out;
}

TEST(Cli, GlueVerifyDependsOnlyOnTheSeed) {
  Scratch s;
  auto f = example("even-orbits");
  auto a = run("glue-verify --samples 40 --seed 3 --tree two-level --csv " + s.path("csv") + " " + f);
  auto b = run("glue-verify --samples 40 --seed 3 --tree two-level " + f);
  auto c = run("glue-verify --samples 40 --seed 4 --tree two-level " + f);
  EXPECT_EQ(a.code, 0) << a.out;
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, c.out);
  std::ifstream csv(s.path("csv") + "/two-level.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_NE(header.find("dimension"), std::string::npos);
  size_t rows = 0;
  for (std::string l; std::getline(csv, l);) ++rows;
  EXPECT_EQ(rows, 40u);
}

TEST(Cli, SidecarMirrorsTheTextReport) {
  Scratch s;
  auto r = run("run --json " + s.path("r.json") + " " + example("even-orbits"));
  auto j = read_json(s.path("r.json"));
  auto ls = lines(r.out);
  ASSERT_EQ(j["checks"].size() + 1, ls.size());
  for (size_t i = 0; i < j["checks"].size(); ++i) EXPECT_EQ(ls[i].rfind(j["checks"][i]["id"].get<std::string>(), 0), 0u);
  EXPECT_TRUE(j["results"].contains("homology table d"));
  EXPECT_EQ(j["results"]["homology table d"]["even"], 8);
}

TEST(Cli, LiftingOutOfANonCofibrantModuleFails) {
  Scratch s;
  std::ifstream in(example("even-orbits"));
  auto j = json::parse(in);
  j["maps"].push_back({{"name", "self"},
                       {"source", "constant"},
                       {"target", "constant"},
                       {"components", {{"x", {{"0", {{"1"}}}}}, {"y", {{"0", {{"1"}}}}}, {"z", {{"0", {{"1"}}}}}}}});
  auto r = run("vfc-lift --module constant " + s.write("p.json", j.dump()));
  EXPECT_EQ(r.code, 1) << r.out;
  EXPECT_NE(r.out.find("vfc_algebra.lift FAIL module constant: map self: source constant is not cofibrant"),
            std::string::npos)
      << r.out;
}

TEST(Cli, StrataOfTheQSModuleHaveTheRootAsHocolim) {
  auto r = run("vfc-hocolim --tree plane " + example("vanishing"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("vfc_algebra.hocolim_final PASS"), std::string::npos) << r.out;
}

TEST(Cli, BrokenModulesFailValidation) {
  Scratch s;
  std::ifstream in(example("even-orbits"));
  auto j = json::parse(in);
  // x becomes acyclic in degrees 0..1 while the pushforward to z keeps the degree 0 identity.
  j["modules"][0]["values"]["x"] = {{"dims", {1, 1}}, {"d", {{"1", {{"1"}}}}}};
  j["modules"][0]["push"][0]["maps"]["1"] = json::array();
  auto r = run("validate " + s.write("p.json", j.dump()));
  EXPECT_EQ(r.code, 1) << r.out;
  EXPECT_NE(r.out.find("vfc_algebra.module FAIL module constant"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("vfc_algebra.module PASS module free"), std::string::npos) << r.out;
}

TEST(Cli, UnknownRequestedCommandIsLocated) {
  Scratch s;
  auto j = json::parse(chain_problem(false));
  j["commands"] = {"validate", "frobnicate"};
  auto r = run("run " + s.write("p.json", j.dump()));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("#/commands/1"), std::string::npos) << r.out;
}
