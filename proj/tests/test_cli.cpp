// Drives the pnr binary end to end.

#include <gtest/gtest.h>
#include <json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#ifndef PNR_CLI_PATH
#error "PNR_CLI_PATH must name the pnr executable"
#endif

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

Outcome run(const std::string& args) {
  const std::string cmd = std::string(PNR_CLI_PATH) + " " + args + " 2>/dev/null";
  Outcome r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("pnr_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string file(const std::string& name) { return (dir_ / name).string(); }

  static std::string catalog(const std::string& name) {
    const std::string path = file(name + ".json");
    if (!fs::exists(path)) EXPECT_EQ(run("catalog " + name + " --out " + path).code, 0);
    return path;
  }

  static std::string write(const std::string& name, const std::string& text) {
    const std::string path = file(name);
    std::ofstream(path) << text;
    return path;
  }

  static inline fs::path dir_;
};

const nlohmann::json* find(const nlohmann::json& report, const std::string& name) {
  for (const auto& c : report["checks"])
    if (c["name"] == name) return &c;
  return nullptr;
}

}  // namespace

TEST_F(Cli, CatalogListsEntries) {
  const Outcome r = run("catalog --list");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("toda-volterra\n"), std::string::npos);
  EXPECT_NE(r.out.find("diagonal-quadratic-2\n"), std::string::npos);
  EXPECT_EQ(run("catalog no-such-entry").code, 2);
}

TEST_F(Cli, CheckPassesOnConsistentData) {
  const Outcome r = run("check " + catalog("diagonal-quadratic-3") + " --samples 5");
  EXPECT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["command"], "check");
  EXPECT_EQ(j["verdict"], "pass");
  ASSERT_NE(find(j, "pn.torsion"), nullptr);
  EXPECT_EQ((*find(j, "pn.torsion"))["status"], "pass");
  EXPECT_FALSE(find(j, "pn.torsion")->contains("runtime_ms"));
}

TEST_F(Cli, CheckFailsOnTorsion) {
  const Outcome r = run("check " + catalog("toda-volterra") + " --samples 5");
  EXPECT_EQ(r.code, 1);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["verdict"], "fail");
  EXPECT_EQ((*find(j, "pn.torsion"))["status"], "fail");
  EXPECT_EQ((*find(j, "poisson.jacobi"))["status"], "pass");
  EXPECT_EQ((*find(j, "connection.nabla_N"))["status"], "pass");
}

TEST_F(Cli, MissingNMarksChecksSkipped) {
  const std::string path = write("no_n.json", R"({"dimension": 3,
    "poisson": [{"i": 1, "j": 2, "expr": "x3"}, {"i": 2, "j": 3, "expr": "x1"}, {"i": 3, "j": 1, "expr": "x2"}],
    "connection": {"mode": "zero"},
    "patch": {"center": [0, 0, 0], "half_widths": [1, 1, 1]}})");
  const Outcome r = run("check " + path + " --samples 4");
  EXPECT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  for (const char* name : {"pn.torsion", "pn.concomitant", "hierarchy.compatibility"}) {
    ASSERT_NE(find(j, name), nullptr) << name;
    EXPECT_EQ((*find(j, name))["status"], "skipped") << name;
  }
  EXPECT_EQ((*find(j, "poisson.jacobi"))["status"], "pass");
}

TEST_F(Cli, RealizeIsDeterministic) {
  const std::string path = catalog("diagonal-quadratic-2");
  const Outcome a = run("realize " + path + " --steps 40 --samples 3");
  const Outcome b = run("realize " + path + " --steps 40 --samples 3");
  EXPECT_EQ(a.code, 0) << a.out;
  EXPECT_EQ(a.out, b.out);
  const auto j = nlohmann::json::parse(a.out);
  EXPECT_EQ(j["command"], "realize");
  EXPECT_NE(find(j, "realize.poisson_map_k0"), nullptr);
  EXPECT_NE(find(j, "realize.boundary_term_k1"), nullptr);
  const Outcome c = run("realize " + path + " --steps 40 --samples 3 --seed 7");
  EXPECT_NE(a.out, c.out);
}

TEST_F(Cli, CsvAndTimings) {
  const std::string path = catalog("diagonal-quadratic-2");
  const Outcome csv = run("check " + path + " --samples 3 --csv");
  EXPECT_EQ(csv.code, 0);
  EXPECT_EQ(csv.out.rfind("name,status,max_residual,tolerance,samples,seed\n", 0), 0u);
  const Outcome t = run("check " + path + " --samples 3 --timings");
  const auto j = nlohmann::json::parse(t.out);
  EXPECT_TRUE(j["checks"][0].contains("runtime_ms"));
  const std::string out = file("report.json");
  EXPECT_EQ(run("check " + path + " --samples 3 --out " + out).code, 0);
  EXPECT_TRUE(fs::exists(out));
}

TEST_F(Cli, InputErrorsExitWithTwo) {
  EXPECT_EQ(run("check " + file("missing.json")).code, 2);
  EXPECT_EQ(run("check " + write("broken.json", "{ not json")).code, 2);
  EXPECT_EQ(run("check " + write("badexpr.json", R"({"dimension": 2, "poisson": [{"i": 1, "j": 2, "expr": "x1 +"}],
    "patch": {"center": [0, 0], "half_widths": [1, 1]}})")).code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("check " + catalog("diagonal-quadratic-2") + " --steps 11").code, 2);
  const std::string solve = write("solve.json", R"({"dimension": 2, "poisson": [{"i": 1, "j": 2, "expr": "x1*x2"}],
    "nijenhuis": [["2", "0"], ["0", "2"]], "connection": {"mode": "solve"},
    "patch": {"center": [1, 1], "half_widths": [0.5, 0.5]}})");
  EXPECT_EQ(run("realize " + solve).code, 2);
  EXPECT_EQ(run("check " + solve + " --samples 3").code, 0);
}

TEST_F(Cli, SweepAndPencil) {
  const Outcome s = run("sweep " + catalog("diagonal-quadratic-2") + " --ymax-list 0.05,0.1 --steps 20 --samples 2");
  EXPECT_EQ(s.code, 0) << s.out;
  EXPECT_EQ(nlohmann::json::parse(s.out)["command"], "sweep");
  const Outcome p = run("pencil " + catalog("toda-volterra") + " " + catalog("toda-pi1") +
                    " --s-list 0,0.5,1 --steps 20 --samples 2");
  EXPECT_EQ(p.code, 0) << p.out;
  const auto j = nlohmann::json::parse(p.out);
  EXPECT_NE(find(j, "pencil.convex_spray"), nullptr);
}
