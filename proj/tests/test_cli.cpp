#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>  // popen
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "graphon/io.hpp"

using namespace graphon;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(GRAPHON_LAB_BIN) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult r;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string tmp_path(const std::string& name) {
  return std::string("cli_test_") + name;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string body_after_meta(const std::string& csv) {
  // strip "#" metadata lines
  std::stringstream ss(csv);
  std::string line, body;
  while (std::getline(ss, line))
    if (line.empty() || line[0] != '#') body += line + "\n";
  return body;
}

}  // namespace

TEST_CASE("solve at the ER point emits a constant-graphon JSON, exit 0") {
  auto r = run("--samples 500 solve --eps 0.5 --tau 0.125");
  REQUIRE(r.exit_code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["label"] == "A(1,0)");
  CHECK(std::abs(j["entropy"].get<double>() - std::log(2.0)) < 1e-9);
  CHECK(j["status"] == "Converged");
  CHECK(j["meta"]["seed"].get<std::uint64_t>() == 1);
  // round trip through classify
  const std::string gpath = tmp_path("er.json");
  std::ofstream(gpath) << j["graphon"].dump();
  auto c = run("classify " + gpath + " --eps 0.5 --tau 0.125");
  CHECK(c.exit_code == 0);
  CHECK(c.out.rfind("A(1,0)", 0) == 0);
  std::remove(gpath.c_str());
}

TEST_CASE("solve above the upper boundary exits 2") {
  auto r = run("--samples 50 solve --eps 0.5 --tau 0.36");
  CHECK(r.exit_code == 2);
}

TEST_CASE("usage errors exit 1") {
  CHECK(run("solve --eps 0.5").exit_code == 1);  // missing --tau
  CHECK(run("nonsense").exit_code == 1);
  CHECK(run("scan --line --grid --eps 0.7 --tau 0.3:0.31").exit_code == 1);
}

TEST_CASE("family-restricted solve matches the closed form") {
  auto r = run("--samples 100 solve --eps 0.5 --tau 0.1 --family A --m 2");
  REQUIRE(r.exit_code == 0);
  auto j = nlohmann::json::parse(r.out);
  FamilySpec s = solve_A(2, {0.5, 0.1});
  const auto probs = j["graphon"]["probs"];
  CHECK(std::abs(probs[0][0].get<double>() - s.b) < 1e-8);
  CHECK(std::abs(probs[1][1].get<double>() - s.a) < 1e-8);
}

TEST_CASE("classify reports ambiguity for tripodal coincidence") {
  FamilySpec b;
  b.family = Family::B;
  b.m = 2;
  b.a = 0.2;
  b.b = 0.7;
  b.d = 0.5;
  b.p = 0.9;
  b.c = 0.5;
  const std::string gpath = tmp_path("b21.json");
  save_graphon(build_family(b), gpath);
  auto r = run("classify " + gpath);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("B(2,1)") != std::string::npos);
  CHECK(r.out.find("ambiguous_with C(1,2)") != std::string::npos);
  std::remove(gpath.c_str());
}

TEST_CASE("sample emits a deterministic edge list") {
  const std::string gpath = tmp_path("const.json");
  save_graphon(MultipodalGraphon::constant(0.5), gpath);
  auto r1 = run("sample " + gpath + " --nodes 40 --sample-seed 9");
  auto r2 = run("sample " + gpath + " --nodes 40 --sample-seed 9");
  REQUIRE(r1.exit_code == 0);
  CHECK(r1.out == r2.out);
  // output is "u v" pairs after the metadata line
  std::stringstream ss(r1.out);
  std::string line;
  std::getline(ss, line);
  CHECK(line.rfind("# seed=9", 0) == 0);
  int edges = 0;
  while (std::getline(ss, line)) {
    int u = -1, v = -1;
    REQUIRE(std::sscanf(line.c_str(), "%d %d", &u, &v) == 2);
    CHECK(u < v);
    CHECK(v < 40);
    ++edges;
  }
  CHECK(edges > 200);  // ~390 expected for p=1/2 on 40 nodes
  std::remove(gpath.c_str());
}

TEST_CASE("line scan writes CSV with transitions; reruns are byte-identical") {
  const std::string csv = tmp_path("scan.csv");
  const std::string tcsv = tmp_path("trans.csv");
  const std::string args =
      "--samples 300 --seed 3 scan --line --eps 0.55 --tau 0.12:0.15 "
      "--steps 6 --out " + csv + " --transitions-out " + tcsv;
  REQUIRE(run(args).exit_code == 0);
  const std::string first = slurp(csv);
  REQUIRE(run(args).exit_code == 0);
  CHECK(body_after_meta(first) == body_after_meta(slurp(csv)));
  CHECK(first.rfind("# seed=3", 0) == 0);
  CHECK(first.find("epsilon,tau,tau_rescaled,entropy,beta,label,status,") !=
        std::string::npos);
  const std::string trans = slurp(tcsv);
  CHECK(trans.find("coord_low,coord_high,kind,") != std::string::npos);
  std::remove(csv.c_str());
  std::remove(tcsv.c_str());
}

TEST_CASE("stability command emits the boundary CSV") {
  const std::string csv = tmp_path("stab.csv");
  auto r = run("stability --n 3 --eps 0.73:0.74 --columns 2 --out " + csv);
  REQUIRE(r.exit_code == 0);
  const std::string text = slurp(csv);
  CHECK(text.find("epsilon,tau,det,ev1,ev2,ev3") != std::string::npos);
  // at least the two A(3,0) roots per column
  int rows = 0;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line))
    if (!line.empty() && line[0] != '#' && line[0] != 'e') ++rows;
  CHECK(rows >= 4);
  std::remove(csv.c_str());
}

TEST_CASE("boundary command caches tau_low with exact cusps") {
  const std::string csv = tmp_path("bnd.csv");
  auto r = run("--samples 200 boundary --eps 0.5:0.7 --mesh 9 --out " + csv);
  REQUIRE(r.exit_code == 0);
  std::ifstream in(csv);
  LowerBoundary lb = read_boundary_csv(in);
  CHECK(lb(2.0 / 3) == doctest::Approx(2.0 / 9).epsilon(1e-12));
  CHECK(lb(0.5) == 0.0);
  std::remove(csv.c_str());
}
