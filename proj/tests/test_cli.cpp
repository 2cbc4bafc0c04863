#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "stochproj/cli.hpp"
#include "stochproj/json_io.hpp"

using namespace stochproj;

namespace {

const std::string kData = STOCHPROJ_TEST_DATA;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string data(const std::string& name) { return kData + "/" + name; }

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("stochproj_test_" + name)).string();
}

}  // namespace

TEST_CASE("check-order: Dirac at the mean holds") {
  const auto r = run({"check-order", "--kind", "convex", data("dirac0.json"), data("pm1.json")});
  CHECK(r.code == 0);
  CHECK(r.out == slurp(data("golden/check_order_dirac.json")));
  const Json j = Json::parse(r.out);
  CHECK(j["holds"].get<bool>());
  CHECK(j["verified"].get<bool>());
}

TEST_CASE("check-order: reversed pair exits with a violation") {
  const auto r = run({"check-order", "--kind", "convex", data("pm1.json"), data("dirac0.json")});
  CHECK(r.code == 1);
  const Json j = Json::parse(r.out);
  CHECK_FALSE(j["holds"].get<bool>());
  CHECK(j["separator"]["gap"].get<double>() > 1e-9);
}

TEST_CASE("project: backward convex Dirac instance") {
  const auto r = run({"project", "--direction", "backward", "--order", "convex", data("dirac2.json"),
                      data("pm1.json")});
  CHECK(r.code == 0);
  CHECK(r.out.find("\"cost\": 4.0") != std::string::npos);
  CHECK(r.out == slurp(data("golden/project_dirac.json")));
  CHECK(r.out == run({"project", data("dirac2.json"), data("pm1.json")}).out);
}

TEST_CASE("project: forward convex with an explicit grid, CSV and LP dump") {
  const std::string out = temp_path("fwd.json"), csv = temp_path("fwd.csv"), lp = temp_path("fwd.lp");
  const auto r = run({"project", "--direction", "forward", "--grid", "-2,3,11", "--out", out, "--csv", csv,
                      "--dump-lp", lp, data("dirac2.json"), data("pm1.json")});
  CHECK(r.code == 0);
  CHECK(r.out.empty());
  const Json j = Json::parse(slurp(out));
  CHECK(j["cost"].get<double>() == doctest::Approx(4.0));
  CHECK(slurp(csv).rfind("row,col,mass\n", 0) == 0);
  CHECK(slurp(lp).rfind("# lp ", 0) == 0);
  for (const auto& p : {out, csv, lp}) std::remove(p.c_str());
}

TEST_CASE("gap reports primal, dual and the potential residual") {
  const auto r = run({"gap", data("dirac2.json"), data("pm1.json")});
  CHECK(r.code == 0);
  const Json j = Json::parse(r.out);
  CHECK(j["primal"].get<double>() == doctest::Approx(4.0));
  CHECK(j["dual"].get<double>() == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(std::abs(j["gap"].get<double>()) <= 1e-6);
  CHECK(j["potentialPropertyResidual"].get<double>() <= 1e-6);
}

TEST_CASE("subharmonic commands need a grid") {
  const auto r = run({"project", "--order", "subharmonic", data("dirac0.json"), data("pm1.json")});
  CHECK(r.code == 2);
  CHECK(r.err.find("--grid") != std::string::npos);
  const auto ok = run({"check-order", "--kind", "subharmonic", "--grid", "-2,2,9", data("dirac0.json"),
                       data("pm1.json")});
  CHECK(ok.code == 0);
}

TEST_CASE("malformed input exits 2 naming the field") {
  const auto bad = run({"check-order", data("bad_weights.json"), data("pm1.json")});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("mu.weights[1]") != std::string::npos);
  const auto ragged = run({"project", data("dirac0.json"), data("ragged.json")});
  CHECK(ragged.code == 2);
  CHECK(ragged.err.find("nu.points") != std::string::npos);
  const auto trunc = run({"check-order", data("truncated.json"), data("pm1.json")});
  CHECK(trunc.code == 2);
  CHECK(trunc.err.find("truncated.json") != std::string::npos);
  const auto grid = run({"project", "--direction", "forward", "--grid", "a,b", data("dirac0.json"),
                         data("pm1.json")});
  CHECK(grid.code == 2);
}

TEST_CASE("usage errors exit 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"project", "--direction", "up", data("dirac0.json"), data("pm1.json")}).code == 2);
  CHECK(run({"project", data("missing.json"), data("pm1.json")}).code == 2);
  CHECK(run({"project", "--dilate", "-1", "--direction", "forward", data("dirac0.json"), data("pm1.json")}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("solver failures exit 3") {
  // No measure on the single candidate node dominates a spread source.
  const auto r = run({"project", "--direction", "forward", "--grid", "0,1,2", data("pm1.json"), data("dirac0.json")});
  CHECK(r.code == 3);
  CHECK(r.err.find("solver failure") != std::string::npos);
}

TEST_CASE("transform applies grid operators") {
  const auto r = run({"transform", "--op", "envelope", data("function5.json")});
  CHECK(r.code == 0);
  const Json j = Json::parse(r.out);
  const auto v = j["values"].get<std::vector<double>>();
  REQUIRE(v.size() == 5);
  CHECK(v[1] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(v[2] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(v[0] == doctest::Approx(1.0));
  const auto q = run({"transform", "--op", "q2", "--grid", "-1,1,3", data("function5.json")});
  CHECK(q.code == 0);
  CHECK(Json::parse(q.out)["values"].size() == 3);
}

TEST_CASE("characterize consumes projection results") {
  const std::string b = temp_path("b.json"), f = temp_path("f.json");
  REQUIRE(run({"project", "--out", b, data("dirac2.json"), data("pm1.json")}).code == 0);
  REQUIRE(run({"project", "--direction", "forward", "--grid", "-2,3,21", "--out", f, data("dirac2.json"),
               data("pm1.json")}).code == 0);
  const auto r = run({"characterize", b, f});
  CHECK(r.code == 0);
  const Json j = Json::parse(r.out);
  CHECK(j["ok"].get<bool>());
  CHECK(j["inverse"]["joint_monotone"].get<bool>());
  CHECK(j["results"][0]["contraction"].get<bool>());
  std::remove(b.c_str());
  std::remove(f.c_str());
}

TEST_CASE("demo-geodesic leaves the cone at the midpoint") {
  const auto r = run({"demo-geodesic"});
  CHECK(r.code == 0);
  CHECK(r.out.find("\"order_holds\": false") != std::string::npos);
  const Json j = Json::parse(r.out);
  CHECK(j["endpoint_order_holds"].get<bool>());
  CHECK(j["midpoint"]["points"].size() == 4);
  CHECK(r.out == run({"demo-geodesic"}).out);
}

TEST_CASE("suite writes CSV rows") {
  const auto r = run({"suite", "--pairs", "6", "--projections", "2", "--transforms", "2"});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("invariant,trials,passed,worst_residual,tolerance\n", 0) == 0);
  CHECK(r.out.find("order_oracle_agreement,6,6,") != std::string::npos);
}
