#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>

#include "anodiss/harness.hpp"
#include "anodiss/util.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace anodiss;
namespace fs = std::filesystem;

static const double kPi = 3.14159265358979323846;

TEST_CASE("config: round trip, unknown keys, builtins") {
  ExperimentConfig c = builtin_config("fldiss-smoke");
  c.q_list = {0, 2};
  c.kappa_list = {1e-2, 1e-3};
  c.seed = 99;
  ExperimentConfig d = parse_config(serialize_config(c));
  CHECK(serialize_config(d) == serialize_config(c));
  CHECK(d.seed == 99);
  CHECK(d.q_list.size() == 2);
  CHECK_THROWS_AS(parse_config("bogus_key = 1\n"), config_error);
  CHECK_THROWS_AS(parse_config("regime = desk\nalpha\n"), config_error);
  CHECK_THROWS_AS(parse_config("regime = nope\n"), config_error);
  CHECK_THROWS_AS(parse_config("alpha = two\n"), config_error);
  CHECK_THROWS_AS(builtin_config("nope"), config_error);
  ExperimentConfig h = builtin_config("heat-decay");
  CHECK(h.u_override == "zero");
  // comments and blank lines are ignored
  ExperimentConfig e = parse_config("# comment\n\nseed = 5 # trailing\n");
  CHECK(e.seed == 5);
}

TEST_CASE("heat-decay pipeline: closed form through files, idempotent rerun") {
  ExperimentConfig c = builtin_config("heat-decay");
  c.out_dir = "harness_tmp_heat";
  fs::remove_all(c.out_dir);
  RunManifest m1 = run_pipeline(c);
  REQUIRE(m1.stages.size() == 3);
  for (const StageRecord& s : m1.stages) CHECK(!s.skipped);
  CHECK(fs::exists(c.out_dir + "/table.csv"));
  CHECK(fs::exists(c.out_dir + "/field_q0.bin"));
  CHECK(fs::exists(c.out_dir + "/run_q0.csv"));
  CHECK(fs::exists(c.out_dir + "/manifest.json"));
  // final energy of the closed-form heat decay
  std::ifstream in(c.out_dir + "/run_q0.csv");
  std::string line, last;
  std::getline(in, line);
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  size_t c1 = last.find(','), c2 = last.find(',', c1 + 1);
  double eT = std::stod(last.substr(c1 + 1, c2 - c1 - 1));
  CHECK(eT == doctest::Approx(std::exp(-8 * kPi * kPi * 1e-3) / 2).epsilon(1e-8));
  RunManifest m2 = run_pipeline(c);
  REQUIRE(m2.stages.size() == 3);
  for (size_t i = 0; i < m2.stages.size(); ++i) {
    CHECK(m2.stages[i].skipped);
    REQUIRE(m2.stages[i].outputs.size() == m1.stages[i].outputs.size());
    for (size_t j = 0; j < m2.stages[i].outputs.size(); ++j)
      CHECK(m2.stages[i].outputs[j].second == m1.stages[i].outputs[j].second);
  }
  // a config change re-runs the affected stages
  c.seed = 123;
  RunManifest m3 = run_pipeline(c);
  for (const StageRecord& s : m3.stages) CHECK(!s.skipped);
  fs::remove_all(c.out_dir);
}

TEST_CASE("fldiss-smoke pipeline: report satisfies the FL-DISS budget") {
  ExperimentConfig c = builtin_config("fldiss-smoke");
  c.out_dir = "harness_tmp_smoke";
  fs::remove_all(c.out_dir);
  run_pipeline(c);
  nlohmann::json j = nlohmann::json::parse(read_text_file(c.out_dir + "/fldiss_q0.json"));
  double lhs = j["lhs"], rhs = j["rhs"], se = j["mc_se"], tol = j["pde_tol"],
         rel = j["rel_err"];
  CHECK(rhs == doctest::Approx((1 - std::exp(-8 * kPi * kPi * 1e-2)) / 2).epsilon(1e-7));
  CHECK(std::fabs(lhs - rhs) <= 3 * (se + tol * rhs));
  CHECK(rel <= 3 * (se + tol) / rhs);
  fs::remove_all(c.out_dir);
}

TEST_CASE("pipeline guards: paper regime, bad stage, kappa list size") {
  ExperimentConfig c = builtin_config("heat-decay");
  c.out_dir = "harness_tmp_guard";
  fs::remove_all(c.out_dir);
  c.regime = "paper";
  CHECK_THROWS_AS(run_pipeline(c), config_error);
  c.regime = "desk";
  c.stages = "params,teleport";
  CHECK_THROWS_AS(run_pipeline(c), config_error);
  c.stages = "params,fieldgen,pde";
  c.kappa_list = {1e-3, 1e-4};  // q_list has one entry
  CHECK_THROWS_AS(run_pipeline(c), config_error);
  fs::remove_all(c.out_dir);
}

TEST_CASE("built field through the pipeline") {
  ExperimentConfig c;
  c.q_list = {2};
  c.grid_res = 64;
  c.kappa_mode = "list";
  c.kappa_list = {1e-3};
  c.theta0 = "x";
  c.T = 0.1;
  c.stages = "params,fieldgen,pde";
  c.out_dir = "harness_tmp_u2";
  fs::remove_all(c.out_dir);
  RunManifest m = run_pipeline(c);
  CHECK(m.stages.size() == 3);
  CHECK(fs::exists(c.out_dir + "/field_q2.bin"));
  CHECK(fs::exists(c.out_dir + "/run_q2.csv"));
  fs::remove_all(c.out_dir);
}

TEST_CASE("report render: markdown, svg, missing inputs") {
  ExperimentConfig c = builtin_config("heat-decay");
  c.out_dir = "harness_tmp_report";
  fs::remove_all(c.out_dir);
  run_pipeline(c);
  std::vector<std::string> files = report_render(c.out_dir);
  REQUIRE(files.size() == 2);
  std::string md = read_text_file(c.out_dir + "/report.md");
  CHECK(md.find("## Parameters") != std::string::npos);
  CHECK(md.find("run_q0.csv") != std::string::npos);
  CHECK(md.find("missing: fldiss_q*.json") != std::string::npos);  // mc stage not run
  std::string svg = read_text_file(c.out_dir + "/run_q0_energy.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("<polyline") != std::string::npos);
  fs::remove_all(c.out_dir);
  fs::create_directories("harness_tmp_empty");
  CHECK_THROWS_AS(report_render("harness_tmp_empty"), config_error);
  CHECK_THROWS_AS(report_render("harness_tmp_missing_dir"), config_error);
  fs::remove_all("harness_tmp_empty");
}
