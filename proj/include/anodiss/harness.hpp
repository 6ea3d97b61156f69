#pragma once
#include <cstdint>
#include <string>
#include <vector>

namespace anodiss {

// key = value text config; unknown keys are config errors. q_list entries are
// field levels; per level the diffusivity comes from the table (kappa_{q-2},
// capped at 1e-3) or from kappa_list when kappa_mode = list.
struct ExperimentConfig {
  std::string regime = "desk";  // paper | desk
  double alpha = 0.5, eps = 0, delta = 0.3, a0 = 0.1;
  std::vector<int> q_list{2};
  int grid_res = 128;
  std::string kappa_mode = "table";  // table | list
  std::vector<double> kappa_list;
  long long n_traj = 1000;
  double mc_dt = 1e-3;
  double T = 1.0;
  uint64_t seed = 1;
  int fldiss_grid = 8;
  std::string theta0 = "x";     // x | cosx | cosy | sinx | stream
  std::string u_override;       // empty | zero
  std::string stages = "params,fieldgen,pde,mc";
  std::string out_dir = "run_out";
};

ExperimentConfig parse_config(const std::string& text);
std::string serialize_config(const ExperimentConfig& c);
ExperimentConfig builtin_config(const std::string& name);  // heat-decay | fldiss-smoke

struct StageRecord {
  std::string stage;
  uint64_t input_hash = 0;
  bool skipped = false;
  double wall_ms = 0;
  std::vector<std::pair<std::string, uint64_t>> outputs;  // path, content hash
};

struct RunManifest {
  uint64_t config_hash = 0;
  std::string code_version;
  std::vector<StageRecord> stages;
};

// Executes the stages named in the config, in order params -> fieldgen ->
// pde -> mc. A stage whose stamp (config + input hashes) matches a previous
// run and whose outputs are intact is skipped. Outputs are written with a
// .partial suffix and renamed on stage success, so failures leave .partial
// files behind.
RunManifest run_pipeline(const ExperimentConfig& c);

void write_manifest(const RunManifest& m, const std::string& path);

// Renders report.md and per-run SVG line plots from a completed directory;
// returns the written paths. Missing inputs are noted inside the report;
// a directory with none of the expected files is a config error.
std::vector<std::string> report_render(const std::string& run_dir);

}  // namespace anodiss
