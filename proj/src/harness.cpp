#include "anodiss/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <sstream>

#include "anodiss/pde.hpp"
#include "anodiss/sde.hpp"
#include "anodiss/util.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace anodiss {

static const char* kVersion = "1.0.0";

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_num(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw config_error("bad numeric value for " + key + ": " + v);
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) throw config_error("config line without '=': " + line);
    std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    if (key == "regime") c.regime = val;
    else if (key == "alpha") c.alpha = to_num(key, val);
    else if (key == "eps") c.eps = to_num(key, val);
    else if (key == "delta") c.delta = to_num(key, val);
    else if (key == "a0") c.a0 = to_num(key, val);
    else if (key == "q_list") {
      c.q_list.clear();
      for (const std::string& v : split(val, ',')) c.q_list.push_back((int)to_num(key, v));
    } else if (key == "grid_res") c.grid_res = (int)to_num(key, val);
    else if (key == "kappa_mode") c.kappa_mode = val;
    else if (key == "kappa_list") {
      c.kappa_list.clear();
      for (const std::string& v : split(val, ',')) c.kappa_list.push_back(to_num(key, v));
    } else if (key == "n_traj") c.n_traj = (long long)to_num(key, val);
    else if (key == "mc_dt") c.mc_dt = to_num(key, val);
    else if (key == "T") c.T = to_num(key, val);
    else if (key == "seed") c.seed = (uint64_t)to_num(key, val);
    else if (key == "fldiss_grid") c.fldiss_grid = (int)to_num(key, val);
    else if (key == "theta0") c.theta0 = val;
    else if (key == "u_override") c.u_override = val;
    else if (key == "stages") c.stages = val;
    else if (key == "out_dir") c.out_dir = val;
    else throw config_error("unknown config key: " + key);
  }
  if (c.regime != "paper" && c.regime != "desk")
    throw config_error("regime must be paper or desk");
  if (c.kappa_mode != "table" && c.kappa_mode != "list")
    throw config_error("kappa_mode must be table or list");
  if (c.q_list.empty()) throw config_error("q_list is empty");
  return c;
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "regime = " << c.regime << "\n";
  o << "alpha = " << fmt17(c.alpha) << "\n";
  o << "eps = " << fmt17(c.eps) << "\n";
  o << "delta = " << fmt17(c.delta) << "\n";
  o << "a0 = " << fmt17(c.a0) << "\n";
  o << "q_list = ";
  for (size_t i = 0; i < c.q_list.size(); ++i) o << (i ? "," : "") << c.q_list[i];
  o << "\n";
  o << "grid_res = " << c.grid_res << "\n";
  o << "kappa_mode = " << c.kappa_mode << "\n";
  if (!c.kappa_list.empty()) {
    o << "kappa_list = ";
    for (size_t i = 0; i < c.kappa_list.size(); ++i) o << (i ? "," : "") << fmt17(c.kappa_list[i]);
    o << "\n";
  }
  o << "n_traj = " << c.n_traj << "\n";
  o << "mc_dt = " << fmt17(c.mc_dt) << "\n";
  o << "T = " << fmt17(c.T) << "\n";
  o << "seed = " << c.seed << "\n";
  o << "fldiss_grid = " << c.fldiss_grid << "\n";
  o << "theta0 = " << c.theta0 << "\n";
  if (!c.u_override.empty()) o << "u_override = " << c.u_override << "\n";
  o << "stages = " << c.stages << "\n";
  o << "out_dir = " << c.out_dir << "\n";
  return o.str();
}

ExperimentConfig builtin_config(const std::string& name) {
  ExperimentConfig c;
  if (name == "heat-decay") {
    c.u_override = "zero";
    c.q_list = {0};
    c.grid_res = 32;
    c.kappa_mode = "list";
    c.kappa_list = {1e-3};
    c.theta0 = "cosx";
    c.stages = "params,fieldgen,pde";
    c.out_dir = "run_heat";
    return c;
  }
  if (name == "fldiss-smoke") {
    c.u_override = "zero";
    c.q_list = {0};
    c.grid_res = 32;
    c.kappa_mode = "list";
    c.kappa_list = {1e-2};
    c.theta0 = "cosx";
    c.n_traj = 2000;
    c.mc_dt = 0.02;
    c.seed = 7;
    c.fldiss_grid = 4;
    c.out_dir = "run_fldiss_smoke";
    return c;
  }
  throw config_error("unknown builtin config: " + name);
}

namespace {

struct StampIo {
  // stamp file: input hash, then one "path hash" line per output
  static bool matches(const std::string& path, uint64_t in_hash,
                      std::vector<std::pair<std::string, uint64_t>>* outs) {
    if (!fs::exists(path)) return false;
    std::stringstream ss(read_text_file(path));
    std::string tok;
    uint64_t h = 0;
    ss >> std::hex >> h;
    if (h != in_hash) return false;
    std::string p;
    uint64_t oh;
    std::vector<std::pair<std::string, uint64_t>> seen;
    while (ss >> p >> std::hex >> oh) {
      if (!fs::exists(p) || hash_file(p) != oh) return false;
      seen.push_back({p, oh});
    }
    if (seen.empty()) return false;
    *outs = seen;
    return true;
  }
  static void write(const std::string& path, uint64_t in_hash,
                    const std::vector<std::pair<std::string, uint64_t>>& outs) {
    std::ostringstream o;
    o << std::hex << in_hash << "\n";
    for (const auto& [p, h] : outs) o << p << " " << std::hex << h << "\n";
    write_text_file(path, o.str());
  }
};

double kappa_for(const ExperimentConfig& c, const ParamTable& t, size_t i) {
  if (c.kappa_mode == "list") {
    if (c.kappa_list.size() != c.q_list.size())
      throw config_error("kappa_list must have one entry per q_list entry");
    return c.kappa_list[i];
  }
  return std::min(t.kappa(std::max(c.q_list[i] - 2, 0)), 1e-3);
}

GridScalar theta_for(const ExperimentConfig& c, const GridField& u) {
  if (c.theta0 == "stream") return stream_function(u);
  return theta_init(c.theta0, u.res);
}

}  // namespace

RunManifest run_pipeline(const ExperimentConfig& c) {
  std::vector<std::string> stages = split(c.stages, ',');
  for (const std::string& s : stages)
    if (s != "params" && s != "fieldgen" && s != "pde" && s != "mc")
      throw config_error("unknown stage: " + s);
  bool wants_fields = false;
  for (const std::string& s : stages)
    if (s != "params") wants_fields = true;
  if (c.regime == "paper" && wants_fields)
    throw config_error(
        "paper regime forbids field building: every level has min-scale far below 1e-6");
  fs::create_directories(c.out_dir);
  std::string cfg_text = serialize_config(c);

  RunManifest man;
  man.config_hash = fnv1a64(cfg_text);
  man.code_version = kVersion;

  ParamTable t = desk_table(c.a0, c.delta, std::max(2, *std::max_element(c.q_list.begin(),
                                                                         c.q_list.end())),
                            c.eps);
  auto out_path = [&](const std::string& name) { return c.out_dir + "/" + name; };
  std::string table_file = out_path("table.csv");
  std::vector<std::string> field_files, run_files, fldiss_files;
  for (int q : c.q_list) {
    field_files.push_back(out_path("field_q" + std::to_string(q) + ".bin"));
    run_files.push_back(out_path("run_q" + std::to_string(q) + ".csv"));
    fldiss_files.push_back(out_path("fldiss_q" + std::to_string(q) + ".json"));
  }

  auto run_stage = [&](const std::string& name, uint64_t in_hash,
                       const std::vector<std::string>& outs,
                       const std::function<void(const std::vector<std::string>&)>& body) {
    StageRecord rec;
    rec.stage = name;
    rec.input_hash = in_hash;
    std::string stamp = out_path(name + ".stamp");
    if (StampIo::matches(stamp, in_hash, &rec.outputs)) {
      rec.skipped = true;
      man.stages.push_back(rec);
      return;
    }
    auto t0 = std::chrono::steady_clock::now();
    std::vector<std::string> partials;
    for (const std::string& o : outs) partials.push_back(o + ".partial");
    body(partials);  // a throw leaves the .partial files behind
    for (size_t i = 0; i < outs.size(); ++i) {
      fs::rename(partials[i], outs[i]);
      rec.outputs.push_back({outs[i], hash_file(outs[i])});
    }
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();
    StampIo::write(stamp, in_hash, rec.outputs);
    man.stages.push_back(rec);
  };
  auto has_stage = [&](const std::string& s) {
    return std::find(stages.begin(), stages.end(), s) != stages.end();
  };
  auto chain_hash = [&](const std::string& name, const std::vector<std::string>& inputs) {
    uint64_t h = fnv1a64(cfg_text + name);
    for (const std::string& p : inputs) {
      uint64_t fh = hash_file(p);
      h = fnv1a64(&fh, sizeof fh, h);
    }
    return h;
  };

  if (has_stage("params"))
    run_stage("params", chain_hash("params", {}), {table_file},
              [&](const std::vector<std::string>& p) { write_table_csv(t, p[0]); });

  if (has_stage("fieldgen"))
    run_stage("fieldgen", chain_hash("fieldgen", {table_file}), field_files,
              [&](const std::vector<std::string>& p) {
                for (size_t i = 0; i < c.q_list.size(); ++i) {
                  GridField u;
                  if (c.u_override == "zero") {
                    u.res = c.grid_res;
                    u.q = c.q_list[i];
                    u.table_hash = t.hash();
                    u.ux.assign((size_t)c.grid_res * c.grid_res, 0.0);
                    u.uy.assign((size_t)c.grid_res * c.grid_res, 0.0);
                  } else {
                    u = build_uq(t, c.q_list[i], c.grid_res);
                  }
                  write_field(u, p[i]);
                }
              });

  if (has_stage("pde"))
    run_stage("pde", chain_hash("pde", field_files), run_files,
              [&](const std::vector<std::string>& p) {
                for (size_t i = 0; i < c.q_list.size(); ++i) {
                  GridField u = read_field(field_files[i]);
                  SolveResult r =
                      solve_adv_diff(u, theta_for(c, u), kappa_for(c, t, i), c.T);
                  write_run_csv(r, p[i]);
                }
              });

  if (has_stage("mc"))
    run_stage("mc", chain_hash("mc", field_files), fldiss_files,
              [&](const std::vector<std::string>& p) {
                for (size_t i = 0; i < c.q_list.size(); ++i) {
                  GridField u = read_field(field_files[i]);
                  EnsembleSpec spec;
                  spec.n_traj = c.n_traj;
                  spec.dt = c.mc_dt;
                  spec.T = c.T;
                  spec.seed = c.seed;
                  FldissReport rep = fldiss_check(u, theta_for(c, u), kappa_for(c, t, i), c.T,
                                                  spec, c.fldiss_grid);
                  write_text_file(p[i], rep.to_json() + "\n");
                }
              });

  write_manifest(man, out_path("manifest.json"));
  return man;
}

void write_manifest(const RunManifest& m, const std::string& path) {
  nlohmann::json j;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)m.config_hash);
  j["config_hash"] = buf;
  j["code_version"] = m.code_version;
  j["stages"] = nlohmann::json::array();
  for (const StageRecord& s : m.stages) {
    nlohmann::json js;
    js["stage"] = s.stage;
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)s.input_hash);
    js["input_hash"] = buf;
    js["skipped"] = s.skipped;
    js["wall_ms"] = s.wall_ms;
    js["outputs"] = nlohmann::json::array();
    for (const auto& [p, h] : s.outputs) {
      std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
      js["outputs"].push_back({{"path", p}, {"hash", buf}});
    }
    j["stages"].push_back(js);
  }
  write_text_file(path, j.dump(2) + "\n");
}

namespace {

struct RunCsv {
  std::vector<double> t, energy, diss_rate, cum_diss;
};

RunCsv read_run_csv(const std::string& path) {
  std::stringstream ss(read_text_file(path));
  std::string line;
  std::getline(ss, line);  // header
  RunCsv r;
  while (std::getline(ss, line)) {
    std::vector<std::string> cells = split(line, ',');
    if (cells.size() < 4) continue;
    r.t.push_back(std::stod(cells[0]));
    r.energy.push_back(std::stod(cells[1]));
    r.diss_rate.push_back(std::stod(cells[2]));
    r.cum_diss.push_back(std::stod(cells[3]));
  }
  return r;
}

std::string svg_plot(const std::vector<double>& x, const std::vector<double>& y,
                     const std::string& title) {
  const int W = 640, H = 400, ml = 70, mr = 20, mt = 30, mb = 40;
  double x0 = x.front(), x1 = x.back();
  double y0 = *std::min_element(y.begin(), y.end());
  double y1 = *std::max_element(y.begin(), y.end());
  if (y1 <= y0) y1 = y0 + 1;
  if (x1 <= x0) x1 = x0 + 1;
  auto px = [&](double v) { return ml + (v - x0) / (x1 - x0) * (W - ml - mr); };
  auto py = [&](double v) { return H - mb - (v - y0) / (y1 - y0) * (H - mt - mb); };
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n";
  o << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\"" << H - mb
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
    << "\" stroke=\"black\"/>\n";
  o << "<text x=\"" << ml << "\" y=\"" << H - mb + 16 << "\">" << fmt17(x0) << "</text>\n";
  o << "<text x=\"" << W - mr << "\" y=\"" << H - mb + 16 << "\" text-anchor=\"end\">" << fmt17(x1)
    << "</text>\n";
  o << "<text x=\"" << ml - 4 << "\" y=\"" << H - mb << "\" text-anchor=\"end\">" << fmt17(y0)
    << "</text>\n";
  o << "<text x=\"" << ml - 4 << "\" y=\"" << mt + 8 << "\" text-anchor=\"end\">" << fmt17(y1)
    << "</text>\n";
  o << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
  for (size_t i = 0; i < x.size(); ++i) o << px(x[i]) << "," << py(y[i]) << " ";
  o << "\"/>\n</svg>\n";
  return o.str();
}

}  // namespace

std::vector<std::string> report_render(const std::string& run_dir) {
  if (!fs::is_directory(run_dir)) throw config_error("not a directory: " + run_dir);
  std::vector<std::string> runs, fldiss;
  bool has_table = fs::exists(run_dir + "/table.csv");
  for (const auto& e : fs::directory_iterator(run_dir)) {
    std::string name = e.path().filename().string();
    if (name.rfind("run_q", 0) == 0 && name.size() > 4 &&
        name.substr(name.size() - 4) == ".csv")
      runs.push_back(name);
    if (name.rfind("fldiss_q", 0) == 0 && name.size() > 5 &&
        name.substr(name.size() - 5) == ".json")
      fldiss.push_back(name);
  }
  std::sort(runs.begin(), runs.end());
  std::sort(fldiss.begin(), fldiss.end());
  if (!has_table && runs.empty() && fldiss.empty())
    throw config_error("no report inputs in " + run_dir +
                       "; expected table.csv, run_q*.csv or fldiss_q*.json");
  std::vector<std::string> written;
  std::ostringstream md;
  md << "# Run report\n\n";
  if (has_table) {
    std::stringstream ss(read_text_file(run_dir + "/table.csv"));
    std::string line;
    md << "## Parameters\n\n```\n";
    for (int i = 0; i < 6 && std::getline(ss, line); ++i) md << line << "\n";
    md << "```\n\n";
  } else {
    md << "## Parameters\n\nmissing: table.csv\n\n";
  }
  md << "## Scalar runs\n\n";
  if (runs.empty()) md << "missing: run_q*.csv\n";
  else
    md << "| run | e(0) | e(T) | D(T) | D(T)/e(0) |\n|---|---|---|---|---|\n";
  for (const std::string& name : runs) {
    RunCsv r = read_run_csv(run_dir + "/" + name);
    if (r.t.size() < 2) {
      md << "| " << name << " | too few rows |\n";
      continue;
    }
    md << "| " << name << " | " << fmt17(r.energy.front()) << " | " << fmt17(r.energy.back())
       << " | " << fmt17(r.cum_diss.back()) << " | "
       << fmt17(r.cum_diss.back() / r.energy.front()) << " |\n";
    std::string svg_name = name.substr(0, name.size() - 4) + "_energy.svg";
    write_text_file(run_dir + "/" + svg_name, svg_plot(r.t, r.energy, "energy " + name));
    written.push_back(run_dir + "/" + svg_name);
  }
  md << "\n## Fluctuation-dissipation\n\n";
  if (fldiss.empty()) md << "missing: fldiss_q*.json\n";
  for (const std::string& name : fldiss)
    md << "- `" << name << "`: " << trim(read_text_file(run_dir + "/" + name)) << "\n";
  std::string report = run_dir + "/report.md";
  write_text_file(report, md.str());
  written.insert(written.begin(), report);
  return written;
}

}  // namespace anodiss
