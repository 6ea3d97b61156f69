#include "anodiss.h"

#include <cstring>
#include <sstream>
#include <string>

#include "anodiss/harness.hpp"
#include "anodiss/pde.hpp"
#include "anodiss/sde.hpp"
#include "anodiss/util.hpp"

using namespace anodiss;

struct anodiss_ctx {
  std::string err;
};

namespace {

template <class F>
int guarded(anodiss_ctx* ctx, F&& fn) {
  if (!ctx) return ANODISS_ERR_CONFIG;
  ctx->err.clear();
  try {
    fn();
    return ANODISS_OK;
  } catch (const config_error& e) {
    ctx->err = e.what();
    return ANODISS_ERR_CONFIG;
  } catch (const numeric_error& e) {
    ctx->err = e.what();
    return ANODISS_ERR_NUMERIC;
  } catch (const geometry_error& e) {
    ctx->err = e.what();
    return ANODISS_ERR_GEOMETRY;
  } catch (const std::exception& e) {
    ctx->err = e.what();
    return ANODISS_ERR_NUMERIC;
  }
}

std::string req(const char* s, const char* what) {
  if (!s || !*s) throw config_error(std::string("missing ") + what);
  return s;
}

std::string theta_kind(const std::string& s) {
  if (s == "x-coordinate") return "x";
  return s;
}

GridScalar theta_for(const std::string& kind, const GridField& u) {
  if (kind == "stream") return stream_function(u);
  return theta_init(theta_kind(kind), u.res);
}

void put_json(char* out, int len, const std::string& s) {
  if (!out || len <= 0) return;
  std::snprintf(out, (size_t)len, "%s", s.c_str());
}

std::vector<Vec2> parse_starts(const std::string& spec, const char* table_csv) {
  if (spec.rfind("grid:", 0) == 0) {
    int m = std::stoi(spec.substr(5));
    if (m < 1) throw config_error("starts grid size must be positive");
    std::vector<Vec2> starts;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) starts.push_back({(j + 0.5) / m, (i + 0.5) / m});
    return starts;
  }
  if (spec.rfind("dset:", 0) == 0) {
    int q = std::stoi(spec.substr(5));
    ParamTable t = read_table_csv(req(table_csv, "--table (needed for dset starts)"));
    AnalyticField f = build_bq(t, q);
    std::vector<RectFrame> rects = dissipative_rects(f, q);
    if (rects.empty()) throw config_error("dissipative set is empty");
    std::vector<Vec2> starts;
    size_t cap = 64, m = std::min(cap, rects.size());
    for (size_t k = 0; k < m; ++k) {
      const RectFrame& r = rects[k * rects.size() / m];
      starts.push_back(r.to_global({r.length / 2, 0}));
    }
    return starts;
  }
  std::stringstream ss(read_text_file(spec));
  std::string line;
  std::vector<Vec2> starts;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    size_t c = line.find(',');
    if (c == std::string::npos) continue;
    try {
      starts.push_back({std::stod(line.substr(0, c)), std::stod(line.substr(c + 1))});
    } catch (const std::exception&) {
      continue;  // header or stray line
    }
  }
  if (starts.empty()) throw config_error("no start points in " + spec);
  return starts;
}

}  // namespace

extern "C" {

anodiss_ctx* anodiss_ctx_create(void) { return new (std::nothrow) anodiss_ctx; }

void anodiss_ctx_destroy(anodiss_ctx* ctx) { delete ctx; }

const char* anodiss_last_error(const anodiss_ctx* ctx) { return ctx ? ctx->err.c_str() : ""; }

const char* anodiss_version(void) { return "1.0.0"; }

int anodiss_params(anodiss_ctx* ctx, const char* regime, double a0, double delta, double eps,
                   int q_max, int check_bounds, const char* out_csv) {
  return guarded(ctx, [&] {
    std::string reg = req(regime, "regime");
    ParamTable t;
    if (reg == "desk") {
      t = desk_table(a0, delta, q_max, eps > 0 ? eps : 0);
    } else if (reg == "paper") {
      if (!(eps > 0)) throw config_error("paper regime needs eps > 0");
      if (!(a0 > 0) || a0 >= 1) throw config_error("paper regime needs a0 in (0,1)");
      t = build_table(std::log(a0), eps, delta, q_max, Regime::Paper);
    } else {
      throw config_error("regime must be paper or desk");
    }
    if (check_bounds) {
      BoundReport r = verify_bounds(t);
      if (!r.all_ok) throw numeric_error("parameter bounds violated");
    }
    write_table_csv(t, req(out_csv, "output path"));
  });
}

int anodiss_feasibility(anodiss_ctx* ctx, double alpha, double eps, double delta, char* json_out,
                        int json_len) {
  return guarded(ctx, [&] {
    FeasibilityReport r = check_feasibility(alpha, eps, delta);
    std::string j = "{\"alpha\": " + fmt17(r.alpha) + ", \"eps\": " + fmt17(r.eps) +
                    ", \"delta\": " + fmt17(r.delta) + ", \"margins\": [" + fmt17(r.margin[0]) +
                    ", " + fmt17(r.margin[1]) + ", " + fmt17(r.margin[2]) + ", " +
                    fmt17(r.margin[3]) + "], \"eps_tilde\": " + fmt17(r.eps_tilde) +
                    ", \"feasible\": " + (r.feasible ? "true" : "false") + "}";
    put_json(json_out, json_len, j);
  });
}

int anodiss_build_field(anodiss_ctx* ctx, const char* table_csv, int q, int res,
                        const char* out_bin) {
  return guarded(ctx, [&] {
    ParamTable t = read_table_csv(req(table_csv, "table path"));
    write_field(build_uq(t, q, res), req(out_bin, "output path"));
  });
}

int anodiss_tree(anodiss_ctx* ctx, const char* table_csv, int q, const char* out_json) {
  return guarded(ctx, [&] {
    ParamTable t = read_table_csv(req(table_csv, "table path"));
    write_text_file(req(out_json, "output path"), tree_to_json(build_bq(t, q)));
  });
}

int anodiss_solve(anodiss_ctx* ctx, const char* field_bin, const char* theta0, double kappa,
                  double T, int res, const char* out_csv) {
  return guarded(ctx, [&] {
    GridField u = read_field(req(field_bin, "field path"));
    if (res > 0 && res != u.res) u = resample(u, res);
    SolveResult r = solve_adv_diff(u, theta_for(req(theta0, "theta0"), u), kappa, T);
    write_run_csv(r, req(out_csv, "output path"));
  });
}

int anodiss_mc(anodiss_ctx* ctx, const char* field_bin, const char* table_csv, double kappa,
               double T, long long n_traj, double dt, unsigned long long seed, const char* starts,
               const char* out_csv) {
  return guarded(ctx, [&] {
    GridField u = read_field(req(field_bin, "field path"));
    EnsembleSpec spec;
    spec.n_traj = n_traj;
    spec.dt = dt;
    spec.T = T;
    spec.seed = seed;
    TrajectoryBatch b =
        backward_flow_ensemble(u, kappa, spec, parse_starts(req(starts, "starts"), table_csv));
    write_endpoints_csv(b, req(out_csv, "output path"));
  });
}

int anodiss_fldiss(anodiss_ctx* ctx, const char* field_bin, const char* theta0, double kappa,
                   double T, long long n_traj, double dt, unsigned long long seed, int m_grid,
                   const char* out_json, char* json_out, int json_len) {
  return guarded(ctx, [&] {
    GridField u = read_field(req(field_bin, "field path"));
    EnsembleSpec spec;
    spec.n_traj = n_traj;
    spec.dt = dt;
    spec.T = T;
    spec.seed = seed;
    FldissReport rep =
        fldiss_check(u, theta_for(req(theta0, "theta0"), u), kappa, T, spec, m_grid);
    std::string j = rep.to_json();
    if (out_json && *out_json) write_text_file(out_json, j + "\n");
    put_json(json_out, json_len, j);
  });
}

int anodiss_ladder(anodiss_ctx* ctx, const char* table_csv, const char* q_list,
                   const char* theta0, double T, int res, double kappa_cap, const char* out_csv) {
  return guarded(ctx, [&] {
    ParamTable t = read_table_csv(req(table_csv, "table path"));
    std::vector<int> qs;
    std::stringstream ss(req(q_list, "q list"));
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) qs.push_back(std::stoi(tok));
    if (qs.empty()) throw config_error("empty q list");
    std::string kind = theta_kind(req(theta0, "theta0"));
    if (kind == "stream") throw config_error("ladder theta0 must be grid-independent");
    std::vector<LadderRow> rows = dissipation_ladder(t, qs, theta_init(kind, res), T, res,
                                                     kappa_cap);
    std::ostringstream o;
    o << "q,level,kappa,e0,DT,ratio\n";
    for (const LadderRow& r : rows)
      o << r.q << ',' << r.level << ',' << fmt17(r.kappa) << ',' << fmt17(r.e0) << ','
        << fmt17(r.DT) << ',' << fmt17(r.ratio) << '\n';
    write_text_file(req(out_csv, "output path"), o.str());
  });
}

int anodiss_ns3d(anodiss_ctx* ctx, const char* field_bin, double nu, const char* theta0, double T,
                 const char* out_prefix, double* residual_out) {
  return guarded(ctx, [&] {
    GridField u = read_field(req(field_bin, "field path"));
    SolveResult r = solve_adv_diff(u, theta_for(req(theta0, "theta0"), u), nu, T);
    NSFields ns = ns3d_assemble(u, nu, r);
    std::string pfx = req(out_prefix, "output prefix");
    write_scalar(ns.p, pfx + "_p.bin");
    write_field(ns.f, pfx + "_f.bin");
    write_text_file(pfx + "_residual.json",
                    "{\"residual\": " + fmt17(ns.residual) + ", \"residual_u\": " +
                        fmt17(ns.residual_u) + ", \"residual_theta\": " +
                        fmt17(ns.residual_theta) + "}\n");
    if (residual_out) *residual_out = ns.residual;
  });
}

int anodiss_report(anodiss_ctx* ctx, const char* run_dir) {
  return guarded(ctx, [&] { report_render(req(run_dir, "run directory")); });
}

}  // extern "C"
