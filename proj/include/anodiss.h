#ifndef ANODISS_H
#define ANODISS_H

#ifdef __cplusplus
extern "C" {
#endif

/* Error codes, mirrored as CLI exit codes. */
#define ANODISS_OK 0
#define ANODISS_ERR_CONFIG 2
#define ANODISS_ERR_NUMERIC 3
#define ANODISS_ERR_GEOMETRY 4

/* Opaque context; holds the last error message. Not thread-shared. */
typedef struct anodiss_ctx anodiss_ctx;

anodiss_ctx* anodiss_ctx_create(void);
void anodiss_ctx_destroy(anodiss_ctx* ctx);
const char* anodiss_last_error(const anodiss_ctx* ctx);
const char* anodiss_version(void);

/* Build a parameter table (regime "paper" or "desk") and write it as CSV.
 * eps <= 0 picks the regime default. check_bounds != 0 also verifies the
 * two-sided bounds and fails with ANODISS_ERR_NUMERIC when violated. */
int anodiss_params(anodiss_ctx* ctx, const char* regime, double a0, double delta, double eps,
                   int q_max, int check_bounds, const char* out_csv);

/* Feasibility of (alpha, eps, delta); one-line JSON into json_out. */
int anodiss_feasibility(anodiss_ctx* ctx, double alpha, double eps, double delta, char* json_out,
                        int json_len);

/* Mollified multiscale field u_q on an res x res grid, written as
 * ANODISS-FIELD v1. */
int anodiss_build_field(anodiss_ctx* ctx, const char* table_csv, int q, int res,
                        const char* out_bin);

/* Pipe-tree geometry of b_q as JSON. */
int anodiss_tree(anodiss_ctx* ctx, const char* table_csv, int q, const char* out_json);

/* Advection-diffusion solve; theta0 is one of x-coordinate|cosx|cosy|sinx|
 * stream. res > 0 resamples the field first. Writes run.csv. */
int anodiss_solve(anodiss_ctx* ctx, const char* field_bin, const char* theta0, double kappa,
                  double T, int res, const char* out_csv);

/* Backward-flow ensemble; starts is grid:m, dset:q (needs table_csv) or a
 * CSV file of x,y rows. Writes endpoint CSV. */
int anodiss_mc(anodiss_ctx* ctx, const char* field_bin, const char* table_csv, double kappa,
               double T, long long n_traj, double dt, unsigned long long seed, const char* starts,
               const char* out_csv);

/* Fluctuation-dissipation check on an m_grid x m_grid start grid. The one-line
 * JSON report goes to json_out and, when out_json is non-NULL, to that file. */
int anodiss_fldiss(anodiss_ctx* ctx, const char* field_bin, const char* theta0, double kappa,
                   double T, long long n_traj, double dt, unsigned long long seed, int m_grid,
                   const char* out_json, char* json_out, int json_len);

/* Dissipation ladder over comma-separated q values (pairs u_{q+2}, kappa_q,
 * kappa capped when kappa_cap > 0). Writes a CSV report. */
int anodiss_ladder(anodiss_ctx* ctx, const char* table_csv, const char* q_list,
                   const char* theta0, double T, int res, double kappa_cap, const char* out_csv);

/* 2.5-dimensional steady embedding: solves the scalar with kappa = nu,
 * assembles pressure and forcing, writes <prefix>_p.bin, <prefix>_f.bin and
 * <prefix>_residual.json; the max residual is returned via residual_out. */
int anodiss_ns3d(anodiss_ctx* ctx, const char* field_bin, double nu, const char* theta0, double T,
                 const char* out_prefix, double* residual_out);

/* Render report.md and SVG plots from a completed run directory. */
int anodiss_report(anodiss_ctx* ctx, const char* run_dir);

#ifdef __cplusplus
}
#endif

#endif /* ANODISS_H */
