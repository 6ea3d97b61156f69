#pragma once
#include <string>
#include <utility>
#include <vector>

namespace anodiss {

// Feasibility of (alpha, eps, delta): the three alpha-inequalities plus the
// eps-delta inequality 2d^2+d^3 >= e(1+d)^2+2e, and the margin value eps_tilde
// extracted from the Holder-increment inequalities.
struct FeasibilityReport {
  double alpha = 0, eps = 0, delta = 0;
  double margin[4] = {0, 0, 0, 0};
  double eps_tilde = 0;
  bool feasible = false;
  bool open_condition = false;  // eps > 0 and delta > 0
};

FeasibilityReport check_feasibility(double alpha, double eps, double delta);

// Deterministic search: delta = 2^-k, eps = delta^3, first feasible pair.
std::pair<double, double> find_eps_delta(double alpha);

enum class Regime { Paper, Desk };

struct ParamRow {
  double log_a = 0;
  double log_n_exact = 0;  // n_q = a_{q-1}^{-delta}/2 (q >= 1)
  long long n_round = 0;   // even integer >= 10; 0 when not representable
  double log_n = 0;        // value used downstream
  double log_N = 0;
  double log_A = 0, log_Abar = 0, log_B = 0, log_L = 0;
  double log_v = 0, log_kappa = 0, log_ell = 0;
  bool positive = true;  // B_q > 0 and L_q > 0
};

struct ParamTable {
  Regime regime = Regime::Paper;
  double eps = 0, delta = 0;
  double log_a0 = 0;
  double log_A0 = 0;  // = log_a0 unless capped in desk regime
  int q_max = 0;
  double eps_tilde = 0;
  bool degenerate = false;
  int first_bad_q = -1;
  std::vector<std::string> warnings;
  std::vector<ParamRow> rows;

  double a(int q) const;      // exp(log_a), 0 on underflow
  double A(int q) const;
  double Abar(int q) const;
  double B(int q) const;
  double L(int q) const;
  double v(int q) const;
  double kappa(int q) const;
  double ell(int q) const;
  long long n(int q) const;   // rounded n_q (desk); throws in paper regime
  double min_scale(int q) const;  // min(A_q, Abar_q) at level q
  uint64_t hash() const;
};

// log_A0 defaults to log_a0 (A_0 = a_0); the desk regime may cap A_0.
ParamTable build_table(double log_a0, double eps, double delta, int q_max, Regime regime,
                       double log_A0 = 1.0);

// Desk defaults: eps chosen so a0^(eps*delta) = 0.6, A_0 capped at 1/16.
ParamTable desk_table(double a0, double delta, int q_max, double eps_override = 0);

struct BoundCheck {
  int q = 0;
  std::string name;
  double lhs_log = 0, rhs_log = 0, slack_log = 0;
  bool satisfied = false;
};
struct BoundReport {
  std::vector<BoundCheck> checks;
  bool all_ok = true;
};

BoundReport verify_bounds(const ParamTable& t, double tol_log = 1e-9);

void write_table_csv(const ParamTable& t, const std::string& path);
ParamTable read_table_csv(const std::string& path);

}  // namespace anodiss
