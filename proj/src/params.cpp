#include "anodiss/params.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "anodiss/util.hpp"

namespace anodiss {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

// Sum of signed terms given as (sign, log|term|). Returns false when the sum
// is non-positive, otherwise stores log(sum).
bool signed_logsum(const std::vector<std::pair<int, double>>& terms, double* out) {
  double m = -HUGE_VAL;
  for (auto& t : terms) m = std::max(m, t.second);
  if (m == -HUGE_VAL) return false;
  double s = 0;
  for (auto& t : terms) s += t.first * std::exp(t.second - m);
  if (s <= 0) return false;
  *out = m + std::log(s);
  return true;
}

double rel_diff_log(double x, double y) {
  return std::fabs(x - y) / std::max({1.0, std::fabs(x), std::fabs(y)});
}

}  // namespace

FeasibilityReport check_feasibility(double alpha, double eps, double delta) {
  if (!(alpha >= 0 && alpha < 1) || eps < 0 || delta < 0)
    throw config_error("check_feasibility: need alpha in [0,1), eps >= 0, delta >= 0");
  FeasibilityReport r;
  r.alpha = alpha;
  r.eps = eps;
  r.delta = delta;
  r.open_condition = eps > 0 && delta > 0;
  const double d1 = 1 + delta;
  const double phi = 3 * eps + 3 * delta + d1 * d1 / (2 + delta);
  const double p3 = d1 * d1 * d1, p4 = p3 * d1, p5 = p4 * d1;
  r.margin[0] = 1.0 / (2 + delta) - (eps + alpha * p4 * phi);
  r.margin[1] = 1.0 - ((2 + delta) * eps + (1 + alpha) * p5 * phi);
  r.margin[2] = (1 + 2 * p5) / (2 + delta) - (eps + (2 + alpha) * p4 * phi);
  r.margin[3] = 2 * delta * delta + delta * delta * delta - eps * (d1 * d1 + 2);
  r.eps_tilde = std::max(
      0.0, std::min({r.margin[0] / p3, r.margin[1] / p5, r.margin[2] / p4}));
  r.feasible = r.open_condition && r.margin[0] > 0 && r.margin[1] > 0 &&
               r.margin[2] > 0 && r.margin[3] >= 0;
  return r;
}

std::pair<double, double> find_eps_delta(double alpha) {
  if (!(alpha >= 0 && alpha < 1))
    throw config_error("find_eps_delta: alpha must be in [0,1)");
  for (int k = 1; k <= 64; ++k) {
    double delta = std::ldexp(1.0, -k);
    double eps = delta * delta * delta;
    if (check_feasibility(alpha, eps, delta).feasible) return {eps, delta};
  }
  throw numeric_error("find_eps_delta: no feasible pair within 64 halvings");
}

ParamTable build_table(double log_a0, double eps, double delta, int q_max, Regime regime,
                       double log_A0) {
  if (!(log_a0 < 0)) throw config_error("build_table: need a0 in (0,1)");
  if (eps <= 0 || delta <= 0) throw config_error("build_table: need eps, delta > 0");
  if (q_max < 0) throw config_error("build_table: q_max >= 0");

  ParamTable t;
  t.regime = regime;
  t.eps = eps;
  t.delta = delta;
  t.log_a0 = log_a0;
  t.log_A0 = log_A0 <= 0 ? log_A0 : log_a0;
  t.q_max = q_max;
  t.eps_tilde = 0;

  if (eps * eps * delta * log_a0 > -kLn2) {
    if (regime == Regime::Paper)
      throw config_error("build_table: a0 too large, need a0^(eps^2 delta) <= 1/2");
    t.warnings.push_back("summability condition a0^(eps^2 delta) <= 1/2 waived (desk)");
  }

  const int qx = q_max + 2;  // extra levels for the mollification radii
  const double e1 = delta * eps - delta / (2 + delta);

  std::vector<double> la(qx + 1), ln_exact(qx + 1, 0), ln_used(qx + 1, 0);
  std::vector<long long> nr(qx + 1, 0);
  std::vector<double> lA(qx + 1), lAb(qx + 1), lB(qx + 1), lL(qx + 1), lv(qx + 1);
  std::vector<bool> pos(qx + 1, true);

  la[0] = log_a0;
  lA[0] = t.log_A0;
  lAb[0] = t.log_A0;
  lB[0] = std::log(0.25);
  lL[0] = std::log(0.25);
  lv[0] = 0.0;

  int bad_q = -1;
  for (int q = 0; q < qx; ++q) {
    la[q + 1] = (1 + delta) * la[q];
    ln_exact[q + 1] = -delta * la[q] - kLn2;
    if (regime == Regime::Desk) {
      double ne = std::exp(ln_exact[q + 1]);
      long long r2 = 2 * std::llround(ne / 2.0);
      nr[q + 1] = std::max<long long>(10, r2);
      ln_used[q + 1] = std::log((double)nr[q + 1]);
    } else {
      ln_used[q + 1] = ln_exact[q + 1];
    }
    lAb[q + 1] = lA[q] - kLn2 - ln_used[q + 1];
    lA[q + 1] = lAb[q + 1] + e1 * la[q];
    lv[q + 1] = lv[q] + lAb[q + 1] - lA[q + 1];  // = lv[q] - e1*la[q]

    double lb;
    bool okb = pos[q] && signed_logsum({{+1, lL[q]},
                                        {-1, ln_used[q + 1] + lA[q + 1]},
                                        {-1, kLn2 + lA[q]}},
                                       &lb);
    lB[q + 1] = okb ? lb - ln_used[q + 1] : -HUGE_VAL;

    double ll;
    bool okl = pos[q] && signed_logsum({{+1, lB[q] - kLn2},
                                        {-1, std::log(4.0) + lAb[q + 1]},
                                        {-1, lB[q] - kLn2 + eps * delta * la[q]}},
                                       &ll);
    lL[q + 1] = okl ? ll : -HUGE_VAL;

    pos[q + 1] = okb && okl;
    if (!pos[q + 1] && bad_q < 0) bad_q = q + 1;
  }

  if (bad_q >= 0 && bad_q <= q_max) {
    t.degenerate = true;
    t.first_bad_q = bad_q;
    throw numeric_error("build_table: B_q or L_q non-positive at q=" + std::to_string(bad_q));
  }

  // Desk sanity condition from the geometric construction's proof.
  if (regime == Regime::Desk) {
    double lhs = std::log(40.0) + eps * delta * log_a0;
    double rhs = lB[0] - lA[0];
    if (lhs > rhs)
      t.warnings.push_back("40*a0^(eps*delta) <= B0/A0 violated; bound proofs not certified");
  }

  t.rows.resize(q_max + 1);
  for (int q = 0; q <= q_max; ++q) {
    ParamRow& r = t.rows[q];
    r.log_a = la[q];
    r.log_n_exact = q ? ln_exact[q] : 0;
    r.n_round = q ? nr[q] : 0;
    r.log_n = q ? ln_used[q] : 0;
    r.log_N = log_a0 - la[q];
    r.log_A = lA[q];
    r.log_Abar = lAb[q];
    r.log_B = lB[q];
    r.log_L = lL[q];
    r.log_v = lv[q];
    r.log_kappa = 2 * lB[q];
    r.log_ell = (eps - e1) * la[q] + lAb[q + 2];
    r.positive = pos[q];
  }
  return t;
}

ParamTable desk_table(double a0, double delta, int q_max, double eps_override) {
  if (!(a0 >= 0.05 && a0 <= 0.3))
    throw config_error("desk_table: a0 must be in [0.05, 0.3]");
  if (!(delta >= 0.1 && delta <= 0.5))
    throw config_error("desk_table: delta must be in [0.1, 0.5]");
  double eps = eps_override > 0 ? eps_override
                                : std::log(1.0 / 0.6) / (delta * std::log(1.0 / a0));
  double A0 = std::min(a0, 1.0 / 16.0);
  ParamTable t = build_table(std::log(a0), eps, delta, q_max, Regime::Desk, std::log(A0));
  if (A0 < a0)
    t.warnings.push_back("A0 capped at 1/16 for the merge-turn height budget");
  if (!check_feasibility(0.5, eps, delta).feasible)
    t.warnings.push_back("(eps, delta) not feasible at alpha=0.5; desk regime waives feasibility");
  return t;
}

double ParamTable::a(int q) const { return std::exp(rows.at(q).log_a); }
double ParamTable::A(int q) const { return std::exp(rows.at(q).log_A); }
double ParamTable::Abar(int q) const { return std::exp(rows.at(q).log_Abar); }
double ParamTable::B(int q) const { return std::exp(rows.at(q).log_B); }
double ParamTable::L(int q) const { return std::exp(rows.at(q).log_L); }
double ParamTable::v(int q) const { return std::exp(rows.at(q).log_v); }
double ParamTable::kappa(int q) const { return std::exp(rows.at(q).log_kappa); }
double ParamTable::ell(int q) const { return std::exp(rows.at(q).log_ell); }
long long ParamTable::n(int q) const {
  if (regime != Regime::Desk) throw config_error("integer n_q available only in desk regime");
  return rows.at(q).n_round;
}
double ParamTable::min_scale(int q) const {
  return std::exp(std::min(rows.at(q).log_A, rows.at(q).log_Abar));
}

BoundReport verify_bounds(const ParamTable& t, double tol_log) {
  BoundReport rep;
  auto add = [&](int q, const std::string& name, double lhs, double rhs, bool ok) {
    rep.checks.push_back({q, name, lhs, rhs, rhs - lhs, ok});
    rep.all_ok = rep.all_ok && ok;
  };
  auto add_eq = [&](int q, const std::string& name, double lhs, double rhs) {
    add(q, name, lhs, rhs, rel_diff_log(lhs, rhs) <= tol_log);
  };
  // lhs <= rhs in log space with relative tolerance
  auto add_le = [&](int q, const std::string& name, double lhs, double rhs) {
    double scale = std::max({1.0, std::fabs(lhs), std::fabs(rhs)});
    add(q, name, lhs, rhs, lhs <= rhs + tol_log * scale);
  };

  const double eps = t.eps, delta = t.delta;
  const double beta = (1 + delta) / (2 + delta);
  const double cA = eps + beta;
  const double cv = -eps + 1.0 / (2 + delta);
  const double lB0 = t.rows[0].log_B, la0 = t.log_a0;

  for (int q = 0; q <= t.q_max; ++q) {
    const ParamRow& r = t.rows[q];
    add_eq(q, "a_closed", r.log_a, std::pow(1 + delta, q) * la0);
    add_eq(q, "N_closed", r.log_N, la0 - r.log_a);
    add_eq(q, "kappa_eq", r.log_kappa, 2 * r.log_B);
    if (q >= 1) {
      add_eq(q, "n_closed", r.log_n_exact, -delta * t.rows[q - 1].log_a - kLn2);
      if (t.regime == Regime::Paper) {
        add_eq(q, "A_closed", r.log_A, t.log_A0 + cA * (r.log_a - la0));
        add_eq(q, "Abar_closed", r.log_Abar,
               t.log_A0 - cA * la0 + (cA + delta) * t.rows[q - 1].log_a);
        add_eq(q, "v_closed", r.log_v, cv * (r.log_a - la0));
      }
    }
    if (t.regime == Regime::Paper) {
      // Two-sided bounds, anchored by parity: the recursion alternates
      // B_{q+1} ~ 2 L_q a_q^delta, L_{q+1} ~ B_q / 2, so even levels track
      // (B_0, a_0) and odd levels track (B_1, a_1) with the same exponent.
      auto b_mid = [&](int j) {
        if (j % 2 == 0) return lB0 + beta * (t.rows[j].log_a - la0);
        return t.rows[1].log_B + beta * (t.rows[j].log_a - t.rows[1].log_a);
      };
      add_le(q, "B_lower", b_mid(q) - kLn2, r.log_B);
      add_le(q, "B_upper", r.log_B, b_mid(q));
      add_le(q, "kappa_lower", 2 * b_mid(q) - 2 * kLn2, r.log_kappa);
      add_le(q, "kappa_upper", r.log_kappa, 2 * b_mid(q));
      if (q >= 1) {
        double l_mid = b_mid(q - 1) - kLn2;  // L_q ~ B_{q-1} / 2
        add_le(q, "L_lower", l_mid - kLn2, r.log_L);
        add_le(q, "L_upper", r.log_L, l_mid);
      }
      // summability: sum_{k>=q} a_k^{eps^2} <= 2 a_q^{eps^2}
      double e2 = eps * eps;
      std::vector<std::pair<int, double>> terms;
      for (int k = 0; k < 64; ++k)
        terms.push_back({1, e2 * std::pow(1 + delta, q + k) * la0});
      double ratio = std::exp(e2 * delta * la0);  // a0^(eps^2 delta) <= 1/2
      double tail = e2 * std::pow(1 + delta, q + 64) * la0 - std::log1p(-ratio);
      terms.push_back({1, tail});
      double lsum;
      signed_logsum(terms, &lsum);
      add_le(q, "summability", lsum, kLn2 + e2 * std::pow(1 + delta, q) * la0);
    } else if (q >= 1) {
      // desk: recursion self-consistency with the rounded n
      const ParamRow& p = t.rows[q - 1];
      add_eq(q, "Abar_rec", r.log_Abar, p.log_A - kLn2 - r.log_n);
      double e1 = delta * eps - delta / (2 + delta);
      add_eq(q, "A_rec", r.log_A, r.log_Abar + e1 * p.log_a);
      add_eq(q, "v_rec", r.log_v, p.log_v - e1 * p.log_a);
      add(q, "positive", 0, 0, r.positive);
    }
  }
  return rep;
}

void write_table_csv(const ParamTable& t, const std::string& path) {
  std::ostringstream o;
  o << "# anodiss-table v1\n";
  o << "# regime " << (t.regime == Regime::Paper ? "paper" : "desk") << "\n";
  o << "# eps " << fmt17(t.eps) << "\n";
  o << "# delta " << fmt17(t.delta) << "\n";
  o << "# log_a0 " << fmt17(t.log_a0) << "\n";
  o << "# log_A0 " << fmt17(t.log_A0) << "\n";
  o << "# eps_tilde " << fmt17(t.eps_tilde) << "\n";
  o << "# n_round";
  for (auto& r : t.rows) o << " " << r.n_round;
  o << "\n# log_n_exact";
  for (auto& r : t.rows) o << " " << fmt17(r.log_n_exact);
  o << "\n";
  for (auto& w : t.warnings) o << "# warning " << w << "\n";
  o << "q,log_a,log_n,log_N,log_A,log_Abar,log_B,log_L,log_v,log_kappa,log_ell\n";
  for (int q = 0; q <= t.q_max; ++q) {
    const ParamRow& r = t.rows[q];
    o << q << "," << fmt17(r.log_a) << "," << fmt17(r.log_n) << ","
      << fmt17(r.log_N) << "," << fmt17(r.log_A) << "," << fmt17(r.log_Abar)
      << "," << fmt17(r.log_B) << "," << fmt17(r.log_L) << "," << fmt17(r.log_v)
      << "," << fmt17(r.log_kappa) << "," << fmt17(r.log_ell) << "\n";
  }
  write_text_file(path, o.str());
}

ParamTable read_table_csv(const std::string& path) {
  std::istringstream in(read_text_file(path));
  ParamTable t;
  std::string line;
  std::vector<long long> nr;
  std::vector<double> lnx;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string key;
      ls >> key;
      if (key == "regime") {
        std::string v;
        ls >> v;
        t.regime = v == "paper" ? Regime::Paper : Regime::Desk;
      } else if (key == "eps") ls >> t.eps;
      else if (key == "delta") ls >> t.delta;
      else if (key == "log_a0") ls >> t.log_a0;
      else if (key == "log_A0") ls >> t.log_A0;
      else if (key == "eps_tilde") ls >> t.eps_tilde;
      else if (key == "n_round") {
        long long v;
        while (ls >> v) nr.push_back(v);
      } else if (key == "log_n_exact") {
        double v;
        while (ls >> v) lnx.push_back(v);
      } else if (key == "warning") {
        std::string rest;
        std::getline(ls, rest);
        t.warnings.push_back(rest.empty() ? "" : rest.substr(1));
      }
      continue;
    }
    if (!header_seen) {  // column header
      header_seen = true;
      continue;
    }
    ParamRow r;
    int q;
    char c;
    std::istringstream ls(line);
    ls >> q >> c >> r.log_a >> c >> r.log_n >> c >> r.log_N >> c >> r.log_A >>
        c >> r.log_Abar >> c >> r.log_B >> c >> r.log_L >> c >> r.log_v >> c >>
        r.log_kappa >> c >> r.log_ell;
    if (!ls) throw config_error("read_table_csv: malformed row in " + path);
    r.positive = true;
    t.rows.push_back(r);
  }
  if (t.rows.empty()) throw config_error("read_table_csv: no rows in " + path);
  t.q_max = (int)t.rows.size() - 1;
  for (size_t i = 0; i < t.rows.size(); ++i) {
    if (i < nr.size()) t.rows[i].n_round = nr[i];
    if (i < lnx.size()) t.rows[i].log_n_exact = lnx[i];
  }
  return t;
}

uint64_t ParamTable::hash() const {
  std::ostringstream o;
  o << (regime == Regime::Paper ? "p" : "d") << "," << fmt17(eps) << ","
    << fmt17(delta) << "," << fmt17(log_a0) << "," << fmt17(log_A0) << ","
    << q_max;
  for (auto& r : rows) o << "," << fmt17(r.log_a) << "," << r.n_round;
  return fnv1a64(o.str());
}

}  // namespace anodiss
