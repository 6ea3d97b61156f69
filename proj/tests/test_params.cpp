#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>

#include "anodiss/params.hpp"
#include "anodiss/util.hpp"
#include "doctest.h"

using namespace anodiss;

static ParamTable reference_paper_table(int qmax = 40) {
  double delta = std::ldexp(1.0, -6);
  double eps = delta * delta * delta;
  double log_a0 = -std::log(2.0) / (eps * eps * delta);
  return build_table(log_a0, eps, delta, qmax, Regime::Paper);
}

TEST_CASE("feasibility margins and verdicts") {
  auto r = check_feasibility(0.5, 1e-9, 1e-3);
  CHECK(r.feasible);
  for (int i = 0; i < 4; ++i) CHECK(r.margin[i] > 0);
  CHECK(r.eps_tilde > 0);

  auto bad = check_feasibility(0.5, 0.2, 0.01);
  CHECK(!bad.feasible);
  CHECK(bad.margin[3] < 0);

  auto boundary = check_feasibility(0.999, 0.0, 0.0);
  CHECK(!boundary.open_condition);
  CHECK(!boundary.feasible);
  for (int i = 0; i < 3; ++i)
    CHECK(boundary.margin[i] == doctest::Approx(0.0005).epsilon(1e-12));

  CHECK_THROWS_AS(check_feasibility(1.0, 1e-3, 1e-3), config_error);
  CHECK_THROWS_AS(check_feasibility(0.5, -1e-3, 1e-3), config_error);
}

TEST_CASE("feasibility reduces to alpha<1 as eps,delta -> 0") {
  for (double alpha : {0.0, 0.3, 0.5}) {
    auto r = check_feasibility(alpha, 1e-9, 1e-9);
    double lim = (1 - alpha) / 2;
    for (int i = 0; i < 3; ++i)
      CHECK(std::fabs(r.margin[i] - lim) / lim < 1e-6);
  }
  // near alpha=1 the limit itself is small; deviation stays O(delta) absolute
  auto r = check_feasibility(0.999, 1e-9, 1e-9);
  for (int i = 0; i < 3; ++i)
    CHECK(std::fabs(r.margin[i] - 0.0005) < 1e-7);
}

TEST_CASE("find_eps_delta") {
  auto [eps, delta] = find_eps_delta(0.5);
  CHECK(delta == std::ldexp(1.0, -6));
  CHECK(eps == delta * delta * delta);
  CHECK(check_feasibility(0.5, eps, delta).feasible);

  auto [e0, d0] = find_eps_delta(0.0);
  CHECK(check_feasibility(0.0, e0, d0).feasible);

  auto [e9, d9] = find_eps_delta(0.9);
  CHECK(check_feasibility(0.9, e9, d9).feasible);

  CHECK_THROWS_AS(find_eps_delta(1.0), config_error);
}

TEST_CASE("paper table: base row and closed forms") {
  ParamTable t = reference_paper_table(8);
  CHECK(t.rows[0].log_A == t.log_a0);
  CHECK(t.rows[0].log_v == 0.0);
  CHECK(t.rows[0].log_B == doctest::Approx(std::log(0.25)));
  CHECK(t.rows[0].log_L == doctest::Approx(std::log(0.25)));
  CHECK(t.rows[0].log_N == 0.0);
  for (int q = 1; q <= 8; ++q) {
    // n_q = a_{q-1}^{-delta}/2, N_q = a0/a_q
    CHECK(t.rows[q].log_n_exact ==
          doctest::Approx(-t.delta * t.rows[q - 1].log_a - std::log(2.0)).epsilon(1e-12));
    CHECK(t.rows[q].log_N ==
          doctest::Approx(t.log_a0 - t.rows[q].log_a).epsilon(1e-12));
    // monotonicity in the paper regime: a, kappa, v all decreasing
    CHECK(t.rows[q].log_a < t.rows[q - 1].log_a);
    CHECK(t.rows[q].log_kappa < t.rows[q - 1].log_kappa);
    CHECK(t.rows[q].log_v < t.rows[q - 1].log_v);
  }
}

TEST_CASE("paper table: verify_bounds q=0..40") {
  ParamTable t = reference_paper_table(40);
  BoundReport rep = verify_bounds(t);
  for (auto& c : rep.checks) {
    INFO(c.name << " q=" << c.q << " lhs=" << c.lhs_log << " rhs=" << c.rhs_log);
    CHECK(c.satisfied);
  }
  CHECK(rep.all_ok);
}

TEST_CASE("perturbed recursion fails verification") {
  ParamTable t = reference_paper_table(12);
  // rebuild the a_q chain with delta*1.5 while keeping the declared delta
  for (int q = 1; q <= 12; ++q)
    t.rows[q].log_a = (1 + 1.5 * t.delta) * t.rows[q - 1].log_a;
  BoundReport rep = verify_bounds(t);
  CHECK(!rep.all_ok);
}

TEST_CASE("desk table defaults (a0=0.1, delta=0.3)") {
  ParamTable t = desk_table(0.1, 0.3, 2);
  // eps solves a0^(eps*delta) = 0.6
  CHECK(std::exp(t.eps * t.delta * t.log_a0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(std::exp(t.log_A0) == doctest::Approx(1.0 / 16).epsilon(1e-12));
  CHECK(t.n(1) == 10);
  CHECK(t.n(2) == 10);

  // hand-computed level values
  CHECK(t.Abar(1) == doctest::Approx(3.125e-3).epsilon(1e-9));
  CHECK(t.A(1) == doctest::Approx(2.5319e-3).epsilon(1e-3));
  CHECK(t.B(1) == doctest::Approx(9.96814e-3).epsilon(1e-3));
  CHECK(t.L(1) == doctest::Approx(0.0375).epsilon(1e-3));
  CHECK(t.v(1) == doctest::Approx(1.23428).epsilon(1e-3));
  CHECK(t.A(2) == doctest::Approx(9.6316e-5).epsilon(1e-3));
  CHECK(t.B(2) == doctest::Approx(3.1473e-3).epsilon(1e-3));
  CHECK(t.L(2) == doctest::Approx(1.91155e-3).epsilon(1e-3));
  CHECK(t.v(2) == doctest::Approx(1.62235).epsilon(1e-3));

  // flux consistency v_q A_q = v_{q-1} Abar_q and geometric margins
  for (int q = 1; q <= 2; ++q) {
    CHECK(t.v(q) * t.A(q) == doctest::Approx(t.v(q - 1) * t.Abar(q)).epsilon(1e-12));
    CHECK(t.B(q) >= 3 * t.A(q));
    CHECK(t.rows[q].log_v > t.rows[q - 1].log_v);  // desk regime: eps > 1/(2+delta)
  }
  CHECK(0.25 >= 3 * std::exp(t.log_A0));

  BoundReport rep = verify_bounds(t);
  CHECK(rep.all_ok);
}

TEST_CASE("degenerate desk table throws") {
  CHECK_THROWS_AS(desk_table(0.1, 0.3, 2, /*eps=*/0.05), numeric_error);
}

TEST_CASE("csv round trip") {
  ParamTable t = desk_table(0.1, 0.3, 2);
  std::string path = "/tmp/anodiss_test_table.csv";
  write_table_csv(t, path);
  ParamTable u = read_table_csv(path);
  CHECK(u.regime == t.regime);
  CHECK(u.eps == t.eps);
  CHECK(u.delta == t.delta);
  CHECK(u.log_a0 == t.log_a0);
  CHECK(u.log_A0 == t.log_A0);
  REQUIRE(u.rows.size() == t.rows.size());
  for (size_t i = 0; i < t.rows.size(); ++i) {
    CHECK(u.rows[i].log_a == t.rows[i].log_a);
    CHECK(u.rows[i].log_B == t.rows[i].log_B);
    CHECK(u.rows[i].log_ell == t.rows[i].log_ell);
    CHECK(u.rows[i].n_round == t.rows[i].n_round);
  }
  CHECK(u.hash() == t.hash());
  std::remove(path.c_str());
}

TEST_CASE("paper a0 below double range is handled in logs") {
  ParamTable t = reference_paper_table(4);
  CHECK(t.a(0) == 0.0);                 // underflows as a double, by design
  CHECK(std::isfinite(t.rows[4].log_a));
  CHECK(std::isfinite(t.rows[4].log_ell));
}
