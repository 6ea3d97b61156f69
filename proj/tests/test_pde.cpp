#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <fstream>

#include "anodiss/pde.hpp"
#include "doctest.h"

using namespace anodiss;

static const double kPi = 3.14159265358979323846;

static GridField const_field(int n, double vx, double vy) {
  GridField g;
  g.res = n;
  g.ux.assign((size_t)n * n, vx);
  g.uy.assign((size_t)n * n, vy);
  return g;
}

static GridScalar make_scalar(int n, double (*fn)(double, double)) {
  GridScalar g;
  g.res = n;
  g.a.resize((size_t)n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g.a[(size_t)i * n + j] = fn((double)j / n, (double)i / n);
  return g;
}

TEST_CASE("heat eigenfunction: closed-form energy, dissipation, solution") {
  int n = 64;
  double kap = 1e-3, T = 1.0;
  SolveConfig cfg;
  cfg.dt = 1e-3;
  SolveResult r = solve_adv_diff(const_field(n, 0, 0), theta_init("cosx", n), kap, T, cfg);
  CHECK(r.steps == 1000);
  CHECK(r.t.size() == 1001);  // every step saved
  for (size_t k = 0; k < r.t.size(); ++k) {
    double decay = std::exp(-8 * kPi * kPi * kap * r.t[k]);
    CHECK(r.energy[k] == doctest::Approx(decay / 2).epsilon(1e-10));
    CHECK(r.cum_diss[k] == doctest::Approx((1 - decay) / 4).epsilon(1e-10));
    CHECK(r.diss_rate[k] == doctest::Approx(kap * 4 * kPi * kPi * decay / 2).epsilon(1e-10));
    CHECK(r.max_theta[k] <= 1 + 1e-6);
    if (k) {
      CHECK(r.energy[k] <= r.energy[k - 1]);
      CHECK(r.cum_diss[k] >= r.cum_diss[k - 1]);
    }
  }
  CHECK(r.energy_residual <= 1e-12);
  double decay_T = std::exp(-4 * kPi * kPi * kap * T);
  for (int j = 0; j < n; ++j) {
    double want = decay_T * std::cos(2 * kPi * j / (double)n);
    CHECK(r.theta_T.a[j] == doctest::Approx(want).epsilon(1e-10));
  }
  CHECK(std::fabs(r.theta_T.mean()) <= 1e-14);
}

TEST_CASE("shear orthogonal to the gradient leaves the decay unchanged") {
  int n = 64;
  double kap = 1e-3, T = 0.5, v = 0.7;
  SolveResult r = solve_adv_diff(const_field(n, v, 0), theta_init("cosy", n), kap, T);
  double decay = std::exp(-8 * kPi * kPi * kap * T);
  CHECK(r.energy.back() == doctest::Approx(decay / 2).epsilon(1e-10));
  CHECK(r.energy_residual <= 1e-12);
}

TEST_CASE("traveling wave: advected cosine matches the exact solution") {
  int n = 64;
  double kap = 1e-3, T = 0.5, v = 0.5;
  SolveConfig cfg;
  cfg.dt = 1e-3;
  SolveResult r = solve_adv_diff(const_field(n, v, 0), theta_init("cosx", n), kap, T, cfg);
  double decay = std::exp(-4 * kPi * kPi * kap * T);
  for (int j = 0; j < n; ++j) {
    double want = decay * std::cos(2 * kPi * (j / (double)n - v * T));
    CHECK(r.theta_T.a[j] == doctest::Approx(want).epsilon(1e-8));
  }
  CHECK(r.energy.back() == doctest::Approx(decay * decay / 2).epsilon(1e-10));
}

TEST_CASE("fourth-order time stepping: halving dt shrinks the error >= 3.5x") {
  int n = 64;
  double kap = 1e-3, T = 0.5, v = 1.0;
  auto err = [&](double dt) {
    SolveConfig cfg;
    cfg.dt = dt;
    SolveResult r = solve_adv_diff(const_field(n, v, 0), theta_init("cosx", n), kap, T, cfg);
    double decay = std::exp(-4 * kPi * kPi * kap * T), m = 0;
    for (int j = 0; j < n; ++j) {
      double want = decay * std::cos(2 * kPi * (j / (double)n - v * T));
      m = std::max(m, std::fabs(r.theta_T.a[j] - want));
    }
    return m;
  };
  double e1 = err(2e-3), e2 = err(1e-3);
  CHECK(e1 > 1e-12);  // above the roundoff floor, so the ratio is meaningful
  CHECK(e1 / e2 >= 3.5);
  CHECK(e1 / e2 <= 40.0);  // and consistent with 4th order (~16x)
}

TEST_CASE("solver guards: CFL, bad kappa, zero datum") {
  int n = 32;
  SolveConfig cfg;
  cfg.dt = 1.0;  // |u| dt = 1 >> 0.5/n
  CHECK_THROWS_AS(solve_adv_diff(const_field(n, 1, 0), theta_init("cosx", n), 1e-3, 2.0, cfg),
                  config_error);
  CHECK_THROWS_AS(solve_adv_diff(const_field(n, 0, 0), theta_init("cosx", n), -1e-3, 1.0),
                  config_error);
  GridScalar zero;
  zero.res = n;
  zero.a.assign((size_t)n * n, 0.0);
  CHECK_THROWS_AS(solve_adv_diff(const_field(n, 0, 0), zero, 1e-3, 1.0), config_error);
}

TEST_CASE("rough built field: mean conserved, max principle, energy equality") {
  ParamTable t = desk_table(0.1, 0.3, 2);
  int n = 128;
  GridField u = build_uq(t, 2, n);
  GridScalar th0 = theta_init("x", n);
  SolveResult r = solve_adv_diff(u, th0, 1e-3, 0.1);
  CHECK(std::fabs(r.theta_T.mean() - th0.mean()) <= 1e-12);
  double hi0 = r.max_theta.front(), lo0 = r.min_theta.front();
  for (size_t k = 0; k < r.t.size(); ++k) {
    CHECK(r.max_theta[k] <= hi0 + 1e-6);
    CHECK(r.min_theta[k] >= lo0 - 1e-6);
  }
  CHECK(r.energy_residual <= 1e-8);
  CHECK(r.cum_diss.back() > 0);
}

TEST_CASE("sawtooth and periodic initial data") {
  int n = 128;
  GridScalar x = theta_init("x", n);
  CHECK(x.mean() == doctest::Approx(0.5 - 0.5 / n).epsilon(1e-12));  // grid mean of j/n
  // smoothed sawtooth tracks x away from the jump
  CHECK(x.eval({0.5, 0.25}) == doctest::Approx(0.5).epsilon(1e-2));
  CHECK(x.eval({0.25, 0.8}) == doctest::Approx(0.25).epsilon(1e-2));
  GridScalar s = theta_init("sinx", n);
  CHECK(s.eval({0.25, 0.5}) == doctest::Approx(1 / (2 * kPi)).epsilon(1e-12));
  CHECK_THROWS_AS(theta_init("bogus", n), config_error);
}

TEST_CASE("time-derivative bound: exact cases and a built field") {
  int n = 64;
  double kap = 1e-3;
  SolveConfig cfg;
  cfg.save_snapshots = true;
  GridScalar th0 = theta_init("cosx", n);
  {
    GridField u = const_field(n, 0, 0);
    SolveResult r = solve_adv_diff(u, th0, kap, 0.5, cfg);
    DerivBoundReport rep = time_derivative_bound_check(r, u, th0);
    CHECK(rep.bound == doctest::Approx(4 * kPi * kPi).epsilon(1e-9));
    // ||d theta/dt|| = 4 pi^2 kappa at t=0; the snapshot difference averages it
    CHECK(rep.max_rate <= 4 * kPi * kPi * kap * 1.001);
    CHECK(rep.max_rate >= 4 * kPi * kPi * kap * 0.5);
    CHECK(rep.margin >= 0);
  }
  {
    GridField u = const_field(n, 1, 0);
    SolveResult r = solve_adv_diff(u, th0, kap, 0.5, cfg);
    DerivBoundReport rep = time_derivative_bound_check(r, u, th0);
    CHECK(rep.bound == doctest::Approx(2 * kPi + 4 * kPi * kPi).epsilon(1e-9));
    CHECK(rep.max_rate <= 2 * kPi + 4 * kPi * kPi * kap);
    CHECK(rep.margin >= 0);
  }
  {
    ParamTable t = desk_table(0.1, 0.3, 2);
    GridField u = build_uq(t, 2, 128);
    GridScalar h0 = theta_init("cosx", 128);
    SolveResult r = solve_adv_diff(u, h0, kap, 0.1, cfg);
    DerivBoundReport rep = time_derivative_bound_check(r, u, h0);
    CHECK(rep.margin >= 0);
  }
  SolveResult bare = solve_adv_diff(const_field(n, 0, 0), th0, kap, 0.1);
  CHECK_THROWS_AS(time_derivative_bound_check(bare, const_field(n, 0, 0), th0), config_error);
}

TEST_CASE("stream-function initial datum: dissipation within the kappa budget") {
  int n = 64;
  GridScalar H = make_scalar(n, [](double, double y) { return std::cos(2 * kPi * y); });
  GridField u = perp_gradient(H);  // shear (-2 pi sin(2 pi y), 0)
  double T = 0.5;
  std::vector<StreamIcRow> rows = stream_ic_experiment(u, H, {1e-2, 1e-3, 1e-4}, T);
  REQUIRE(rows.size() == 3);
  for (size_t i = 0; i < rows.size(); ++i) {
    // u . grad H = 0 for a shear stream function, so theta decays as pure heat
    double decay = std::exp(-8 * kPi * kPi * rows[i].kappa * T);
    CHECK(rows[i].e0 == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(rows[i].DT == doctest::Approx((1 - decay) / 4).epsilon(1e-9));
    CHECK(rows[i].budget == doctest::Approx(rows[i].kappa * T * 2 * kPi * kPi).epsilon(1e-9));
    CHECK(rows[i].DT <= rows[i].budget);
    if (i) CHECK(rows[i].ratio < rows[i - 1].ratio);  // ratio shrinks with kappa
  }
}

TEST_CASE("velocity stability: perturbation bounded by the L2 budget") {
  int n = 64;
  double kap = 1e-3, T = 0.5, dv = 1e-3;
  GridScalar th0 = theta_init("cosx", n);
  GridField u1 = const_field(n, 0, 0), u2 = const_field(n, dv, 0);
  StabilityReport same = velocity_stability_check(u1, u1, th0, kap, T);
  CHECK(same.lhs <= 1e-24);
  StabilityReport rep = velocity_stability_check(u1, u2, th0, kap, T);
  CHECK(rep.rhs == doctest::Approx(dv * dv * T / kap).epsilon(1e-12));
  CHECK(rep.lhs > 0);
  CHECK(rep.lhs <= 2 * rep.rhs);
  // solutions differ by a translation dv T: |theta1 - theta2|^2 integrates to
  // 2 sin^2(pi dv T) e^{-8 pi^2 kappa T} exactly
  double want = 2 * std::pow(std::sin(kPi * dv * T), 2) * std::exp(-8 * kPi * kPi * kap * T);
  CHECK(rep.lhs == doctest::Approx(want).epsilon(1e-4));
}

TEST_CASE("dissipation ladder: desk pair (u_2, kappa_0)") {
  ParamTable t = desk_table(0.1, 0.3, 2);
  GridScalar th0 = theta_init("x", 128);
  std::vector<LadderRow> rows = dissipation_ladder(t, {0}, th0, 0.5, 128, 1e-3);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].q == 0);
  CHECK(rows[0].level == 2);
  CHECK(rows[0].kappa == doctest::Approx(std::min(t.kappa(0), 1e-3)));
  CHECK(rows[0].DT > 0);
  CHECK(rows[0].ratio > 0);
  CHECK(rows[0].ratio < 1);
  CHECK_THROWS_AS(dissipation_ladder(t, {4}, th0, 0.5, 128, 1e-3), config_error);
}

TEST_CASE("ns3d assembly: zero field, exact shear, built field") {
  int n = 64;
  double nu = 1e-3;
  {
    GridField u = const_field(n, 0, 0);
    SolveResult r = solve_adv_diff(u, theta_init("cosx", n), nu, 0.5);
    NSFields ns = ns3d_assemble(u, nu, r);
    CHECK(ns.residual_u <= 1e-14);
    CHECK(ns.residual == doctest::Approx(r.energy_residual));
    for (double v : ns.p.a) CHECK(std::fabs(v) <= 1e-14);
    CHECK(ns.f.max_speed() <= 1e-14);
  }
  {
    GridField u;
    u.res = n;
    u.ux.resize((size_t)n * n);
    u.uy.assign((size_t)n * n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) u.ux[(size_t)i * n + j] = std::sin(2 * kPi * i / (double)n);
    SolveResult r = solve_adv_diff(u, theta_init("cosy", n), nu, 0.5);
    NSFields ns = ns3d_assemble(u, nu, r);
    // u . grad u = 0 for a shear, so p = 0 and f = -nu lap u = nu 4 pi^2 u
    CHECK(ns.residual_u <= 1e-8);
    for (double v : ns.p.a) CHECK(std::fabs(v) <= 1e-10);
    for (int i = 0; i < n; ++i) {
      double want = nu * 4 * kPi * kPi * std::sin(2 * kPi * i / (double)n);
      CHECK(ns.f.ux[(size_t)i * n] == doctest::Approx(want).epsilon(1e-8));
    }
  }
  {
    ParamTable t = desk_table(0.1, 0.3, 2);
    GridField u = build_uq(t, 2, 128);
    SolveResult r = solve_adv_diff(u, theta_init("x", 128), nu, 0.1);
    NSFields ns = ns3d_assemble(u, nu, r);
    CHECK(ns.residual <= 10 * std::max(r.energy_residual, 1e-13));
    CHECK(ns.p.mean() == doctest::Approx(0.0).epsilon(1e-14));
  }
}

TEST_CASE("run.csv: header, row count, 17-digit round trip") {
  int n = 32;
  SolveConfig cfg;
  cfg.dt = 1e-2;
  SolveResult r = solve_adv_diff(const_field(n, 0, 0), theta_init("cosx", n), 1e-2, 0.1, cfg);
  const char* path = "test_run_tmp.csv";
  write_run_csv(r, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,energy,diss_rate,cum_diss,min_theta,max_theta");
  size_t rows = 0;
  double first_energy = -1;
  while (std::getline(in, line)) {
    if (rows == 0) {
      size_t c1 = line.find(','), c2 = line.find(',', c1 + 1);
      first_energy = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
    }
    ++rows;
  }
  CHECK(rows == r.t.size());
  CHECK(first_energy == r.energy.front());  // bit-exact through 17 digits
  std::remove(path);
}
