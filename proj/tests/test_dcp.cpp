// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>
#include <sstream>

#include "mcua/ccp.hpp"
#include "mcua/dcp.hpp"
#include "oracles.hpp"

using namespace mcua;

TEST_SUITE("dcp") {

TEST_CASE("product split identity") {
  {
    const auto [plus, minus] = dc_split(0.5, 0.2);
    CHECK(plus - minus == doctest::Approx(0.1).epsilon(1e-14));
  }
  {
    const auto [plus, minus] = dc_split(0.0, 0.7);
    CHECK(plus == minus);
  }
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 100000; ++k) {
    const double x = u(rng), p = u(rng);
    const auto [plus, minus] = dc_split(x, p);
    const double err = std::abs(plus - minus - x * p);
    CHECK(err <= 1e-12 * std::max(1.0, std::abs(x * p)));
  }
}

TEST_CASE("taylor expansion is tangent and a global minorant") {
  CHECK(taylor_f(0.3, 0.7, 0.3, 0.7) ==
        doctest::Approx((0.3 - 0.7) * (0.3 - 0.7)).epsilon(1e-15));
  // Hand value: e = 0.9, f = 0.81 + 2*0.9*(0.5-1-0.2+0.1) = -0.27.
  const double f = taylor_f(0.5, 0.2, 1.0, 0.1);
  CHECK(f == doctest::Approx(-0.27).epsilon(1e-14));
  CHECK(f <= 0.3 * 0.3);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 100000; ++k) {
    const double x = u(rng), p = u(rng), xd = u(rng), pd = u(rng);
    CHECK(taylor_f(x, p, xd, pd) <= (x - p) * (x - p) + 1e-12);
  }
}

TEST_CASE("fraction tangent is a global under-estimator") {
  CHECK(linearize_fraction(3.0, 2.0, 2.0, 1.0) ==
        doctest::Approx(4.0).epsilon(1e-14));
  CHECK(4.0 <= 9.0 / 2.0);
  CHECK(linearize_fraction(1.7, 2.3, 1.7, 2.3) ==
        doctest::Approx(1.7 * 1.7 / 2.3).epsilon(1e-14));
  CHECK(linearize_fraction(5.0, 9.0, 0.0, 4.0) == 0.0);
  CHECK_THROWS_AS(linearize_fraction(1.0, 1.0, 1.0, 1e-12), std::domain_error);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uv(-4.0, 4.0), us(0.1, 8.0),
      usd(1.0, 8.0);
  for (int k = 0; k < 100000; ++k) {
    const double v = uv(rng), s = us(rng), vd = uv(rng), sd = usd(rng);
    CHECK(linearize_fraction(v, s, vd, sd) <= v * v / s + 1e-12);
  }
}

TEST_CASE("single pair program has the documented size") {
  const Scenario scn = oracle::unit_scenario(10.0);
  const InstanceConfig cfg = equal_weight_config(1);
  const LiftedPoint pt = init_feasible(scn, cfg);
  const Op4Program op4 = build_op4(scn, cfg, pt);
  CHECK(op4.prog.dim == 4);  // x, p, u, v
  // C1-, C1+, C2, C3, C4-, C4+, C7, C10, C11, C12 (no row cap: L == m).
  CHECK(op4.prog.constraints.size() == 10);
}

TEST_CASE("the linearization point is feasible for its own program") {
  const Scenario scn = oracle::random_scenario(6, 3, 51, true);
  InstanceConfig cfg = equal_weight_config(6);
  cfg.enforce_qos = false;
  const LiftedPoint pt = init_feasible(scn, cfg);
  const Op4Program op4 = build_op4(scn, cfg, pt);
  const Eigen::VectorXd z = op4.vars.pack(pt);
  CHECK(op4.prog.max_violation(z) <= 1e-9);
}

TEST_CASE("rebuilt budget and share constraints are tangent at the point") {
  const Scenario scn = oracle::random_scenario(5, 3, 53, true);
  InstanceConfig cfg = equal_weight_config(5);
  cfg.enforce_qos = false;
  const LiftedPoint pt = init_feasible(scn, cfg);
  const Op4Program op4 = build_op4(scn, cfg, pt);
  const Eigen::VectorXd z = op4.vars.pack(pt);
  const Normalization norm = make_normalization(scn.params);

  for (const SmoothConstraint& c : op4.prog.constraints) {
    if (c.label.rfind("C10(", 0) == 0) {
      const int j = std::stoi(c.label.substr(4));
      double true_load = 0.0;
      for (int i = 0; i < scn.num_users(); ++i)
        true_load += pt.x(i, j) * norm.p_hat(pt.p_mw(i, j));
      CHECK(c.eval(z) == doctest::Approx(true_load - 1.0).epsilon(1e-9));
    }
    if (c.label.rfind("C11(", 0) == 0) {
      std::istringstream is(c.label.substr(4));
      int i, j;
      char comma;
      is >> i >> comma >> j;
      const double s = pt.x.col(j).sum();
      const double expect = pt.u(i, j) - pt.v(i, j) * pt.v(i, j) / s;
      CHECK(c.eval(z) == doctest::Approx(expect).epsilon(1e-9));
    }
  }
}

TEST_CASE("surrogates never understate the original constraint functions") {
  // Any point feasible for the built budget/share surrogates is feasible
  // for the originals, because the surrogate value dominates the original.
  const Scenario scn = oracle::random_scenario(4, 2, 57, true);
  InstanceConfig cfg = equal_weight_config(4);
  cfg.enforce_qos = false;
  const LiftedPoint pt = init_feasible(scn, cfg);
  const Op4Program op4 = build_op4(scn, cfg, pt);
  const Normalization norm = make_normalization(scn.params);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ux(0.01, 1.0), up(0.01, 0.99),
      uu(-0.5, 2.0), uv(0.0, 1.5);
  for (int trial = 0; trial < 200; ++trial) {
    LiftedPoint q = pt;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 2; ++j) {
        q.x(i, j) = ux(rng);
        q.p_mw(i, j) = norm.p_phys(up(rng));
        q.u(i, j) = uu(rng);
        q.v(i, j) = uv(rng);
      }
    const Eigen::VectorXd z = op4.vars.pack(q);
    for (const SmoothConstraint& c : op4.prog.constraints) {
      if (c.label.rfind("C10(", 0) == 0) {
        const int j = std::stoi(c.label.substr(4));
        double true_load = -1.0;
        for (int i = 0; i < 4; ++i)
          true_load += q.x(i, j) * norm.p_hat(q.p_mw(i, j));
        CHECK(c.eval(z) >= true_load - 1e-12);
      }
      if (c.label.rfind("C11(", 0) == 0) {
        std::istringstream is(c.label.substr(4));
        int i, j;
        char comma;
        is >> i >> comma >> j;
        const double s = q.x.col(j).sum();
        const double orig = q.u(i, j) - q.v(i, j) * q.v(i, j) / s;
        CHECK(c.eval(z) >= orig - 1e-12);
      }
    }
  }
}

TEST_CASE("gradients and Hessians match central differences") {
  const Scenario scn = oracle::random_scenario(3, 2, 59, true);
  InstanceConfig cfg = equal_weight_config(3);
  const LiftedPoint pt = init_feasible(scn, cfg);
  const Op4Program op4 = build_op4(scn, cfg, pt);
  Eigen::VectorXd z = op4.vars.pack(pt);
  // Nudge strictly inside so the log terms are smooth around z.
  for (int i = 0; i < z.size(); ++i) z(i) = 0.9 * z(i) + 0.02;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 5e-3);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd zt = z;
    for (int i = 0; i < zt.size(); ++i) zt(i) += noise(rng);
    for (const SmoothConstraint& c : op4.prog.constraints) {
      const auto rep = oracle::fd_check(c, zt);
      CHECK(rep.grad_err <= 1e-5);
      CHECK(rep.hess_err <= 1e-5);
    }
  }
}

TEST_CASE("rate cap is implied by the lifted rate equality") {
  // Any (x, p, v) with v^2 <= x * w * log2(1 + c p) also satisfies the
  // x-free cap, since x <= 1.
  const Scenario scn = oracle::random_scenario(3, 2, 61, true);
  InstanceConfig cfg = equal_weight_config(3);
  cfg.enforce_qos = false;
  const LiftedPoint pt = init_feasible(scn, cfg);
  const Op4Program op4 = build_op4(scn, cfg, pt);
  const Normalization norm = make_normalization(scn.params);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> ux(0.0, 1.0), up(0.0, 1.0),
      uf(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    LiftedPoint q = pt;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 2; ++j) {
        q.x(i, j) = ux(rng);
        q.p_mw(i, j) = norm.p_phys(up(rng));
        const double cap = q.x(i, j) * cfg.weights(i) *
                           std::log2(1.0 + norm.c_hat(scn.snr_coeff(i, j)) *
                                               norm.p_hat(q.p_mw(i, j)));
        q.v(i, j) = std::sqrt(uf(rng) * std::max(cap, 0.0));
        q.u(i, j) = 0.0;
      }
    const Eigen::VectorXd z = op4.vars.pack(q);
    for (const SmoothConstraint& c : op4.prog.constraints)
      if (c.label.rfind("C12(", 0) == 0) CHECK(c.eval(z) <= 1e-9);
  }
}

TEST_CASE("constraint Hessians are positive semidefinite") {
  const Scenario scn = oracle::random_scenario(4, 2, 63, true);
  InstanceConfig cfg = equal_weight_config(4);
  const LiftedPoint pt = init_feasible(scn, cfg);
  const Op4Program op4 = build_op4(scn, cfg, pt);
  Eigen::VectorXd z = op4.vars.pack(pt);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 1e-2);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd zt = z;
    for (int i = 0; i < zt.size(); ++i)
      zt(i) = std::max(1e-3, zt(i) + noise(rng));
    for (const SmoothConstraint& c : op4.prog.constraints) {
      const Eigen::MatrixXd H = c.hess(zt);
      const Eigen::VectorXd ev =
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H).eigenvalues();
      CHECK(ev.minCoeff() >= -1e-8);
    }
  }
}

TEST_CASE("coverage-masked pairs are eliminated from the variable map") {
  const Scenario scn = oracle::random_scenario(6, 3, 65, false, 55.0);
  const VarMap vars(scn);
  int masked = 0;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 3; ++j)
      if (!scn.in_coverage(i, j)) {
        ++masked;
        CHECK(vars.x_index(i, j) == -1);
        CHECK(vars.p_index(i, j) == -1);
        CHECK(vars.u_index(i, j) == -1);
        CHECK(vars.v_index(i, j) == -1);
        CHECK(vars.x_fixed_value(i, j) == 0.0);
      }
  REQUIRE(masked > 0);  // otherwise the radius did not bite
  CHECK(vars.dim() == 4 * (18 - masked));

  const InstanceConfig cfg = equal_weight_config(6);
  const LiftedPoint pt = init_feasible(scn, cfg);
  const LiftedPoint rt = vars.unpack(vars.pack(pt));
  CHECK((rt.x - pt.x).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((rt.u - pt.u).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("program dump lists every constraint kind") {
  const Scenario scn = oracle::unit_scenario();
  const InstanceConfig cfg = equal_weight_config(1);
  const Op4Program op4 = build_op4(scn, cfg, init_feasible(scn, cfg));
  std::ostringstream os;
  op4.prog.dump(os);
  const std::string text = os.str();
  CHECK(text.find("affine") != std::string::npos);
  CHECK(text.find("convex_quadratic") != std::string::npos);
  CHECK(text.find("log_type") != std::string::npos);
  CHECK(text.find("maximize") != std::string::npos);
}

TEST_CASE("an invalid linearization point is rejected with its constraints") {
  const Scenario scn = oracle::unit_scenario();
  const InstanceConfig cfg = equal_weight_config(1);
  LiftedPoint pt = init_feasible(scn, cfg);
  pt.x(0, 0) = 1.5;
  CHECK_THROWS_AS(build_op4(scn, cfg, pt), std::invalid_argument);
}

}  // TEST_SUITE
