// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include "mcua/barrier.hpp"
#include "oracles.hpp"

using namespace mcua;

namespace {

SmoothConstraint bound_lo(int i, double lo) {
  SmoothConstraint c;
  c.label = "lo";
  c.lin.push_back({i, -1.0});
  c.constant = lo;
  return c;
}

SmoothConstraint bound_hi(int i, double hi) {
  SmoothConstraint c;
  c.label = "hi";
  c.lin.push_back({i, 1.0});
  c.constant = -hi;
  return c;
}

// maximize sum w_i log2(1 + c_i p_i) s.t. 0 <= p <= box, sum p <= budget,
// through an epigraph variable r.
ConvexProgram water_fill_program(const Eigen::VectorXd& c,
                                 const Eigen::VectorXd& w, double budget,
                                 double box) {
  const int k = static_cast<int>(c.size());
  ConvexProgram prog;
  prog.dim = k + 1;
  for (int i = 0; i < k; ++i) {
    prog.constraints.push_back(bound_lo(i, 0.0));
    prog.constraints.push_back(bound_hi(i, box));
  }
  SmoothConstraint sum;
  sum.label = "budget";
  for (int i = 0; i < k; ++i) sum.lin.push_back({i, 1.0});
  sum.constant = -budget;
  prog.constraints.push_back(std::move(sum));
  SmoothConstraint epi;
  epi.label = "epigraph";
  epi.lin.push_back({k, 1.0});
  for (int i = 0; i < k; ++i)
    epi.logs.push_back({i, w(i) / std::numbers::ln2, c(i)});
  prog.constraints.push_back(std::move(epi));
  prog.objective.push_back({k, 1.0});
  prog.derive_bounds();
  return prog;
}

Eigen::VectorXd water_fill_start(const ConvexProgram& prog, int k,
                                 double budget, double box) {
  Eigen::VectorXd z0 = Eigen::VectorXd::Constant(
      k + 1, std::min(box, budget / k) * 0.5);
  z0(k) = -1.0;
  (void)prog;
  return z0;
}

}  // namespace

TEST_SUITE("barrier") {

TEST_CASE("identity Hessian returns the negated gradient") {
  const Eigen::MatrixXd h = Eigen::MatrixXd::Identity(4, 4);
  Eigen::VectorXd g(4);
  g << 1.0, -2.0, 0.5, 3.0;
  const NewtonStep ns = newton_direction(h, g);
  CHECK((ns.step + g).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(ns.decrement2 == doctest::Approx(g.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("one Newton step minimizes a pure quadratic") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd a(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) a(i, j) = nd(rng);
  const Eigen::MatrixXd h = a.transpose() * a + Eigen::MatrixXd::Identity(5, 5);
  Eigen::VectorXd b(5), z0(5);
  for (int i = 0; i < 5; ++i) {
    b(i) = nd(rng);
    z0(i) = nd(rng);
  }
  // minimize 1/2 z'Hz + b'z from z0: grad = Hz0 + b.
  const NewtonStep ns = newton_direction(h, h * z0 + b);
  const Eigen::VectorXd z1 = z0 + ns.step;
  const Eigen::VectorXd zstar = h.ldlt().solve(-b);
  CHECK((z1 - zstar).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("residual stays small on conditioned SPD systems") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 8;
    Eigen::MatrixXd q(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) q(i, j) = nd(rng);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(q);
    const Eigen::MatrixXd u = qr.householderQ();
    Eigen::VectorXd ev(n);
    for (int i = 0; i < n; ++i)
      ev(i) = std::pow(10.0, 6.0 * i / (n - 1));  // condition 1e6
    const Eigen::MatrixXd h = u * ev.asDiagonal() * u.transpose();
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) g(i) = nd(rng);
    const NewtonStep ns = newton_direction(h, g);
    CHECK((h * ns.step + g).norm() <= 1e-8 * g.norm());
  }
}

TEST_CASE("phase one keeps a strictly feasible hint untouched") {
  ConvexProgram prog;
  prog.dim = 1;
  prog.constraints.push_back(bound_lo(0, 0.0));
  prog.constraints.push_back(bound_hi(0, 1.0));
  prog.derive_bounds();
  Eigen::VectorXd hint(1);
  hint << 0.25;
  const auto z = phase1(prog, hint);
  REQUIRE(z.has_value());
  CHECK((*z)(0) == 0.25);
}

TEST_CASE("phase one pulls an exterior hint into the box") {
  ConvexProgram prog;
  prog.dim = 1;
  prog.constraints.push_back(bound_lo(0, 0.0));
  prog.constraints.push_back(bound_hi(0, 1.0));
  prog.derive_bounds();
  Eigen::VectorXd hint(1);
  hint << 5.0;
  const auto z = phase1(prog, hint);
  REQUIRE(z.has_value());
  CHECK((*z)(0) > 0.0);
  CHECK((*z)(0) < 1.0);
}

TEST_CASE("contradictory bounds are reported infeasible") {
  ConvexProgram prog;
  prog.dim = 1;
  prog.constraints.push_back(bound_hi(0, 0.0));  // z <= 0
  prog.constraints.push_back(bound_lo(0, 1.0));  // z >= 1
  prog.derive_bounds();
  Eigen::VectorXd hint = Eigen::VectorXd::Zero(1);
  CHECK_FALSE(phase1(prog, hint).has_value());
}

TEST_CASE("one dimensional corner is found to gap accuracy") {
  ConvexProgram prog;
  prog.dim = 1;
  prog.constraints.push_back(bound_lo(0, 0.0));
  prog.constraints.push_back(bound_hi(0, 1.0));
  prog.objective.push_back({0, 1.0});
  prog.derive_bounds();
  Eigen::VectorXd z0(1);
  z0 << 0.5;
  const SolveResult res = solve(prog, z0);
  CHECK(res.status == SolveStatus::optimal);
  CHECK(res.objective <= 1.0);
  CHECK(res.objective >= 1.0 - 10.0 * res.gap_bound - 1e-9);
  CHECK(res.gap_bound <= 1e-7);
}

TEST_CASE("two dimensional log corner lands on (p, u) = (1, 1)") {
  // maximize u s.t. u <= log2(1+p), 0 <= p <= 1.
  ConvexProgram prog;
  prog.dim = 2;
  prog.constraints.push_back(bound_lo(0, 0.0));
  prog.constraints.push_back(bound_hi(0, 1.0));
  SmoothConstraint cap;
  cap.label = "cap";
  cap.lin.push_back({1, 1.0});
  cap.logs.push_back({0, 1.0 / std::numbers::ln2, 1.0});
  prog.constraints.push_back(std::move(cap));
  prog.objective.push_back({1, 1.0});
  prog.derive_bounds();
  Eigen::VectorXd z0(2);
  z0 << 0.5, 0.0;
  const SolveResult res = solve(prog, z0);
  CHECK(res.status == SolveStatus::optimal);
  CHECK(res.z(0) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(res.objective == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("water-filling instances match the bisection closed form") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> uc(0.5, 80.0), uw(0.2, 1.0);
  for (int trial = 0; trial < 12; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 7);  // up to 8 links
    Eigen::VectorXd c(k), w(k);
    for (int i = 0; i < k; ++i) {
      c(i) = uc(rng);
      w(i) = uw(rng);
    }
    w /= w.sum();
    const double budget = 1.0, box = 1.0;
    const ConvexProgram prog = water_fill_program(c, w, budget, box);
    const Eigen::VectorXd z0 = water_fill_start(prog, k, budget, box);
    REQUIRE(prog.max_violation(z0) < 0);
    const SolveResult res = solve(prog, z0);
    REQUIRE(res.status == SolveStatus::optimal);
    const auto wf = oracle::water_filling(c, w, budget, box);
    double got = 0.0;
    for (int i = 0; i < k; ++i) got += w(i) * std::log2(1.0 + c(i) * res.z(i));
    CHECK(got == doctest::Approx(wf.objective_log2).epsilon(1e-5));
  }
}

TEST_CASE("tightening the gap tolerance moves the objective within bound") {
  Eigen::VectorXd c(4), w(4);
  c << 3.0, 11.0, 27.0, 60.0;
  w << 0.1, 0.2, 0.3, 0.4;
  const ConvexProgram prog = water_fill_program(c, w, 1.0, 1.0);
  const Eigen::VectorXd z0 = water_fill_start(prog, 4, 1.0, 1.0);
  BarrierSettings coarse;
  const SolveResult a = solve(prog, z0, coarse);
  BarrierSettings fine = coarse;
  fine.eps_gap = coarse.eps_gap / 10.0;
  const SolveResult b = solve(prog, z0, fine);
  CHECK(std::abs(a.objective - b.objective) <= 10.0 * coarse.eps_gap + 1e-12);
}

TEST_CASE("scaling the objective by 1000 keeps the argmax") {
  Eigen::VectorXd c(3), w(3);
  c << 4.0, 19.0, 55.0;
  w << 0.25, 0.35, 0.4;
  ConvexProgram prog = water_fill_program(c, w, 1.0, 1.0);
  const Eigen::VectorXd z0 = water_fill_start(prog, 3, 1.0, 1.0);
  const SolveResult a = solve(prog, z0);
  ConvexProgram scaled = prog;
  scaled.objective[0].second = 1000.0;
  const SolveResult b = solve(scaled, z0);
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(a.z(i) - b.z(i)) <= 1e-5);
}

TEST_CASE("a non-strictly-feasible start is rejected") {
  ConvexProgram prog;
  prog.dim = 1;
  prog.constraints.push_back(bound_lo(0, 0.0));
  prog.constraints.push_back(bound_hi(0, 1.0));
  prog.objective.push_back({0, 1.0});
  Eigen::VectorXd z0(1);
  z0 << 1.0;
  CHECK_THROWS_AS(solve(prog, z0), std::invalid_argument);
}

TEST_CASE("trace file carries the schema line and iteration rows") {
  ConvexProgram prog;
  prog.dim = 1;
  prog.constraints.push_back(bound_lo(0, 0.0));
  prog.constraints.push_back(bound_hi(0, 1.0));
  prog.objective.push_back({0, 1.0});
  prog.derive_bounds();
  Eigen::VectorXd z0(1);
  z0 << 0.5;
  BarrierSettings s;
  s.trace_path = "barrier_trace_test.csv";
  solve(prog, z0, s);
  std::ifstream is(s.trace_path);
  REQUIRE(is.good());
  std::string line;
  std::getline(is, line);
  CHECK(line == "schema,mcua.barrier-trace.v1");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows >= 2);  // header + at least one iteration
  std::remove(s.trace_path.c_str());
}

}  // TEST_SUITE
