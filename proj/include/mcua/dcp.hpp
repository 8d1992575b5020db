// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "mcua/model.hpp"

namespace mcua {

// x*p = plus - minus with plus = (x+p)^2/4 and minus = (x-p)^2/4, both convex.
std::pair<double, double> dc_split(double x, double p);

// First-order expansion of (x-p)^2 at (x_dot, p_dot). Global minorant:
// taylor_f(...) <= (x-p)^2 for all inputs, equal iff x-p == x_dot-p_dot.
double taylor_f(double x, double p, double x_dot, double p_dot);

// Tangent plane of v^2/s at (v_dot, s_dot); a global under-estimator of
// v^2/s on s > 0. Requires s_dot >= 1e-9.
double linearize_fraction(double v, double s, double v_dot, double s_dot);

enum class ConstraintKind { affine, convex_quadratic, log_type };

// g(z) += value * z[row] * z[col]; row <= col, stored once per pair.
struct QuadTerm {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

// g(z) -= weight * ln(1 + scale * z[index]); weight >= 0 and scale > 0 keep
// the term concave, so subtracting it keeps g convex.
struct LogTerm {
  int index = 0;
  double weight = 0.0;
  double scale = 0.0;
};

// One inequality g(z) <= 0 with
//   g(z) = sum quad + sum lin + constant - sum logs.
// eval returns +inf outside the log domain so line searches can back off.
struct SmoothConstraint {
  std::string label;
  std::vector<QuadTerm> quad;
  std::vector<std::pair<int, double>> lin;
  double constant = 0.0;
  std::vector<LogTerm> logs;

  ConstraintKind kind() const;
  double eval(const Eigen::VectorXd& z) const;
  Eigen::VectorXd grad(const Eigen::VectorXd& z) const;
  Eigen::MatrixXd hess(const Eigen::VectorXd& z) const;
  // Indices of the variables this constraint touches (sorted, unique).
  std::vector<int> support() const;
};

// Linear-objective convex program: maximize obj . z subject to g_k(z) <= 0.
// Immutable once built; evaluations are pure.
struct ConvexProgram {
  int dim = 0;
  std::vector<std::pair<int, double>> objective;
  double objective_constant = 0.0;
  std::vector<SmoothConstraint> constraints;
  std::vector<std::string> var_names;  // optional, for dump()
  // Per-variable bounds implied by single-variable affine constraints;
  // +-inf when absent. Used for hint clamping, not by the solver itself.
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  double objective_value(const Eigen::VectorXd& z) const;
  // Largest constraint value (negative means strictly feasible).
  double max_violation(const Eigen::VectorXd& z) const;
  void derive_bounds();
  void dump(std::ostream& os) const;
};

// Maps the (x, p, u, v) blocks onto solver variables. Out-of-coverage pairs
// and externally fixed x entries are eliminated: their x is a constant, and
// for x == 0 the pair's p is pinned to p_min and u = v = 0.
class VarMap {
 public:
  // fix_x: optional n x m matrix with entries -1 (free), 0, or 1.
  VarMap(const Scenario& scn, const Eigen::MatrixXi* fix_x = nullptr);

  int dim() const { return dim_; }
  int n() const { return n_; }
  int m() const { return m_; }
  const Normalization& norm() const { return norm_; }

  int x_index(int i, int j) const { return x_idx_[flat(i, j)]; }
  int p_index(int i, int j) const { return p_idx_[flat(i, j)]; }
  int u_index(int i, int j) const { return u_idx_[flat(i, j)]; }
  int v_index(int i, int j) const { return v_idx_[flat(i, j)]; }
  bool x_fixed(int i, int j) const { return x_index(i, j) < 0; }
  double x_fixed_value(int i, int j) const { return x_fix_[flat(i, j)]; }

  Eigen::VectorXd pack(const LiftedPoint& pt) const;
  LiftedPoint unpack(const Eigen::VectorXd& z) const;
  std::vector<std::string> var_names() const;

 private:
  int flat(int i, int j) const { return i * m_ + j; }
  int n_ = 0, m_ = 0, dim_ = 0;
  Normalization norm_;
  std::vector<int> x_idx_, p_idx_, u_idx_, v_idx_;
  std::vector<double> x_fix_;
  double p_fix_hat_ = 0.0;
};

struct Op4Program {
  ConvexProgram prog;
  VarMap vars;
};

// Assembles the convexified per-iteration program at the given linearization
// point, in normalized units: objective sum u_ij; affine association boxes,
// row/column sum bounds, power boxes and QoS; the per-mBS convex-quadratic
// power budget with the subtracted square replaced by its tangent; the
// per-pair fraction tangent; and the per-pair log rate cap.
Op4Program build_op4(const Scenario& scn, const InstanceConfig& cfg,
                     const LiftedPoint& point,
                     const Eigen::MatrixXi* fix_x = nullptr);

}  // namespace mcua
