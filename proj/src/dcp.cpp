// SPDX-License-Identifier: Apache-2.0
#include "mcua/dcp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

namespace mcua {

// Interior slack on the row-sum cap; see build_op4.
constexpr double kRowCapSlack = 1e-4;

std::pair<double, double> dc_split(double x, double p) {
  const double plus = 0.25 * (x + p) * (x + p);
  const double minus = 0.25 * (x - p) * (x - p);
  return {plus, minus};
}

double taylor_f(double x, double p, double x_dot, double p_dot) {
  const double e = x_dot - p_dot;
  return e * e + 2.0 * e * (x - x_dot - p + p_dot);
}

double linearize_fraction(double v, double s, double v_dot, double s_dot) {
  if (s_dot < 1e-9)
    throw std::domain_error("linearize_fraction: s_dot below 1e-9");
  return 2.0 * v_dot * v / s_dot - v_dot * v_dot * s / (s_dot * s_dot);
}

ConstraintKind SmoothConstraint::kind() const {
  if (!logs.empty()) return ConstraintKind::log_type;
  if (!quad.empty()) return ConstraintKind::convex_quadratic;
  return ConstraintKind::affine;
}

double SmoothConstraint::eval(const Eigen::VectorXd& z) const {
  double g = constant;
  for (const QuadTerm& q : quad) g += q.value * z(q.row) * z(q.col);
  for (const auto& [i, c] : lin) g += c * z(i);
  for (const LogTerm& t : logs) {
    const double arg = 1.0 + t.scale * z(t.index);
    if (!(arg > 0)) return std::numeric_limits<double>::infinity();
    g -= t.weight * std::log(arg);
  }
  return g;
}

Eigen::VectorXd SmoothConstraint::grad(const Eigen::VectorXd& z) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(z.size());
  for (const QuadTerm& q : quad) {
    if (q.row == q.col) {
      g(q.row) += 2.0 * q.value * z(q.row);
    } else {
      g(q.row) += q.value * z(q.col);
      g(q.col) += q.value * z(q.row);
    }
  }
  for (const auto& [i, c] : lin) g(i) += c;
  for (const LogTerm& t : logs)
    g(t.index) -= t.weight * t.scale / (1.0 + t.scale * z(t.index));
  return g;
}

Eigen::MatrixXd SmoothConstraint::hess(const Eigen::VectorXd& z) const {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(z.size(), z.size());
  for (const QuadTerm& q : quad) {
    if (q.row == q.col) {
      h(q.row, q.row) += 2.0 * q.value;
    } else {
      h(q.row, q.col) += q.value;
      h(q.col, q.row) += q.value;
    }
  }
  for (const LogTerm& t : logs) {
    const double d = 1.0 + t.scale * z(t.index);
    h(t.index, t.index) += t.weight * t.scale * t.scale / (d * d);
  }
  return h;
}

std::vector<int> SmoothConstraint::support() const {
  std::vector<int> s;
  for (const QuadTerm& q : quad) {
    s.push_back(q.row);
    s.push_back(q.col);
  }
  for (const auto& [i, c] : lin) {
    (void)c;
    s.push_back(i);
  }
  for (const LogTerm& t : logs) s.push_back(t.index);
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

double ConvexProgram::objective_value(const Eigen::VectorXd& z) const {
  double o = objective_constant;
  for (const auto& [i, c] : objective) o += c * z(i);
  return o;
}

double ConvexProgram::max_violation(const Eigen::VectorXd& z) const {
  double worst = -std::numeric_limits<double>::infinity();
  for (const SmoothConstraint& c : constraints)
    worst = std::max(worst, c.eval(z));
  return worst;
}

void ConvexProgram::derive_bounds() {
  lower = Eigen::VectorXd::Constant(dim, -std::numeric_limits<double>::infinity());
  upper = Eigen::VectorXd::Constant(dim, std::numeric_limits<double>::infinity());
  for (const SmoothConstraint& c : constraints) {
    if (!c.quad.empty() || !c.logs.empty() || c.lin.size() != 1) continue;
    const auto [i, a] = c.lin.front();
    if (a > 0)
      upper(i) = std::min(upper(i), -c.constant / a);
    else if (a < 0)
      lower(i) = std::max(lower(i), -c.constant / a);
  }
}

namespace {
const char* kind_name(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::affine: return "affine";
    case ConstraintKind::convex_quadratic: return "convex_quadratic";
    case ConstraintKind::log_type: return "log_type";
  }
  return "?";
}
}  // namespace

void ConvexProgram::dump(std::ostream& os) const {
  auto name = [&](int i) {
    return i < static_cast<int>(var_names.size()) && !var_names.empty()
               ? var_names[i]
               : "z" + std::to_string(i);
  };
  os << "program dim=" << dim << " constraints=" << constraints.size() << "\n";
  os << "maximize:";
  for (const auto& [i, c] : objective) os << " " << c << "*" << name(i);
  if (objective_constant != 0) os << " + " << objective_constant;
  os << "\n";
  for (std::size_t k = 0; k < constraints.size(); ++k) {
    const SmoothConstraint& c = constraints[k];
    os << k << " " << c.label << " " << kind_name(c.kind()) << ":";
    for (const QuadTerm& q : c.quad)
      os << " " << q.value << "*" << name(q.row) << "*" << name(q.col);
    for (const auto& [i, a] : c.lin) os << " " << a << "*" << name(i);
    for (const LogTerm& t : c.logs)
      os << " -" << t.weight << "*ln(1+" << t.scale << "*" << name(t.index) << ")";
    os << " + " << c.constant << " <= 0\n";
  }
}

VarMap::VarMap(const Scenario& scn, const Eigen::MatrixXi* fix_x)
    : n_(scn.num_users()), m_(scn.num_mbs()), norm_(make_normalization(scn.params)) {
  const int nm = n_ * m_;
  if (fix_x && (fix_x->rows() != n_ || fix_x->cols() != m_))
    throw std::invalid_argument("fix_x dimension mismatch");
  x_idx_.assign(nm, -1);
  p_idx_.assign(nm, -1);
  u_idx_.assign(nm, -1);
  v_idx_.assign(nm, -1);
  x_fix_.assign(nm, 0.0);
  p_fix_hat_ = norm_.p_hat(scn.params.p_min_mw);

  std::vector<int> state(nm, -1);  // -1 free, 0 / 1 fixed
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < m_; ++j) {
      const int f = flat(i, j);
      int s = fix_x ? (*fix_x)(i, j) : -1;
      if (!scn.in_coverage(i, j)) {
        if (s == 1)
          throw std::invalid_argument("cannot fix out-of-coverage pair to 1");
        s = 0;
      }
      state[f] = s;
      if (s >= 0) x_fix_[f] = s;
    }
  }
  int next = 0;
  for (int f = 0; f < nm; ++f)
    if (state[f] < 0) x_idx_[f] = next++;
  for (int f = 0; f < nm; ++f)
    if (state[f] != 0) p_idx_[f] = next++;
  for (int f = 0; f < nm; ++f)
    if (state[f] != 0) u_idx_[f] = next++;
  for (int f = 0; f < nm; ++f)
    if (state[f] != 0) v_idx_[f] = next++;
  dim_ = next;
}

Eigen::VectorXd VarMap::pack(const LiftedPoint& pt) const {
  Eigen::VectorXd z(dim_);
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < m_; ++j) {
      const int f = flat(i, j);
      if (x_idx_[f] >= 0) z(x_idx_[f]) = pt.x(i, j);
      if (p_idx_[f] >= 0) z(p_idx_[f]) = norm_.p_hat(pt.p_mw(i, j));
      if (u_idx_[f] >= 0) z(u_idx_[f]) = pt.u(i, j);
      if (v_idx_[f] >= 0) z(v_idx_[f]) = pt.v(i, j);
    }
  }
  return z;
}

LiftedPoint VarMap::unpack(const Eigen::VectorXd& z) const {
  LiftedPoint pt;
  pt.x.resize(n_, m_);
  pt.p_mw.resize(n_, m_);
  pt.u.resize(n_, m_);
  pt.v.resize(n_, m_);
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < m_; ++j) {
      const int f = flat(i, j);
      pt.x(i, j) = x_idx_[f] >= 0 ? z(x_idx_[f]) : x_fix_[f];
      pt.p_mw(i, j) = p_idx_[f] >= 0 ? norm_.p_phys(z(p_idx_[f]))
                                     : norm_.p_phys(p_fix_hat_);
      pt.u(i, j) = u_idx_[f] >= 0 ? z(u_idx_[f]) : 0.0;
      pt.v(i, j) = v_idx_[f] >= 0 ? z(v_idx_[f]) : 0.0;
    }
  }
  return pt;
}

std::vector<std::string> VarMap::var_names() const {
  std::vector<std::string> names(dim_);
  auto tag = [&](const char* b, int i, int j) {
    std::ostringstream os;
    os << b << "(" << i << "," << j << ")";
    return os.str();
  };
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < m_; ++j) {
      const int f = flat(i, j);
      if (x_idx_[f] >= 0) names[x_idx_[f]] = tag("x", i, j);
      if (p_idx_[f] >= 0) names[p_idx_[f]] = tag("p", i, j);
      if (u_idx_[f] >= 0) names[u_idx_[f]] = tag("u", i, j);
      if (v_idx_[f] >= 0) names[v_idx_[f]] = tag("v", i, j);
    }
  }
  return names;
}

namespace {

// Variable-or-constant operand for constraint assembly.
struct Term {
  int idx = -1;       // >= 0: variable index
  double value = 0.0;  // constant when idx < 0
};

class ConstraintBuilder {
 public:
  explicit ConstraintBuilder(std::string label) : label_(std::move(label)) {}

  void add_product(Term a, Term b, double coeff) {
    if (coeff == 0) return;
    if (a.idx < 0 && b.idx < 0) {
      c_ += coeff * a.value * b.value;
    } else if (a.idx < 0) {
      lin_[b.idx] += coeff * a.value;
    } else if (b.idx < 0) {
      lin_[a.idx] += coeff * b.value;
    } else {
      auto key = std::minmax(a.idx, b.idx);
      quad_[{key.first, key.second}] += coeff;
    }
  }

  void add_linear(Term a, double coeff) {
    if (coeff == 0) return;
    if (a.idx < 0)
      c_ += coeff * a.value;
    else
      lin_[a.idx] += coeff;
  }

  void add_constant(double c) { c_ += c; }

  void add_log(int idx, double weight, double scale) {
    logs_.push_back({idx, weight, scale});
  }

  SmoothConstraint build() const {
    SmoothConstraint sc;
    sc.label = label_;
    sc.constant = c_;
    for (const auto& [key, v] : quad_)
      if (v != 0) sc.quad.push_back({key.first, key.second, v});
    for (const auto& [i, v] : lin_)
      if (v != 0) sc.lin.push_back({i, v});
    sc.logs = logs_;
    return sc;
  }

  bool trivially_satisfied() const {
    return quad_.empty() && lin_.empty() && logs_.empty() && c_ <= 0;
  }

 private:
  std::map<std::pair<int, int>, double> quad_;
  std::map<int, double> lin_;
  double c_ = 0.0;
  std::vector<LogTerm> logs_;
  std::string label_;
};

std::string pair_label(const char* base, int i, int j) {
  std::ostringstream os;
  os << base << "(" << i << "," << j << ")";
  return os.str();
}

std::string one_label(const char* base, int i) {
  std::ostringstream os;
  os << base << "(" << i << ")";
  return os.str();
}

}  // namespace

Op4Program build_op4(const Scenario& scn, const InstanceConfig& cfg,
                     const LiftedPoint& point, const Eigen::MatrixXi* fix_x) {
  const int n = scn.num_users();
  const int m = scn.num_mbs();
  cfg.validate(n, m);
  if (point.x.rows() != n || point.x.cols() != m)
    throw std::invalid_argument("build_op4: point dimension mismatch");

  VarMap vars(scn, fix_x);
  const Normalization& norm = vars.norm();
  const double p_lo = norm.p_hat(scn.params.p_min_mw);
  const double r_min_hat = norm.rate_hat(scn.params.r_min_bps);
  const double inv_ln2 = 1.0 / std::numbers::ln2;
  const int L = cfg.effective_max_assoc(m);

  // Effective linearization values: external fixes override the point.
  auto x_eff = [&](int i, int j) {
    return vars.x_fixed(i, j) ? vars.x_fixed_value(i, j) : point.x(i, j);
  };
  auto v_eff = [&](int i, int j) {
    return vars.v_index(i, j) >= 0 ? std::max(point.v(i, j), 0.0) : 0.0;
  };
  auto p_hat_dot = [&](int i, int j) { return norm.p_hat(point.p_mw(i, j)); };

  {  // loose precondition screen; tangents stay valid regardless
    std::ostringstream bad;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) {
        if (!std::isfinite(point.x(i, j)) || !std::isfinite(point.p_mw(i, j)) ||
            !std::isfinite(point.u(i, j)) || !std::isfinite(point.v(i, j)))
          bad << " nonfinite" << pair_label("", i, j);
        if (point.x(i, j) < -1e-6 || point.x(i, j) > 1.0 + 1e-6)
          bad << " " << pair_label("C1", i, j);
        const double ph = p_hat_dot(i, j);
        if (ph < p_lo - 1e-6 || ph > 1.0 + 1e-6) bad << " " << pair_label("C4", i, j);
        if (point.v(i, j) < -1e-9) bad << " v<0" << pair_label("", i, j);
      }
      if (!fix_x && point.x.row(i).sum() < 1.0 - 1e-6) bad << " " << one_label("C2", i);
    }
    if (!fix_x)
      for (int j = 0; j < m; ++j)
        if (point.x.col(j).sum() < 1.0 - 1e-6) bad << " " << one_label("C3", j);
    const std::string s = bad.str();
    if (!s.empty())
      throw std::invalid_argument("build_op4: linearization point invalid:" + s);
  }

  Op4Program out{ConvexProgram{}, vars};
  ConvexProgram& prog = out.prog;
  prog.dim = vars.dim();
  prog.var_names = vars.var_names();

  auto push = [&](const ConstraintBuilder& b) {
    if (!b.trivially_satisfied()) prog.constraints.push_back(b.build());
  };

  // Association boxes.
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const int xi = vars.x_index(i, j);
      if (xi < 0) continue;
      ConstraintBuilder lo(pair_label("C1-", i, j));
      lo.add_linear({xi, 0}, -1.0);
      push(lo);
      ConstraintBuilder hi(pair_label("C1+", i, j));
      hi.add_linear({xi, 0}, 1.0);
      hi.add_constant(-1.0);
      push(hi);
    }
  }

  // Row sums: at least one association, at most L when L binds.
  for (int i = 0; i < n; ++i) {
    ConstraintBuilder lo(one_label("C2", i));
    lo.add_constant(1.0);
    for (int j = 0; j < m; ++j) {
      const int xi = vars.x_index(i, j);
      if (xi >= 0)
        lo.add_linear({xi, 0}, -1.0);
      else
        lo.add_constant(-vars.x_fixed_value(i, j));
    }
    push(lo);
    if (L < m) {
      // Small slack keeps a strict interior when the cap meets the row
      // floor (L == 1 pins the row sum otherwise); integer recovery
      // enforces the cap exactly.
      ConstraintBuilder hi(one_label("C2L", i));
      hi.add_constant(-(static_cast<double>(L) + kRowCapSlack));
      for (int j = 0; j < m; ++j) {
        const int xi = vars.x_index(i, j);
        if (xi >= 0)
          hi.add_linear({xi, 0}, 1.0);
        else
          hi.add_constant(vars.x_fixed_value(i, j));
      }
      push(hi);
    }
  }

  // Column sums: every mBS keeps at least one user.
  for (int j = 0; j < m; ++j) {
    ConstraintBuilder lo(one_label("C3", j));
    lo.add_constant(1.0);
    for (int i = 0; i < n; ++i) {
      const int xi = vars.x_index(i, j);
      if (xi >= 0)
        lo.add_linear({xi, 0}, -1.0);
      else
        lo.add_constant(-vars.x_fixed_value(i, j));
    }
    push(lo);
  }

  // Per-link power boxes (normalized to [p_lo, 1]).
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const int pi = vars.p_index(i, j);
      if (pi < 0) continue;
      ConstraintBuilder lo(pair_label("C4-", i, j));
      lo.add_linear({pi, 0}, -1.0);
      lo.add_constant(p_lo);
      push(lo);
      ConstraintBuilder hi(pair_label("C4+", i, j));
      hi.add_linear({pi, 0}, 1.0);
      hi.add_constant(-1.0);
      push(hi);
    }
  }

  // QoS in lifted form: sum_j u_ij >= w_i * r_min_hat.
  if (cfg.enforce_qos && r_min_hat > 0) {
    for (int i = 0; i < n; ++i) {
      ConstraintBuilder c(one_label("C7", i));
      c.add_constant(cfg.weights(i) * r_min_hat);
      for (int j = 0; j < m; ++j) {
        const int ui = vars.u_index(i, j);
        if (ui >= 0) c.add_linear({ui, 0}, -1.0);
      }
      push(c);
    }
  }

  // Per-mBS power budget, d.c.-convexified. Pairs with x fixed to 0 draw no
  // budget and are omitted exactly.
  for (int j = 0; j < m; ++j) {
    ConstraintBuilder c(one_label("C10", j));
    for (int i = 0; i < n; ++i) {
      if (vars.x_fixed(i, j) && vars.x_fixed_value(i, j) == 0.0) continue;
      const int xi = vars.x_index(i, j);
      const Term tx = xi >= 0 ? Term{xi, 0} : Term{-1, vars.x_fixed_value(i, j)};
      const Term tp = Term{vars.p_index(i, j), 0};
      c.add_product(tx, tx, 0.25);
      c.add_product(tp, tp, 0.25);
      c.add_product(tx, tp, 0.5);
      const double e = x_eff(i, j) - p_hat_dot(i, j);
      c.add_linear(tx, -0.5 * e);
      c.add_linear(tp, 0.5 * e);
      c.add_constant(0.25 * e * e);
    }
    c.add_constant(-1.0);
    push(c);
  }

  // Tangent of the share fraction bound on u.
  Eigen::VectorXd s_dot(m), s_fixed(m);
  for (int j = 0; j < m; ++j) {
    double s = 0, sf = 0;
    for (int i = 0; i < n; ++i) {
      s += x_eff(i, j);
      if (vars.x_fixed(i, j)) sf += vars.x_fixed_value(i, j);
    }
    s_dot(j) = std::max(s, 1.0);
    s_fixed(j) = sf;
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const int ui = vars.u_index(i, j);
      if (ui < 0) continue;
      const double vd = v_eff(i, j);
      const double sd = s_dot(j);
      ConstraintBuilder c(pair_label("C11", i, j));
      c.add_linear({ui, 0}, 1.0);
      c.add_linear({vars.v_index(i, j), 0}, -2.0 * vd / sd);
      const double w2 = vd * vd / (sd * sd);
      for (int i2 = 0; i2 < n; ++i2) {
        const int xi = vars.x_index(i2, j);
        if (xi >= 0) c.add_linear({xi, 0}, w2);
      }
      c.add_constant(w2 * s_fixed(j));
      push(c);
    }
  }

  // Rate cap: v_ij^2 <= w_i log2(1 + c_hat p_hat).
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const int vi = vars.v_index(i, j);
      if (vi < 0) continue;
      ConstraintBuilder c(pair_label("C12", i, j));
      c.add_product({vi, 0}, {vi, 0}, 1.0);
      c.add_log(vars.p_index(i, j), cfg.weights(i) * inv_ln2,
                norm.c_hat(scn.snr_coeff(i, j)));
      push(c);
    }
  }

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      if (vars.u_index(i, j) >= 0)
        prog.objective.push_back({vars.u_index(i, j), 1.0});

  prog.derive_bounds();
  return out;
}

}  // namespace mcua
