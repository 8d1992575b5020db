// SPDX-License-Identifier: Apache-2.0
#include "mcua/barrier.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <fstream>
#include <limits>

namespace mcua {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRegFloor = 1e-10;
constexpr double kRegCeiling = 1e-2;
constexpr int kMaxBacktracks = 64;
}  // namespace

void BarrierSettings::validate() const {
  if (!(mu > 1)) throw std::invalid_argument("barrier mu must be > 1");
  if (!(t0 > 0) || !(eps_gap > 0) || !(newton_tol > 0))
    throw std::invalid_argument("barrier tolerances must be positive");
  if (max_newton < 1) throw std::invalid_argument("max_newton must be >= 1");
  if (!(ls_alpha > 0 && ls_alpha < 0.5) || !(ls_beta > 0 && ls_beta < 1))
    throw std::invalid_argument("line search parameters out of range");
}

NewtonStep newton_direction(const Eigen::MatrixXd& hess,
                            const Eigen::VectorXd& grad) {
  // Barrier Hessians span many orders of magnitude near the boundary;
  // symmetric diagonal equilibration keeps the factorization honest and
  // makes the Tikhonov scale meaningful.
  const int n = static_cast<int>(grad.size());
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i)
    d(i) = std::sqrt(std::max(hess(i, i), 1e-12));
  Eigen::MatrixXd hs = hess;
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) hs(r, c) /= d(r) * d(c);
  const Eigen::VectorXd gs = grad.cwiseQuotient(d);

  double delta = 0.0;
  while (true) {
    Eigen::MatrixXd h = hs;
    if (delta > 0) h.diagonal().array() += delta;
    Eigen::LLT<Eigen::MatrixXd> llt(h);
    if (llt.info() == Eigen::Success) {
      const Eigen::VectorXd y = -llt.solve(gs);
      NewtonStep out;
      out.step = y.cwiseQuotient(d);
      out.decrement2 = -grad.dot(out.step);
      if (out.step.allFinite() && out.decrement2 >= -1e-9)
        return {std::move(out.step), std::max(out.decrement2, 0.0)};
    }
    delta = delta == 0.0 ? kRegFloor : delta * 10.0;
    if (delta > kRegCeiling)
      throw SolverFailure(
          "newton_direction: factorization failed at regularization ceiling");
  }
}

namespace {

// Assembles gradient/Hessian of t*(-obj) + sum -ln(-g_k) with sparse
// per-constraint scatters; buffers are reused across iterations.
class BarrierEngine {
 public:
  explicit BarrierEngine(const ConvexProgram& prog)
      : prog_(prog), dim_(prog.dim) {
    cobj_ = Eigen::VectorXd::Zero(dim_);
    for (const auto& [i, c] : prog.objective) cobj_(i) += c;
    gvals_.resize(num_constraints());
    trial_gvals_.resize(num_constraints());
    seen_.assign(dim_, 0);
    svals_ = Eigen::VectorXd::Zero(dim_);
    grad_.resize(dim_);
    hess_.resize(dim_, dim_);
    trial_.resize(dim_);
  }

  int num_constraints() const {
    return static_cast<int>(prog_.constraints.size());
  }
  double objective(const Eigen::VectorXd& z) const {
    return cobj_.dot(z) + prog_.objective_constant;
  }

  bool eval_gvals(const Eigen::VectorXd& z, Eigen::VectorXd& gv) const {
    // Slacks below 1e-150 would overflow 1/g^2 in the Hessian; treat them
    // as boundary contact and let the line search back off.
    const auto& cons = prog_.constraints;
    for (int k = 0; k < num_constraints(); ++k) {
      gv(k) = cons[k].eval(z);
      if (!(gv(k) < -1e-150)) return false;
    }
    return true;
  }

  static double log_barrier(const Eigen::VectorXd& gv) {
    double phi = 0.0;
    for (int k = 0; k < gv.size(); ++k) phi -= std::log(-gv(k));
    return phi;
  }

  void assemble(const Eigen::VectorXd& z, double t, const Eigen::VectorXd& gv) {
    grad_ = -t * cobj_;
    hess_.setZero();
    for (int k = 0; k < num_constraints(); ++k) {
      const SmoothConstraint& con = prog_.constraints[k];
      const double invg = 1.0 / (-gv(k));
      touched_.clear();
      auto acc = [&](int i, double val) {
        if (!seen_[i]) {
          seen_[i] = 1;
          touched_.push_back(i);
          svals_(i) = 0.0;
        }
        svals_(i) += val;
      };
      for (const QuadTerm& q : con.quad) {
        if (q.row == q.col) {
          acc(q.row, 2.0 * q.value * z(q.row));
        } else {
          acc(q.row, q.value * z(q.col));
          acc(q.col, q.value * z(q.row));
        }
      }
      for (const auto& [i, c] : con.lin) acc(i, c);
      for (const LogTerm& lt : con.logs) {
        const double d = 1.0 + lt.scale * z(lt.index);
        acc(lt.index, -lt.weight * lt.scale / d);
      }

      const double invg2 = invg * invg;
      for (std::size_t ai = 0; ai < touched_.size(); ++ai) {
        const int a = touched_[ai];
        const double va = svals_(a);
        grad_(a) += invg * va;
        for (std::size_t bi = ai; bi < touched_.size(); ++bi) {
          const int b = touched_[bi];
          const double add = invg2 * va * svals_(b);
          hess_(a, b) += add;
          if (a != b) hess_(b, a) += add;
        }
      }
      for (const QuadTerm& q : con.quad) {
        if (q.row == q.col) {
          hess_(q.row, q.row) += invg * 2.0 * q.value;
        } else {
          hess_(q.row, q.col) += invg * q.value;
          hess_(q.col, q.row) += invg * q.value;
        }
      }
      for (const LogTerm& lt : con.logs) {
        const double d = 1.0 + lt.scale * z(lt.index);
        hess_(lt.index, lt.index) +=
            invg * lt.weight * lt.scale * lt.scale / (d * d);
      }
      for (int a : touched_) seen_[a] = 0;
    }
  }

  struct CenterOut {
    int iters = 0;
    bool converged = false;
    bool early = false;
    double last_decrement2 = 0.0;
    double last_alpha = 0.0;
  };

  // Minimizes t*(-obj) + phi from the strictly feasible z (updated in
  // place together with its constraint values).
  CenterOut center(Eigen::VectorXd& z, Eigen::VectorXd& gv, double t,
                   const BarrierSettings& s,
                   const std::function<bool(const Eigen::VectorXd&)>* early_stop,
                   std::ofstream* trace) {
    CenterOut out;
    for (int it = 0; it < s.max_newton; ++it) {
      assemble(z, t, gv);
      const NewtonStep ns = newton_direction(hess_, grad_);
      out.last_decrement2 = ns.decrement2;
      if (0.5 * ns.decrement2 <= s.newton_tol) {
        out.converged = true;
        return out;
      }
      const double psi0 = -t * cobj_.dot(z) + log_barrier(gv);
      const double slope = grad_.dot(ns.step);
      double alpha = 1.0;
      bool accepted = false;
      double psi_new = psi0;
      for (int bt = 0; bt < kMaxBacktracks; ++bt) {
        trial_ = z + alpha * ns.step;
        if (eval_gvals(trial_, trial_gvals_)) {
          const double psi_t =
              -t * cobj_.dot(trial_) + log_barrier(trial_gvals_);
          if (psi_t <= psi0 + s.ls_alpha * alpha * slope) {
            accepted = true;
            psi_new = psi_t;
            break;
          }
        }
        alpha *= s.ls_beta;
      }
      if (!accepted) {
        // Steps below backtracking resolution: at the numerical floor of
        // this centering. Accept as converged only with a small decrement.
        out.converged = 0.5 * out.last_decrement2 <= 1e-4;
        return out;
      }
      z.swap(trial_);
      gv.swap(trial_gvals_);
      ++out.iters;
      out.last_alpha = alpha;
      // At large t the centering objective is ~t*|obj| and decrements below
      // double resolution cannot be measured; a step with no measurable
      // progress and a small decrement is a converged centering.
      if (psi0 - psi_new <= 1e-12 * std::max(1.0, std::abs(psi0)) &&
          0.5 * ns.decrement2 <= 1e-5) {
        out.converged = true;
        return out;
      }
      if (trace)
        *trace << t << "," << objective(z) << "," << ns.decrement2 << ","
               << alpha << "\n";
      if (early_stop && (*early_stop)(z)) {
        out.early = true;
        out.converged = true;
        return out;
      }
    }
    return out;
  }

 private:
  const ConvexProgram& prog_;
  int dim_;
  Eigen::VectorXd cobj_;
  Eigen::VectorXd gvals_, trial_gvals_;
  std::vector<char> seen_;
  std::vector<int> touched_;
  Eigen::VectorXd svals_;
  Eigen::VectorXd grad_;
  Eigen::MatrixXd hess_;
  Eigen::VectorXd trial_;

 public:
  Eigen::VectorXd& gvals_buffer() { return gvals_; }
};

struct BarrierRun {
  Eigen::VectorXd z;
  double gap = kInf;
  int newton_total = 0;
  bool converged = false;
  bool early = false;
};

BarrierRun run_barrier(const ConvexProgram& prog, const Eigen::VectorXd& z0,
                       const BarrierSettings& s,
                       const std::function<bool(const Eigen::VectorXd&)>* early_stop) {
  s.validate();
  if (z0.size() != prog.dim)
    throw std::invalid_argument("barrier: start point has wrong dimension");
  if (prog.constraints.empty()) {
    if (prog.objective.empty()) return {z0, 0.0, 0, true, false};
    throw SolverFailure("barrier: unconstrained program with nonzero objective");
  }

  BarrierEngine eng(prog);
  Eigen::VectorXd z = z0;
  Eigen::VectorXd& gv = eng.gvals_buffer();
  if (!eng.eval_gvals(z, gv))
    throw std::invalid_argument("barrier: start point not strictly feasible");

  std::ofstream trace;
  if (!s.trace_path.empty()) {
    trace.open(s.trace_path);
    trace << "schema,mcua.barrier-trace.v1\n";
    trace << "t,objective,newton_decrement2,step_alpha\n";
  }

  const double mc = static_cast<double>(prog.constraints.size());
  BarrierRun out;
  double t = s.t0;
  while (true) {
    const auto cr = eng.center(z, gv, t, s, early_stop,
                               trace.is_open() ? &trace : nullptr);
    out.newton_total += cr.iters;
    if (cr.early) {
      out.z = z;
      out.gap = mc / t;
      out.early = true;
      out.converged = true;
      return out;
    }
    if (!cr.converged) {
      out.z = z;
      out.gap = mc / t;
      out.converged = false;
      return out;
    }
    if (mc / t <= s.eps_gap) {
      out.z = z;
      out.gap = mc / t;
      out.converged = true;
      return out;
    }
    t *= s.mu;
  }
}

}  // namespace

Eigen::VectorXd clamp_to_bounds(const ConvexProgram& prog, Eigen::VectorXd z) {
  ConvexProgram tmp;
  const Eigen::VectorXd* lo = &prog.lower;
  const Eigen::VectorXd* hi = &prog.upper;
  if (prog.lower.size() != prog.dim || prog.upper.size() != prog.dim) {
    tmp = prog;
    tmp.derive_bounds();
    lo = &tmp.lower;
    hi = &tmp.upper;
  }
  for (int i = 0; i < prog.dim; ++i) {
    const double l = (*lo)(i), h = (*hi)(i);
    double margin = 1e-3;
    if (std::isfinite(l) && std::isfinite(h))
      margin = std::min(margin, 0.25 * (h - l));
    if (std::isfinite(l) && z(i) < l + margin) z(i) = l + margin;
    if (std::isfinite(h) && z(i) > h - margin) z(i) = h - margin;
  }
  return z;
}

std::optional<Eigen::VectorXd> phase1(const ConvexProgram& prog,
                                      const Eigen::VectorXd& hint,
                                      const BarrierSettings& settings) {
  if (prog.constraints.empty()) return hint;
  if (hint.size() != prog.dim)
    throw std::invalid_argument("phase1: hint has wrong dimension");

  if (prog.max_violation(hint) <= -kStrictMargin) return hint;

  Eigen::VectorXd z = clamp_to_bounds(prog, hint);
  double maxg = prog.max_violation(z);
  if (maxg <= -kStrictMargin) return z;
  if (!std::isfinite(maxg)) {
    // Hint outside some log domain even after clamping: restart from the
    // middle of the boxed region.
    ConvexProgram tmp = prog;
    if (tmp.lower.size() != tmp.dim) tmp.derive_bounds();
    for (int i = 0; i < prog.dim; ++i) {
      const double l = tmp.lower(i), h = tmp.upper(i);
      if (std::isfinite(l) && std::isfinite(h))
        z(i) = 0.5 * (l + h);
      else if (std::isfinite(l))
        z(i) = l + 1.0;
      else if (std::isfinite(h))
        z(i) = h - 1.0;
      else
        z(i) = 0.0;
    }
    maxg = prog.max_violation(z);
    if (!std::isfinite(maxg))
      throw SolverFailure("phase1: no valid start in the constraint domain");
    if (maxg <= -kStrictMargin) return z;
  }

  // Auxiliary program over (z, s): minimize s subject to g_k(z) <= s and
  // s >= -1.
  ConvexProgram aux;
  aux.dim = prog.dim + 1;
  const int si = prog.dim;
  aux.constraints.reserve(prog.constraints.size() + 1);
  for (const SmoothConstraint& c : prog.constraints) {
    SmoothConstraint ac = c;
    ac.lin.push_back({si, -1.0});
    aux.constraints.push_back(std::move(ac));
  }
  {
    SmoothConstraint lb;
    lb.label = "phase1-s-floor";
    lb.lin.push_back({si, -1.0});
    lb.constant = -1.0;
    aux.constraints.push_back(std::move(lb));
  }
  // Variables without natural bounds (the rate auxiliaries) leave the
  // auxiliary centering unbounded below, since only s carries an objective.
  // A wide box around the start keeps level sets compact without excluding
  // any interior point we could use.
  {
    ConvexProgram tmp = prog;
    if (tmp.lower.size() != tmp.dim) tmp.derive_bounds();
    for (int i = 0; i < prog.dim; ++i) {
      const double r = 1e3 * std::max(1.0, std::abs(z(i)));
      if (!std::isfinite(tmp.lower(i))) {
        SmoothConstraint b;
        b.label = "phase1-box-lo";
        b.lin.push_back({i, -1.0});
        b.constant = z(i) - r;
        aux.constraints.push_back(std::move(b));
      }
      if (!std::isfinite(tmp.upper(i))) {
        SmoothConstraint b;
        b.label = "phase1-box-hi";
        b.lin.push_back({i, 1.0});
        b.constant = -(z(i) + r);
        aux.constraints.push_back(std::move(b));
      }
    }
  }
  aux.objective.push_back({si, -1.0});
  aux.derive_bounds();

  Eigen::VectorXd za(aux.dim);
  za.head(prog.dim) = z;
  za(si) = std::max(maxg + 1.0, -0.5);

  BarrierSettings ps = settings;
  ps.trace_path.clear();
  const std::function<bool(const Eigen::VectorXd&)> want =
      [&](const Eigen::VectorXd& cur) {
        return prog.max_violation(cur.head(prog.dim)) <= -kStrictMargin;
      };
  const BarrierRun run = run_barrier(aux, za, ps, &want);
  if (run.early) return run.z.head(prog.dim).eval();
  if (run.converged) return std::nullopt;  // optimal infeasibility above margin
  // Centering stalled; salvage if the margin happens to hold.
  if (prog.max_violation(run.z.head(prog.dim)) <= -kStrictMargin)
    return run.z.head(prog.dim).eval();
  return std::nullopt;
}

SolveResult solve(const ConvexProgram& prog, const Eigen::VectorXd& z0,
                  const BarrierSettings& settings) {
  const BarrierRun run = run_barrier(prog, z0, settings, nullptr);
  SolveResult res;
  res.z = run.z;
  res.objective = prog.objective_value(run.z);
  res.gap_bound = run.gap;
  res.newton_iters_total = run.newton_total;
  res.status = run.converged ? SolveStatus::optimal : SolveStatus::max_iters;
  return res;
}

}  // namespace mcua
