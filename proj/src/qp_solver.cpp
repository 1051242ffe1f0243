#include "vicscan/qp_solver.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <ostream>

namespace vicscan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxIterations = 100;
constexpr double kFeasTol = 1e-9;

struct Constraint {
  Eigen::RowVectorXd row;
  double rhs = 0.0;
  int id = 0;  // public indexing (bounds first, then general rows)
};

// Bounds and finite general rows in one list; zero rows are resolved here.
// Returns false (with *bad_row set) when a zero row is trivially infeasible.
bool build_constraints(const QpProblem& p, std::vector<Constraint>& out,
                       int* bad_row) {
  const int n = p.num_vars();
  out.clear();
  for (int i = 0; i < n; ++i) {
    if (std::isfinite(p.lb(i))) {
      Constraint c;
      c.row = Eigen::RowVectorXd::Zero(n);
      c.row(i) = -1.0;
      c.rhs = -p.lb(i);
      c.id = i;
      out.push_back(std::move(c));
    }
    if (std::isfinite(p.ub(i))) {
      Constraint c;
      c.row = Eigen::RowVectorXd::Zero(n);
      c.row(i) = 1.0;
      c.rhs = p.ub(i);
      c.id = n + i;
      out.push_back(std::move(c));
    }
  }
  for (int i = 0; i < p.A.rows(); ++i) {
    if (!std::isfinite(p.b(i))) continue;  // one-sided window row
    if (p.A.row(i).cwiseAbs().maxCoeff() < 1e-14) {
      if (p.b(i) < -1e-12) {
        *bad_row = i;
        return false;
      }
      continue;  // trivially satisfied
    }
    Constraint c;
    c.row = p.A.row(i);
    c.rhs = p.b(i);
    c.id = 2 * n + i;
    out.push_back(std::move(c));
  }
  return true;
}

struct CoreResult {
  Eigen::VectorXd u;
  std::vector<int> working;  // indices into the constraint list
  Eigen::VectorXd multipliers;
  QpStatus status = QpStatus::max_iter;
  int iterations = 0;
};

// Primal active-set loop from a feasible starting point.
CoreResult active_set_solve(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                            const std::vector<Constraint>& cons,
                            Eigen::VectorXd u) {
  const int n = static_cast<int>(g.size());
  const double ridge =
      H.trace() > 0.0 ? 1e-12 * H.trace() / n : 1e-12;
  const Eigen::MatrixXd Hr =
      H + ridge * Eigen::MatrixXd::Identity(n, n);

  CoreResult res;
  std::vector<int>& W = res.working;

  for (int iter = 1; iter <= kMaxIterations; ++iter) {
    res.iterations = iter;
    const int k = static_cast<int>(W.size());
    Eigen::MatrixXd C(k, n);
    for (int i = 0; i < k; ++i) C.row(i) = cons[W[i]].row;

    // Step restricted to the working-set null space.
    Eigen::VectorXd step = Eigen::VectorXd::Zero(n);
    const Eigen::VectorXd grad = Hr * u + g;
    if (k == 0) {
      step = -Hr.ldlt().solve(grad);
    } else {
      Eigen::FullPivLU<Eigen::MatrixXd> lu(C);
      const Eigen::MatrixXd Z = lu.kernel();
      if (Z.cols() > 0 && Z.cwiseAbs().maxCoeff() > 0.0) {
        const Eigen::MatrixXd Hz = Z.transpose() * Hr * Z;
        const Eigen::VectorXd pz = -Hz.ldlt().solve(Z.transpose() * grad);
        step = Z * pz;
      }
    }
    if (!step.allFinite()) step.setZero();

    const double step_tol = 1e-11 * (1.0 + u.cwiseAbs().maxCoeff());
    if (step.cwiseAbs().maxCoeff() <= step_tol) {
      // Stationary on the working set; inspect multipliers.
      Eigen::VectorXd lambda(k);
      if (k > 0) {
        Eigen::MatrixXd Ct(n, k);
        for (int i = 0; i < k; ++i) Ct.col(i) = cons[W[i]].row.transpose();
        lambda = Ct.completeOrthogonalDecomposition().solve(-(H * u + g));
      }
      int drop = -1;
      double most_negative = -1e-9;
      for (int i = 0; i < k; ++i) {
        if (lambda(i) < most_negative) {
          most_negative = lambda(i);
          drop = i;
        }
      }
      if (drop < 0) {
        res.u = u;
        res.multipliers = k > 0 ? lambda : Eigen::VectorXd();
        res.status = QpStatus::optimal;
        return res;
      }
      W.erase(W.begin() + drop);
      continue;
    }

    // Ratio test against the non-working constraints.
    double alpha = 1.0;
    int blocker = -1;
    for (std::size_t j = 0; j < cons.size(); ++j) {
      bool in_w = false;
      for (int wi : W)
        if (wi == static_cast<int>(j)) in_w = true;
      if (in_w) continue;
      const double d = cons[j].row.dot(step);
      if (d <= 1e-13 * (1.0 + std::abs(cons[j].rhs))) continue;
      const double slack = std::max(0.0, cons[j].rhs - cons[j].row.dot(u));
      const double a = slack / d;
      if (a < alpha - 1e-15) {
        alpha = a;
        blocker = static_cast<int>(j);
      }
    }
    u += alpha * step;
    if (blocker >= 0) W.push_back(blocker);
  }
  res.u = u;
  res.status = QpStatus::max_iter;
  return res;
}

double objective_of(const QpProblem& p, const Eigen::VectorXd& u) {
  return 0.5 * u.dot(p.H * u) + p.g.dot(u);
}

}  // namespace

void QpProblem::validate() const {
  const int n = num_vars();
  if (H.rows() != n || H.cols() != n)
    throw PreconditionError("qp: H size mismatch");
  if (lb.size() != n || ub.size() != n)
    throw PreconditionError("qp: bound size mismatch");
  if (A.rows() != b.size() || (A.rows() > 0 && A.cols() != n))
    throw PreconditionError("qp: inequality block size mismatch");
  if ((H - H.transpose()).cwiseAbs().maxCoeff() >
      1e-10 * (1.0 + H.cwiseAbs().maxCoeff()))
    throw PreconditionError("qp: H must be symmetric");
  for (int i = 0; i < n; ++i) {
    if (lb(i) > ub(i))
      throw PreconditionError("qp: lb must be <= ub elementwise");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < -1e-10 * scale)
    throw PreconditionError("qp: H must be positive semidefinite");
}

const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::optimal:
      return "optimal";
    case QpStatus::infeasible:
      return "infeasible";
    case QpStatus::max_iter:
      return "max_iter";
  }
  return "?";
}

QpSolution QpSolver::solve(const QpProblem& p) {
  p.validate();
  const int n = p.num_vars();

  QpSolution sol;
  sol.u = Eigen::VectorXd::Zero(n);

  std::vector<Constraint> cons;
  int bad_row = -1;
  if (!build_constraints(p, cons, &bad_row)) {
    sol.status = QpStatus::infeasible;
    sol.certificate = Eigen::VectorXd::Zero(p.A.rows());
    sol.certificate(bad_row) = 1.0;
    return sol;
  }

  // Starting point: warm-start value when shapes match, else the box center.
  Eigen::VectorXd u0(n);
  for (int i = 0; i < n; ++i) {
    double lo = p.lb(i), hi = p.ub(i);
    double v = 0.0;
    if (std::isfinite(lo) && std::isfinite(hi)) v = 0.5 * (lo + hi);
    else if (std::isfinite(lo)) v = lo;
    else if (std::isfinite(hi)) v = hi;
    u0(i) = v;
  }
  if (warm_u_.size() == n) u0 = warm_u_;
  for (int i = 0; i < n; ++i) u0(i) = std::clamp(u0(i), p.lb(i), p.ub(i));

  // Phase 1 when the general rows are violated at the start point.
  double viol = 0.0;
  for (const Constraint& c : cons)
    viol = std::max(viol, c.row.dot(u0) - c.rhs);
  if (viol > kFeasTol) {
    const int m = static_cast<int>(p.A.rows());
    Eigen::MatrixXd Ha = Eigen::MatrixXd::Zero(n + 1, n + 1);
    const double u_ridge = 1e-8 * (1.0 + (p.H.trace() > 0 ? p.H.trace() / n : 0.0));
    Ha.topLeftCorner(n, n) = u_ridge * Eigen::MatrixXd::Identity(n, n);
    Ha(n, n) = 1.0;
    Eigen::VectorXd ga = Eigen::VectorXd::Zero(n + 1);
    ga.head(n) = -u_ridge * u0;
    Eigen::VectorXd lba(n + 1), uba(n + 1);
    lba.head(n) = p.lb;
    uba.head(n) = p.ub;
    lba(n) = 0.0;
    uba(n) = 2.0 * viol + 1.0;
    Eigen::MatrixXd Aa(m, n + 1);
    Eigen::VectorXd ba(m);
    Aa.setZero();
    for (int i = 0; i < m; ++i) {
      Aa.block(i, 0, 1, n) = p.A.row(i);
      Aa(i, n) = std::isfinite(p.b(i)) ? -1.0 : 0.0;
      ba(i) = std::isfinite(p.b(i)) ? p.b(i) : kInf;
    }
    QpProblem aux{Ha, ga, lba, uba, Aa, ba};
    std::vector<Constraint> aux_cons;
    int aux_bad = -1;
    build_constraints(aux, aux_cons, &aux_bad);
    Eigen::VectorXd start(n + 1);
    start.head(n) = u0;
    start(n) = viol + 0.5;
    const CoreResult ph1 = active_set_solve(Ha, ga, aux_cons, start);
    const double s_star = ph1.u(n);
    if (ph1.status != QpStatus::optimal || s_star > 1e-7 * (1.0 + viol)) {
      sol.status = QpStatus::infeasible;
      sol.u = u0;
      sol.iterations = ph1.iterations;
      // Farkas-style witness: multipliers of the active general rows.
      sol.certificate = Eigen::VectorXd::Zero(m);
      for (std::size_t i = 0; i < ph1.working.size(); ++i) {
        const int id = aux_cons[ph1.working[i]].id;
        if (id >= 2 * (n + 1) && ph1.multipliers.size() > 0) {
          const double lam = ph1.multipliers(static_cast<int>(i));
          if (lam > 0.0) sol.certificate(id - 2 * (n + 1)) = lam;
        }
      }
      return sol;
    }
    u0 = ph1.u.head(n);
    for (int i = 0; i < n; ++i) u0(i) = std::clamp(u0(i), p.lb(i), p.ub(i));
  }

  const CoreResult core = active_set_solve(p.H, p.g, cons, u0);
  sol.u = core.u;
  sol.status = core.status;
  sol.iterations = core.iterations;
  sol.objective = objective_of(p, core.u);
  sol.active_set.clear();
  for (int wi : core.working) sol.active_set.push_back(cons[wi].id);
  if (sol.status == QpStatus::optimal) warm_u_ = sol.u;
  return sol;
}

void QpSolver::reset() { warm_u_.resize(0); }

QpSolution qp_solve(const QpProblem& p) {
  QpSolver solver;
  return solver.solve(p);
}

double KktReport::max_residual() const {
  return std::max({stationarity, primal, complementarity});
}

namespace {

// Lawson-Hanson non-negative least squares: min ‖M x - q‖, x >= 0.
Eigen::VectorXd nnls(const Eigen::MatrixXd& M, const Eigen::VectorXd& q) {
  const int k = static_cast<int>(M.cols());
  Eigen::VectorXd x = Eigen::VectorXd::Zero(k);
  std::vector<bool> passive(k, false);
  for (int outer = 0; outer < 4 * k + 8; ++outer) {
    const Eigen::VectorXd w = M.transpose() * (q - M * x);
    int best = -1;
    double best_w = 1e-12 * (1.0 + q.cwiseAbs().maxCoeff());
    for (int i = 0; i < k; ++i) {
      if (!passive[i] && w(i) > best_w) {
        best_w = w(i);
        best = i;
      }
    }
    if (best < 0) break;
    passive[best] = true;
    for (int inner = 0; inner < 4 * k + 8; ++inner) {
      std::vector<int> pidx;
      for (int i = 0; i < k; ++i)
        if (passive[i]) pidx.push_back(i);
      Eigen::MatrixXd Mp(M.rows(), pidx.size());
      for (std::size_t i = 0; i < pidx.size(); ++i) Mp.col(i) = M.col(pidx[i]);
      const Eigen::VectorXd zp =
          Mp.completeOrthogonalDecomposition().solve(q);
      bool all_pos = true;
      for (int i = 0; i < zp.size(); ++i)
        if (zp(i) <= 0.0) all_pos = false;
      if (all_pos) {
        x.setZero();
        for (std::size_t i = 0; i < pidx.size(); ++i) x(pidx[i]) = zp(i);
        break;
      }
      double alpha = 1.0;
      for (std::size_t i = 0; i < pidx.size(); ++i) {
        if (zp(i) <= 0.0) {
          const double xi = x(pidx[i]);
          if (xi - zp(i) > 0) alpha = std::min(alpha, xi / (xi - zp(i)));
        }
      }
      for (std::size_t i = 0; i < pidx.size(); ++i) {
        x(pidx[i]) += alpha * (zp(i) - x(pidx[i]));
        if (x(pidx[i]) <= 1e-14) {
          x(pidx[i]) = 0.0;
          passive[pidx[i]] = false;
        }
      }
    }
  }
  return x;
}

}  // namespace

KktReport kkt_check(const QpProblem& p, const Eigen::VectorXd& u,
                    double active_tol) {
  p.validate();
  std::vector<Constraint> cons;
  int bad_row = -1;
  build_constraints(p, cons, &bad_row);

  KktReport rep;
  std::vector<int> near_active;
  for (std::size_t i = 0; i < cons.size(); ++i) {
    const double slack = cons[i].rhs - cons[i].row.dot(u);
    rep.primal = std::max(rep.primal, -slack);
    if (slack < active_tol) near_active.push_back(static_cast<int>(i));
  }
  rep.primal = std::max(0.0, rep.primal);

  const int n = p.num_vars();
  const Eigen::VectorXd grad = p.H * u + p.g;
  Eigen::MatrixXd M(n, near_active.size());
  for (std::size_t i = 0; i < near_active.size(); ++i)
    M.col(static_cast<int>(i)) = -cons[near_active[i]].row.transpose();
  Eigen::VectorXd lambda =
      near_active.empty() ? Eigen::VectorXd() : nnls(M, grad);

  Eigen::VectorXd stat = grad;
  for (std::size_t i = 0; i < near_active.size(); ++i) {
    stat += lambda(static_cast<int>(i)) *
            cons[near_active[i]].row.transpose();
    const double slack = cons[near_active[i]].rhs - cons[near_active[i]].row.dot(u);
    rep.complementarity = std::max(
        rep.complementarity, std::abs(lambda(static_cast<int>(i)) * slack));
  }
  rep.stationarity = stat.size() > 0 ? stat.cwiseAbs().maxCoeff() : 0.0;
  return rep;
}

void dump_qp(const QpProblem& p, std::ostream& out) {
  const Eigen::IOFormat fmt(17, 0, " ", "\n", "", "", "", "");
  out << "H " << p.H.rows() << " " << p.H.cols() << "\n"
      << p.H.format(fmt) << "\n";
  out << "g " << p.g.size() << "\n" << p.g.transpose().format(fmt) << "\n";
  out << "lb " << p.lb.size() << "\n" << p.lb.transpose().format(fmt) << "\n";
  out << "ub " << p.ub.size() << "\n" << p.ub.transpose().format(fmt) << "\n";
  out << "A " << p.A.rows() << " " << p.A.cols() << "\n";
  if (p.A.rows() > 0) out << p.A.format(fmt) << "\n";
  out << "b " << p.b.size() << "\n";
  if (p.b.size() > 0) out << p.b.transpose().format(fmt) << "\n";
}

}  // namespace vicscan
