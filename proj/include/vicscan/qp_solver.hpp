#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "vicscan/common.hpp"

namespace vicscan {

/// Small dense convex QP:
///   min ½ uᵀH u + gᵀu   s.t.  lb <= u <= ub,  A u <= b.
/// H symmetric positive semidefinite (tiny negative eigenvalues up to
/// 1e-10·‖H‖ are tolerated and regularized away). Rows of A with an
/// infinite right-hand side are ignored, so callers can express one-sided
/// windows without special cases.
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::VectorXd lb, ub;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;

  int num_vars() const { return static_cast<int>(g.size()); }
  void validate() const;
};

enum class QpStatus { optimal, infeasible, max_iter };

const char* to_string(QpStatus s);

/// Constraint indexing in active sets / reports: i in [0, n) lower bound on
/// variable i, [n, 2n) upper bound on variable i-n, >= 2n general row i-2n.
struct QpSolution {
  Eigen::VectorXd u;
  double objective = 0.0;
  QpStatus status = QpStatus::max_iter;
  std::vector<int> active_set;
  /// Non-negative multipliers over general rows witnessing infeasibility
  /// (a combination of rows that cannot hold together with the box);
  /// empty unless status == infeasible.
  Eigen::VectorXd certificate;
  int iterations = 0;
};

/// Primal active-set solver. One instance per control loop: solve() keeps
/// the previous optimum as a warm start for the next call (same problem
/// size). Instances are independent; do not share one across threads.
class QpSolver {
 public:
  QpSolution solve(const QpProblem& p);
  void reset();

 private:
  Eigen::VectorXd warm_u_;
};

/// Cold-start convenience wrapper.
QpSolution qp_solve(const QpProblem& p);

struct KktReport {
  double stationarity = 0.0;    // ‖H u + g + Σ λᵢ aᵢ‖∞ with best λ >= 0
  double primal = 0.0;          // max constraint violation
  double complementarity = 0.0; // max |λᵢ · slackᵢ|
  double max_residual() const;
};

/// Pure diagnostic: recovers multipliers for the near-active constraints by
/// non-negative least squares and reports the KKT residuals at u.
KktReport kkt_check(const QpProblem& p, const Eigen::VectorXd& u,
                    double active_tol = 1e-6);

/// One matrix per block, plain text; meant for offline reproduction of a
/// failing cycle.
void dump_qp(const QpProblem& p, std::ostream& out);

}  // namespace vicscan
