#pragma once

#include <optional>

#include <Eigen/Dense>

#include "ovp/error.hpp"

namespace ovp {

enum class SolverKind { MinNormReal, MinNormBinary, Svm };

const char* to_string(SolverKind kind) noexcept;

struct Coefficients {
  Eigen::VectorXd alpha;
  SolverKind solver = SolverKind::MinNormReal;
  // Max interpolation error (min-norm) or max margin shortfall (SVM).
  double residual_inf = 0.0;
};

struct DualSolution {
  Eigen::VectorXd beta;
  int iterations = 0;
  double kkt_gap = 0.0;
};

struct SolverOptions {
  double tol = 1e-10;
  int max_iter = 3;
  // <= 0 selects the automatic jitter 1e-10 * trace(A) / n.
  double jitter = 0.0;

  /// Defaults for the Cholesky path; max_iter bounds iterative refinement.
  static SolverOptions linear() { return {1e-10, 3, 0.0}; }
  /// Defaults for the dual solver; max_iter bounds coordinate sweeps.
  static SolverOptions svm() { return {1e-8, 100000, 0.0}; }
};

/// A = phi * phi^T, computed as a symmetric rank update.
Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd& phi);

/// Cholesky factorization of a Gram matrix. A failed factorization is retried
/// once with jitter * I added; a second failure throws SingularGram.
class GramFactor {
 public:
  explicit GramFactor(Eigen::MatrixXd gram, double jitter = 0.0);

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

  const Eigen::MatrixXd& gram() const noexcept { return gram_; }
  Eigen::Index size() const noexcept { return gram_.rows(); }
  double jitter_applied() const noexcept { return jitter_applied_; }
  /// Reciprocal of LLT's 1-norm rcond estimate.
  double condition_estimate() const noexcept { return condition_; }

 private:
  Eigen::MatrixXd gram_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double jitter_applied_ = 0.0;
  double condition_ = 1.0;
};

/// Minimum-l2-norm alpha with phi * alpha = targets: alpha = phi^T A^{-1} t.
/// The result is tagged MinNormBinary when every target is +-1.
Coefficients min_norm_interpolate(const Eigen::MatrixXd& phi,
                                  const Eigen::VectorXd& targets,
                                  const SolverOptions& opts = SolverOptions::linear());

/// Same, reusing a factorization of phi * phi^T.
Coefficients min_norm_interpolate(const Eigen::MatrixXd& phi,
                                  const GramFactor& factor,
                                  const Eigen::VectorXd& targets,
                                  const SolverOptions& opts = SolverOptions::linear());

struct SvmResult {
  Coefficients coefficients;
  DualSolution dual;
};

/// Raised when the sweep budget runs out; carries the best iterate.
class SvmNotConverged : public Error {
 public:
  SvmNotConverged(const std::string& message, SvmResult best)
      : Error(ErrorCode::NotConverged, message), best_(std::move(best)) {}

  const SvmResult& best() const noexcept { return best_; }

 private:
  SvmResult best_;
};

/// Hard-margin SVM without bias, solved in the dual
///   max_beta  y^T beta - 1/2 beta^T A beta   s.t.  y_i beta_i >= 0
/// by projected coordinate ascent warm-started at A^{-1} y, with an exact
/// equality-constrained solve on the current support set once it settles.
SvmResult solve_svm_hard_margin(const Eigen::MatrixXd& phi,
                                const Eigen::VectorXd& y,
                                const SolverOptions& opts = SolverOptions::svm());

/// Same, reusing the Gram matrix (and its factorization when one exists).
SvmResult solve_svm_hard_margin(const Eigen::MatrixXd& phi,
                                const Eigen::MatrixXd& gram,
                                const GramFactor* factor,
                                const Eigen::VectorXd& y,
                                const SolverOptions& opts = SolverOptions::svm());

struct KktReport {
  bool feasible = false;
  double stationarity_gap = 0.0;  // ||alpha - phi^T beta||_inf
  double slackness_gap = 0.0;     // max_i |beta_i| * |margin_i - 1|
  double margin_min = 0.0;
  double sign_violation = 0.0;    // max_i max(0, -y_i beta_i)
};

KktReport kkt_check(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                    double tol);

/// Fraction of points with margin y_i <phi_i, alpha> <= 1 + tol.
double support_vector_fraction(const Eigen::MatrixXd& phi,
                               const Eigen::VectorXd& y,
                               const Eigen::VectorXd& alpha, double tol = 1e-6);

struct SlacknessPrediction {
  bool all_sv = false;
  double min_value = 0.0;  // min_i y_i (A^{-1} y)_i
};

/// Certifies SVM == min-norm binary interpolation when A^{-1} y agrees in sign
/// with y everywhere.
SlacknessPrediction slackness_predictor(const Eigen::MatrixXd& phi,
                                        const Eigen::VectorXd& y);
SlacknessPrediction slackness_predictor(const GramFactor& factor,
                                        const Eigen::VectorXd& y);

}  // namespace ovp
