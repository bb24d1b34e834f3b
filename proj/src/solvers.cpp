#include "ovp/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace ovp {

namespace {

bool all_binary(const Eigen::VectorXd& v) {
  return (v.array().abs() == 1.0).all();
}

double inf_norm(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

void require_shapes(const Eigen::MatrixXd& phi, const Eigen::VectorXd& v,
                    const char* what) {
  if (phi.rows() != v.size()) {
    std::ostringstream msg;
    msg << what << ": phi has " << phi.rows() << " rows but vector has "
        << v.size() << " entries";
    throw Error(ErrorCode::InvalidParams, msg.str());
  }
}

struct DualState {
  Eigen::VectorXd gamma;    // y_i * beta_i >= 0
  Eigen::VectorXd margins;  // Q gamma
};

// Largest violation across primal feasibility and complementary slackness;
// dual feasibility holds by construction.
double kkt_violation(const DualState& s) {
  double gap = 0.0;
  for (Eigen::Index i = 0; i < s.gamma.size(); ++i) {
    const double m = s.margins[i];
    gap = std::max(gap, 1.0 - m);
    gap = std::max(gap, s.gamma[i] * std::abs(m - 1.0));
  }
  return gap;
}

// Solves Q_SS x = 1 on the support of gamma and accepts the result when it is
// dual feasible and every other point keeps margin >= 1 - tol.
bool polish(const Eigen::MatrixXd& q, DualState& s, double tol) {
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < s.gamma.size(); ++i) {
    if (s.gamma[i] > 0.0) support.push_back(i);
  }
  if (support.empty()) return false;
  const auto k = static_cast<Eigen::Index>(support.size());
  Eigen::MatrixXd qs(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) qs(a, b) = q(support[a], support[b]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(qs);
  if (llt.info() != Eigen::Success) return false;
  const Eigen::VectorXd x = llt.solve(Eigen::VectorXd::Ones(k));
  if ((x.array() <= 0.0).any()) return false;

  DualState candidate;
  candidate.gamma = Eigen::VectorXd::Zero(s.gamma.size());
  for (Eigen::Index a = 0; a < k; ++a) candidate.gamma[support[a]] = x[a];
  candidate.margins = q * candidate.gamma;
  if (kkt_violation(candidate) > kkt_violation(s) &&
      kkt_violation(candidate) > tol) {
    return false;
  }
  s = std::move(candidate);
  return true;
}

SvmResult finish(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y,
                 const DualState& s, int sweeps) {
  SvmResult out;
  out.dual.beta = y.cwiseProduct(s.gamma);
  out.dual.iterations = sweeps;
  out.coefficients.alpha = phi.transpose() * out.dual.beta;
  out.coefficients.solver = SolverKind::Svm;

  const Eigen::VectorXd margins =
      y.cwiseProduct(phi * out.coefficients.alpha);
  double shortfall = 0.0;
  double gap = 0.0;
  for (Eigen::Index i = 0; i < margins.size(); ++i) {
    shortfall = std::max(shortfall, 1.0 - margins[i]);
    gap = std::max(gap, s.gamma[i] * std::abs(margins[i] - 1.0));
  }
  out.coefficients.residual_inf = shortfall;
  out.dual.kkt_gap = std::max(shortfall, gap);
  return out;
}

}  // namespace

const char* to_string(SolverKind kind) noexcept {
  switch (kind) {
    case SolverKind::MinNormReal: return "MinNormReal";
    case SolverKind::MinNormBinary: return "MinNormBinary";
    case SolverKind::Svm: return "SVM";
  }
  return "Unknown";
}

Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd& phi) {
  const Eigen::Index n = phi.rows();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(phi);
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  return gram;
}

GramFactor::GramFactor(Eigen::MatrixXd gram, double jitter)
    : gram_(std::move(gram)) {
  if (gram_.rows() != gram_.cols()) {
    throw Error(ErrorCode::InvalidParams, "Gram matrix must be square");
  }
  llt_.compute(gram_);
  if (llt_.info() != Eigen::Success) {
    const Eigen::Index n = gram_.rows();
    jitter_applied_ = jitter > 0.0
                          ? jitter
                          : 1e-10 * gram_.trace() / static_cast<double>(std::max<Eigen::Index>(n, 1));
    Eigen::MatrixXd shifted = gram_;
    shifted.diagonal().array() += jitter_applied_;
    llt_.compute(shifted);
    if (llt_.info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "Gram matrix is not positive definite even after jitter "
          << jitter_applied_;
      throw Error(ErrorCode::SingularGram, msg.str());
    }
  }
  const double rcond = llt_.rcond();
  condition_ = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
}

Eigen::VectorXd GramFactor::solve(const Eigen::VectorXd& rhs) const {
  return llt_.solve(rhs);
}

Coefficients min_norm_interpolate(const Eigen::MatrixXd& phi,
                                  const Eigen::VectorXd& targets,
                                  const SolverOptions& opts) {
  require_shapes(phi, targets, "min_norm_interpolate");
  const GramFactor factor(gram_matrix(phi), opts.jitter);
  return min_norm_interpolate(phi, factor, targets, opts);
}

Coefficients min_norm_interpolate(const Eigen::MatrixXd& phi,
                                  const GramFactor& factor,
                                  const Eigen::VectorXd& targets,
                                  const SolverOptions& opts) {
  require_shapes(phi, targets, "min_norm_interpolate");
  if (factor.size() != phi.rows()) {
    throw Error(ErrorCode::InvalidParams, "factor does not match phi");
  }
  // Iterative refinement on the dual weights: w <- w + A^{-1}(t - phi phi^T w).
  Eigen::VectorXd w = factor.solve(targets);
  Coefficients out;
  out.solver = all_binary(targets) ? SolverKind::MinNormBinary
                                   : SolverKind::MinNormReal;
  out.alpha = phi.transpose() * w;
  Eigen::VectorXd residual = targets - phi * out.alpha;
  const double limit = opts.tol * (1.0 + inf_norm(targets));
  for (int step = 0; step < opts.max_iter && inf_norm(residual) > limit; ++step) {
    w += factor.solve(residual);
    out.alpha = phi.transpose() * w;
    residual = targets - phi * out.alpha;
  }
  out.residual_inf = inf_norm(residual);
  if (out.residual_inf > limit) {
    std::ostringstream msg;
    msg << "interpolation residual " << out.residual_inf << " exceeds " << limit
        << " (condition estimate " << factor.condition_estimate() << ")";
    throw Error(ErrorCode::SingularGram, msg.str());
  }
  return out;
}

SvmResult solve_svm_hard_margin(const Eigen::MatrixXd& phi,
                                const Eigen::VectorXd& y,
                                const SolverOptions& opts) {
  require_shapes(phi, y, "solve_svm_hard_margin");
  Eigen::MatrixXd gram = gram_matrix(phi);
  std::optional<GramFactor> factor;
  try {
    factor.emplace(gram, opts.jitter);
  } catch (const Error&) {
    // Coordinate ascent does not need A^{-1}; start from zero instead.
  }
  return solve_svm_hard_margin(phi, gram, factor ? &*factor : nullptr, y, opts);
}

SvmResult solve_svm_hard_margin(const Eigen::MatrixXd& phi,
                                const Eigen::MatrixXd& gram,
                                const GramFactor* factor,
                                const Eigen::VectorXd& y,
                                const SolverOptions& opts) {
  require_shapes(phi, y, "solve_svm_hard_margin");
  if (!all_binary(y)) {
    throw Error(ErrorCode::InvalidParams, "SVM labels must be +-1");
  }
  if (!(opts.tol > 0.0) || opts.max_iter < 1) {
    throw Error(ErrorCode::InvalidParams, "SVM options need tol > 0, max_iter >= 1");
  }
  const Eigen::Index n = y.size();
  // Q = D_y A D_y; in gamma = D_y beta the sign constraint is gamma >= 0 and
  // Q gamma is the vector of training margins.
  const Eigen::MatrixXd q = y.asDiagonal() * gram * y.asDiagonal();
  const double q_max = q.diagonal().maxCoeff();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(q(i, i) > 0.0)) {
      throw Error(ErrorCode::Infeasible,
                  "a zero feature vector cannot reach margin 1");
    }
  }

  DualState state;
  if (factor != nullptr) {
    state.gamma = y.cwiseProduct(factor->solve(y)).cwiseMax(0.0);
  } else {
    state.gamma = Eigen::VectorXd::Zero(n);
  }
  state.margins = q * state.gamma;

  int sweep = 0;
  double gap = kkt_violation(state);
  std::vector<bool> last_support(static_cast<std::size_t>(n), false);
  while (gap > opts.tol && sweep < opts.max_iter) {
    ++sweep;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double updated =
          std::max(0.0, state.gamma[i] + (1.0 - state.margins[i]) / q(i, i));
      const double delta = updated - state.gamma[i];
      if (delta != 0.0) {
        state.margins.noalias() += delta * q.col(i);
        state.gamma[i] = updated;
      }
    }
    state.margins = q * state.gamma;  // drop accumulated rounding

    bool stable = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool active = state.gamma[i] > 0.0;
      if (active != last_support[static_cast<std::size_t>(i)]) stable = false;
      last_support[static_cast<std::size_t>(i)] = active;
    }
    if (stable || sweep % 25 == 0) polish(q, state, opts.tol);
    gap = kkt_violation(state);

    if (sweep % 1000 == 0) {
      // Farkas direction: gamma / sum(gamma) drifting to a point where
      // sum_i gamma_i y_i phi_i vanishes means the data are not separable.
      const double total = state.gamma.sum();
      if (total * q_max >= 1e6) {
        const Eigen::VectorXd u = state.gamma / total;
        if (u.dot(q * u) <= 1e-10 * q_max) {
          throw Error(ErrorCode::Infeasible,
                      "data are not linearly separable through the origin");
        }
      }
    }
  }

  SvmResult result = finish(phi, y, state, sweep);
  if (result.dual.kkt_gap > opts.tol) {
    std::ostringstream msg;
    msg << "SVM dual ascent stopped after " << sweep << " sweeps with KKT gap "
        << result.dual.kkt_gap;
    throw SvmNotConverged(msg.str(), std::move(result));
  }
  return result;
}

KktReport kkt_check(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                    double tol) {
  require_shapes(phi, y, "kkt_check");
  require_shapes(phi, beta, "kkt_check");
  if (phi.cols() != alpha.size()) {
    throw Error(ErrorCode::InvalidParams, "kkt_check: alpha has wrong length");
  }
  KktReport report;
  const Eigen::VectorXd margins = y.cwiseProduct(phi * alpha);
  report.margin_min = margins.size() ? margins.minCoeff() : 0.0;
  report.stationarity_gap = inf_norm(alpha - phi.transpose() * beta);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    report.slackness_gap = std::max(
        report.slackness_gap, std::abs(beta[i]) * std::abs(margins[i] - 1.0));
    report.sign_violation = std::max(report.sign_violation, -y[i] * beta[i]);
  }
  report.feasible = report.margin_min >= 1.0 - tol &&
                    report.stationarity_gap <= tol * (1.0 + inf_norm(alpha)) &&
                    report.slackness_gap <= tol && report.sign_violation <= tol;
  return report;
}

double support_vector_fraction(const Eigen::MatrixXd& phi,
                               const Eigen::VectorXd& y,
                               const Eigen::VectorXd& alpha, double tol) {
  require_shapes(phi, y, "support_vector_fraction");
  if (y.size() == 0) return 0.0;
  const Eigen::VectorXd margins = y.cwiseProduct(phi * alpha);
  const auto count = (margins.array() <= 1.0 + tol).count();
  return static_cast<double>(count) / static_cast<double>(y.size());
}

SlacknessPrediction slackness_predictor(const Eigen::MatrixXd& phi,
                                        const Eigen::VectorXd& y) {
  require_shapes(phi, y, "slackness_predictor");
  return slackness_predictor(GramFactor(gram_matrix(phi)), y);
}

SlacknessPrediction slackness_predictor(const GramFactor& factor,
                                        const Eigen::VectorXd& y) {
  if (factor.size() != y.size()) {
    throw Error(ErrorCode::InvalidParams, "slackness_predictor: size mismatch");
  }
  SlacknessPrediction out;
  const Eigen::VectorXd weights = y.cwiseProduct(factor.solve(y));
  out.min_value = weights.size() ? weights.minCoeff() : 0.0;
  out.all_sv = out.min_value > 0.0;
  return out;
}

}  // namespace ovp
