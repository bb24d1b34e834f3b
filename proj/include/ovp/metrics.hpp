#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

#include "ovp/ensembles.hpp"

namespace ovp {

/// Survival and contamination of a coefficient vector against the 1-sparse
/// truth e_t / sqrt(lambda_t).
struct SuCnReport {
  double su = 0.0;
  double cn = 0.0;
  double snr = 0.0;  // su / cn; +-inf when cn == 0, NaN when both vanish
};

struct LossReport {
  double excess_mse = 0.0;
  double excess_cls = 0.0;
};

struct EmpiricalReport {
  double mse_hat = 0.0;
  double err_hat = 0.0;
  std::size_t n_test = 0;
  double std_err = 0.0;         // binomial standard error of err_hat
  double mse_sample_std = 0.0;  // sample std of the per-point squared errors
};

struct MarginReport {
  double gamma = 0.0;       // min_i y_i <phi_i, alpha>
  double gamma_n = 0.0;     // gamma / ||alpha||_2
  double frob = 0.0;        // ||Phi_train||_F
  double alpha_norm = 0.0;  // ||alpha||_2
  double ramp_term = 0.0;
  double complexity_term = 0.0;  // (4 / gamma_n) * frob / n, scale invariant
  double confidence_term = 0.0;  // (8 / gamma + 1) sqrt(ln(4/delta) / 2n)
  double bound = 0.0;
  double delta = 0.0;
};

/// sqrt(lambda_t) * alpha_t, t 1-based. Throws IndexOutOfRange.
double survival(const Eigen::VectorXd& alpha, const Spectrum& spectrum,
                std::size_t t);

/// sqrt(sum_{j != t} lambda_j alpha_j^2). Throws IndexOutOfRange.
double contamination(const Eigen::VectorXd& alpha, const Spectrum& spectrum,
                     std::size_t t);

SuCnReport survival_contamination(const Eigen::VectorXd& alpha,
                                  const Spectrum& spectrum, std::size_t t);

/// Exact Gaussian-feature losses from (SU, CN):
///   excess_mse = (1 - su)^2 + cn^2
///   excess_cls = 1/2 - atan(su / cn) / pi
/// With cn == 0 the classification error takes its limit: 0 for su > 0, 1 for
/// su < 0 and 1/2 for su == 0.
LossReport analytic_losses(double su, double cn);

/// Monte-Carlo test losses for diagonal Gaussian features with spectrum
/// lambda and truth e_t / sqrt(lambda_t). Deterministic in seed.
EmpiricalReport empirical_losses(const Eigen::VectorXd& alpha, std::size_t t,
                                 const Spectrum& spectrum, std::size_t n_test,
                                 std::uint64_t seed);

/// Monte-Carlo test losses for the weak-features ensemble, where the target is
/// the raw input X and the features are X * 1 + W.
EmpiricalReport empirical_losses_weak(const Eigen::VectorXd& alpha,
                                      double sigma, std::size_t n_test,
                                      std::uint64_t seed);

/// Kolmogorov distance between the empirical CDF of V/U (U, V i.i.d. standard
/// normal) and the standard Cauchy CDF 1/2 + atan(t)/pi.
double cauchy_ratio_check(std::size_t n_samples, std::uint64_t seed);

/// Standard Cauchy CDF.
double cauchy_cdf(double t) noexcept;

/// Margin-based generalization bound for a linear classifier:
///   mean ramp loss + (4/gamma_n) ||Phi||_F / n + (8/gamma + 1) sqrt(ln(4/delta)/(2n)).
/// Throws NotSeparating if any training margin is <= 0.
MarginReport margin_bound(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& alpha, double delta = 0.05);

}  // namespace ovp
