#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ovp {

/// Weighted real Fourier features on n regularly spaced points of (-pi, pi).
/// Feature order: 1/sqrt(2 pi), then sin(f x)/sqrt(pi), cos(f x)/sqrt(pi) for
/// f = 1 .. (d-1)/2. weights[f] is the preference for frequency f (shared by
/// its sine and cosine); the fit minimizes sum_j coef_j^2 / weight_j.
struct FourierDesign {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> weights;  // length (d - 1) / 2 + 1
};

/// Throws EvenN / EvenD / InvalidParams.
void validate(const FourierDesign& design);

/// Frequencies whose sine and cosine fall in the first `favored` features get
/// weight lambda_h, everything else weight 1.
FourierDesign bilevel_fourier_design(std::size_t n, std::size_t d,
                                     std::size_t favored, double lambda_h);

/// Bi-level design parameterized by exponents: s = round(n^r) favored
/// features with lambda_h = n^(p-r-q), and d / n the smallest odd integer
/// >= 1 + n^(p-1).
FourierDesign bilevel_fourier_design(std::size_t n, double p, double q, double r);

/// weights[f] = (f + 1)^-m.
FourierDesign polydecay_fourier_design(std::size_t n, std::size_t d, double m);

/// -pi + pi/n, -pi + 3 pi/n, ..., pi - pi/n. Throws EvenN unless n is odd and
/// >= 3.
std::vector<double> regular_grid(std::size_t n);

/// |points| x d feature matrix. Throws EvenD for even d.
Eigen::MatrixXd fourier_features(std::span<const double> points, std::size_t d);

/// Per-feature weights (length d) expanded from the per-frequency weights.
Eigen::VectorXd feature_weights(const FourierDesign& design);

/// 0-based column of cos(f x) / sqrt(pi).
inline std::size_t cosine_column(std::size_t f) noexcept { return 2 * f; }
/// 0-based column of sin(f x) / sqrt(pi).
inline std::size_t sine_column(std::size_t f) noexcept { return 2 * f - 1; }

/// Weighted minimum-norm interpolation of targets sampled on the regular grid.
/// Targets with grid mean above 1e-9 in magnitude are rejected
/// (InvalidParams): the constant feature and its aliases are scaled
/// differently, so true signals are kept mean-free.
Eigen::VectorXd weighted_min_norm(const FourierDesign& design,
                                  const Eigen::VectorXd& targets);

/// Closed-form fit of cos(x) when the true feature has weight lambda_h and its
/// m = d/n - 1 aliases weight 1:
///   a = lambda_h / (lambda_h + m), b = 1 / (lambda_h + m), sigma_cn = sqrt(m) b
/// a and b are relative to the true coefficient.
struct ClosedForm {
  double a = 0.0;
  double b = 0.0;
  double sigma_cn = 0.0;
};

ClosedForm closed_form_alias(std::size_t n, std::size_t d, double lambda_h);

/// Piecewise power-law approximations of survival and contamination with
/// lambda_h = n^(p-r-q) and n^(p-1) aliases. Throws BoundaryCase at q = 1 - r.
struct RegimeApprox {
  double a_approx = 0.0;
  double sigma_cn_approx = 0.0;
};

RegimeApprox fourier_regime_approx(double p, double q, double r, std::size_t n);

/// Union bound on the test misclassification probability of the cos(x) fit:
/// (2/pi) asin(min(1, u)) + u with u = n^(-eps/2),
/// eps = (p-1)/2 - (q - (1-r)). Throws InvalidRegime when eps <= 0.
double fourier_cls_upper_bound(double p, double q, double r, std::size_t n);

/// Predictor value sum_j coef_j feature_j(x).
double fourier_predict(const Eigen::VectorXd& coefficients, double x);

/// Fraction of x ~ Unif(-pi, pi) where sgn(prediction) != sgn(cos x).
double fourier_test_error(const Eigen::VectorXd& coefficients,
                          std::size_t n_test, std::uint64_t seed);

}  // namespace ovp
