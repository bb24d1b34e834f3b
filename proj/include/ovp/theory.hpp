#pragma once

#include <cstddef>
#include <vector>

#include "ovp/ensembles.hpp"

namespace ovp {

enum class Regime { BothSucceed, ClassificationOnly, BothFail, Boundary };

const char* to_string(Regime regime) noexcept;

/// Asymptotic outcome of min-norm interpolation on the bi-level ensemble.
/// Limits are NaN for Boundary.
struct RegimeVerdict {
  Regime regime = Regime::Boundary;
  double q_low = 0.0;   // 1 - r
  double q_high = 0.0;  // (1 - r) + (p - 1) / 2
  double limit_mse = 0.0;
  double limit_cls = 0.0;
};

/// Distance from a threshold below which q counts as Boundary.
inline constexpr double kBoundaryTol = 1e-12;

/// Throws InvalidParams unless p > 1, 0 <= r < 1, 0 < q <= p - r.
RegimeVerdict classify_regime(double p, double q, double r);

struct SupportCondition {
  bool holds = false;
  double lhs = 0.0;
  double rhs = 0.0;
};

/// ||l||_1 >= 72 (||l||_2 n sqrt(ln n) + ||l||_inf n^{3/2} ln n + 1).
SupportCondition all_sv_condition_general(const Spectrum& spectrum,
                                          std::size_t n);

/// d > 10 n ln n + n - 1.
SupportCondition all_sv_condition_isotropic(std::size_t n, std::size_t d);

/// p > 2 and q > 3/2 - r.
bool bilevel_sv_sufficient(double p, double q, double r);

/// Growth exponents in n for binary-label interpolation on the bi-level
/// ensemble (constants and log factors dropped).
struct AsymptoticPrediction {
  double su_limit = 0.0;
  double su_exponent = 0.0;
  double cn_upper_exponent = 0.0;
  double cn_lower_exponent = 0.0;
  double snr_lower_exponent = 0.0;
  double snr_upper_exponent = 0.0;
};

/// Throws BoundaryCase at q = 1 - r, InvalidParams outside the admissible
/// range or for nu_star outside [0, 1/2).
AsymptoticPrediction predicted_scalings(double p, double q, double r,
                                        double nu_star);

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Least squares of ln(values) on ln(ns). Needs >= 3 points and positive
/// values; throws DegenerateInput when every n is equal.
ExponentFit fit_exponent(const std::vector<double>& ns,
                         const std::vector<double>& values);

}  // namespace ovp
