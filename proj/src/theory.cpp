#include "ovp/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ovp/error.hpp"

namespace ovp {

namespace {

void check_admissible(double p, double q, double r) {
  if (!(p > 1.0) || !(r >= 0.0 && r < 1.0) || !(q > 0.0 && q <= p - r)) {
    throw Error(ErrorCode::InvalidParams,
                "(p, q, r) must satisfy p > 1, 0 <= r < 1, 0 < q <= p - r");
  }
}

}  // namespace

const char* to_string(Regime regime) noexcept {
  switch (regime) {
    case Regime::BothSucceed: return "BothSucceed";
    case Regime::ClassificationOnly: return "ClassificationOnly";
    case Regime::BothFail: return "BothFail";
    case Regime::Boundary: return "Boundary";
  }
  return "Unknown";
}

RegimeVerdict classify_regime(double p, double q, double r) {
  check_admissible(p, q, r);
  RegimeVerdict v;
  v.q_low = 1.0 - r;
  v.q_high = (1.0 - r) + (p - 1.0) / 2.0;
  if (std::abs(q - v.q_low) <= kBoundaryTol ||
      std::abs(q - v.q_high) <= kBoundaryTol) {
    v.regime = Regime::Boundary;
    v.limit_mse = std::numeric_limits<double>::quiet_NaN();
    v.limit_cls = std::numeric_limits<double>::quiet_NaN();
  } else if (q < v.q_low) {
    v.regime = Regime::BothSucceed;
    v.limit_mse = 0.0;
    v.limit_cls = 0.0;
  } else if (q < v.q_high) {
    v.regime = Regime::ClassificationOnly;
    v.limit_mse = 1.0;
    v.limit_cls = 0.0;
  } else {
    v.regime = Regime::BothFail;
    v.limit_mse = 1.0;
    v.limit_cls = 0.5;
  }
  return v;
}

SupportCondition all_sv_condition_general(const Spectrum& spectrum,
                                          std::size_t n) {
  if (n < 2) throw Error(ErrorCode::InvalidParams, "n must be >= 2");
  validate(spectrum);
  double l1 = 0.0;
  double l2sq = 0.0;
  double linf = 0.0;
  for (double v : spectrum.lambdas) {
    l1 += v;
    l2sq += v * v;
    linf = std::max(linf, v);
  }
  const double nn = static_cast<double>(n);
  const double ln = std::log(nn);
  SupportCondition c;
  c.lhs = l1;
  c.rhs = 72.0 * (std::sqrt(l2sq) * nn * std::sqrt(ln) +
                  linf * nn * std::sqrt(nn) * ln + 1.0);
  c.holds = c.lhs >= c.rhs;
  return c;
}

SupportCondition all_sv_condition_isotropic(std::size_t n, std::size_t d) {
  if (n < 2) throw Error(ErrorCode::InvalidParams, "n must be >= 2");
  const double nn = static_cast<double>(n);
  SupportCondition c;
  c.lhs = static_cast<double>(d);
  c.rhs = 10.0 * nn * std::log(nn) + nn - 1.0;
  c.holds = c.lhs > c.rhs;
  return c;
}

bool bilevel_sv_sufficient(double p, double q, double r) {
  check_admissible(p, q, r);
  return p > 2.0 && q > 1.5 - r;
}

AsymptoticPrediction predicted_scalings(double p, double q, double r,
                                        double nu_star) {
  check_admissible(p, q, r);
  if (!(nu_star >= 0.0 && nu_star < 0.5)) {
    throw Error(ErrorCode::InvalidParams, "nu_star must lie in [0, 0.5)");
  }
  const double knee = 1.0 - r;
  if (std::abs(q - knee) <= kBoundaryTol) {
    throw Error(ErrorCode::BoundaryCase, "exponents are undefined at q = 1 - r");
  }
  AsymptoticPrediction a;
  a.snr_upper_exponent = (p - 1.0) / 2.0 + knee - q;
  if (q < knee) {
    a.su_limit = std::sqrt(2.0 / std::numbers::pi) * (1.0 - 2.0 * nu_star);
    a.su_exponent = 0.0;
    a.cn_upper_exponent = -std::min(p - 1.0, knee) / 2.0;
    a.cn_lower_exponent = q - knee - (p - 1.0) / 2.0;
    a.snr_lower_exponent = std::min(p - 1.0, knee) / 2.0;
  } else {
    a.su_limit = 0.0;
    a.su_exponent = knee - q;
    a.cn_upper_exponent = -std::min(p - 1.0, 2.0 * q + r - 1.0) / 2.0;
    a.cn_lower_exponent = -(p - 1.0) / 2.0;
    a.snr_lower_exponent = std::min(p - 1.0, 2.0 * q + r - 1.0) / 2.0 + knee - q;
  }
  return a;
}

ExponentFit fit_exponent(const std::vector<double>& ns,
                         const std::vector<double>& values) {
  if (ns.size() != values.size()) {
    throw Error(ErrorCode::InvalidParams, "fit_exponent: length mismatch");
  }
  if (ns.size() < 3) {
    throw Error(ErrorCode::InvalidParams, "fit_exponent needs at least 3 points");
  }
  const std::size_t k = ns.size();
  std::vector<double> lx(k);
  std::vector<double> ly(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (!(ns[i] > 0.0) || !(values[i] > 0.0)) {
      throw Error(ErrorCode::InvalidParams, "fit_exponent needs positive inputs");
    }
    lx[i] = std::log(ns[i]);
    ly[i] = std::log(values[i]);
  }
  const double kk = static_cast<double>(k);
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += lx[i] / kk;
    my += ly[i] / kk;
  }
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) {
    throw Error(ErrorCode::DegenerateInput, "fit_exponent: all n are equal");
  }
  ExponentFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  const double ss_res = syy - fit.slope * sxy;
  // A constant series is fit exactly by slope 0.
  fit.r_squared = syy > 0.0 ? 1.0 - std::max(0.0, ss_res) / syy : 1.0;
  return fit;
}

}  // namespace ovp
