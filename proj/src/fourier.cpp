#include "ovp/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "ovp/ensembles.hpp"
#include "ovp/error.hpp"
#include "ovp/rng.hpp"
#include "ovp/solvers.hpp"
#include "ovp/theory.hpp"

namespace ovp {

namespace {

constexpr double kPi = std::numbers::pi;

void require_odd_d(std::size_t d) {
  if (d % 2 == 0) {
    throw Error(ErrorCode::EvenD, "Fourier feature count d must be odd");
  }
}

}  // namespace

void validate(const FourierDesign& design) {
  if (design.n < 3 || design.n % 2 == 0) {
    throw Error(ErrorCode::EvenN, "grid size n must be odd and >= 3");
  }
  require_odd_d(design.d);
  if (design.d % design.n != 0) {
    throw Error(ErrorCode::InvalidParams, "d must be a multiple of n");
  }
  if (design.weights.size() != (design.d - 1) / 2 + 1) {
    throw Error(ErrorCode::InvalidParams, "need one weight per frequency");
  }
  for (std::size_t f = 0; f < design.weights.size(); ++f) {
    if (!(design.weights[f] > 0.0)) {
      throw Error(ErrorCode::InvalidParams, "weights must be positive");
    }
    if (f > 0 && design.weights[f] > design.weights[f - 1]) {
      throw Error(ErrorCode::InvalidParams, "weights must be non-increasing");
    }
  }
}

FourierDesign bilevel_fourier_design(std::size_t n, std::size_t d,
                                     std::size_t favored, double lambda_h) {
  FourierDesign design{n, d, {}};
  design.weights.assign((d - 1) / 2 + 1, 1.0);
  for (std::size_t f = 0; f < design.weights.size(); ++f) {
    if (cosine_column(f) < favored) design.weights[f] = lambda_h;
  }
  validate(design);
  return design;
}

FourierDesign bilevel_fourier_design(std::size_t n, double p, double q,
                                     double r) {
  if (!(p > 1.0) || !(r >= 0.0 && r < 1.0) || !(q >= 0.0 && q <= p - r)) {
    throw Error(ErrorCode::InvalidParams, "inadmissible (p, q, r)");
  }
  const double nn = static_cast<double>(n);
  auto ratio = static_cast<std::size_t>(std::ceil(1.0 + std::pow(nn, p - 1.0) - 1e-9));
  if (ratio % 2 == 0) ++ratio;
  const auto favored = static_cast<std::size_t>(std::llround(std::pow(nn, r)));
  return bilevel_fourier_design(n, n * ratio, std::max<std::size_t>(favored, 1),
                                std::pow(nn, p - r - q));
}

FourierDesign polydecay_fourier_design(std::size_t n, std::size_t d, double m) {
  if (!(m >= 0.0)) throw Error(ErrorCode::InvalidParams, "m must be >= 0");
  FourierDesign design{n, d, {}};
  design.weights.resize((d - 1) / 2 + 1);
  for (std::size_t f = 0; f < design.weights.size(); ++f) {
    design.weights[f] = std::pow(static_cast<double>(f + 1), -m);
  }
  validate(design);
  return design;
}

std::vector<double> regular_grid(std::size_t n) {
  if (n < 3 || n % 2 == 0) {
    throw Error(ErrorCode::EvenN, "grid size n must be odd and >= 3");
  }
  std::vector<double> x(n);
  const double nn = static_cast<double>(n);
  const std::size_t mid = n / 2;
  for (std::size_t k = 0; k < n; ++k) {
    // Symmetric construction keeps x[k] == -x[n-1-k] exactly.
    const double offset = static_cast<double>(static_cast<long>(k) - static_cast<long>(mid));
    x[k] = 2.0 * kPi * offset / nn;
  }
  return x;
}

Eigen::MatrixXd fourier_features(std::span<const double> points, std::size_t d) {
  require_odd_d(d);
  const auto rows = static_cast<Eigen::Index>(points.size());
  const auto cols = static_cast<Eigen::Index>(d);
  const double c0 = 1.0 / std::sqrt(2.0 * kPi);
  const double c1 = 1.0 / std::sqrt(kPi);
  Eigen::MatrixXd phi(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double x = points[static_cast<std::size_t>(i)];
    phi(i, 0) = c0;
    for (std::size_t f = 1; 2 * f < d; ++f) {
      const double arg = static_cast<double>(f) * x;
      phi(i, static_cast<Eigen::Index>(sine_column(f))) = c1 * std::sin(arg);
      phi(i, static_cast<Eigen::Index>(cosine_column(f))) = c1 * std::cos(arg);
    }
  }
  return phi;
}

Eigen::VectorXd feature_weights(const FourierDesign& design) {
  validate(design);
  Eigen::VectorXd w(static_cast<Eigen::Index>(design.d));
  w[0] = design.weights[0];
  for (std::size_t f = 1; f < design.weights.size(); ++f) {
    w[static_cast<Eigen::Index>(sine_column(f))] = design.weights[f];
    w[static_cast<Eigen::Index>(cosine_column(f))] = design.weights[f];
  }
  return w;
}

Eigen::VectorXd weighted_min_norm(const FourierDesign& design,
                                  const Eigen::VectorXd& targets) {
  validate(design);
  if (static_cast<std::size_t>(targets.size()) != design.n) {
    throw Error(ErrorCode::InvalidParams, "targets must have one entry per grid point");
  }
  if (std::abs(targets.mean()) > 1e-9) {
    throw Error(ErrorCode::InvalidParams,
                "target has a nonzero mean over the grid");
  }
  const std::vector<double> grid = regular_grid(design.n);
  const Eigen::VectorXd root_w = feature_weights(design).cwiseSqrt();
  const Eigen::MatrixXd scaled = fourier_features(grid, design.d) * root_w.asDiagonal();
  const Coefficients fit = min_norm_interpolate(scaled, targets, SolverOptions::linear());
  return root_w.cwiseProduct(fit.alpha);
}

ClosedForm closed_form_alias(std::size_t n, std::size_t d, double lambda_h) {
  if (!(lambda_h > 0.0)) throw Error(ErrorCode::InvalidParams, "lambda_h must be > 0");
  if (n == 0 || d % n != 0 || d < n) {
    throw Error(ErrorCode::InvalidParams, "d must be a positive multiple of n");
  }
  const double aliases = static_cast<double>(d / n) - 1.0;
  ClosedForm c;
  c.a = lambda_h / (lambda_h + aliases);
  c.b = 1.0 / (lambda_h + aliases);
  c.sigma_cn = std::sqrt(aliases) * c.b;
  return c;
}

RegimeApprox fourier_regime_approx(double p, double q, double r, std::size_t n) {
  if (!(p > 1.0) || !(r >= 0.0 && r < 1.0) || !(q >= 0.0 && q <= p - r) || n < 2) {
    throw Error(ErrorCode::InvalidParams, "inadmissible (p, q, r, n)");
  }
  const double knee = 1.0 - r;
  if (std::abs(q - knee) <= kBoundaryTol) {
    throw Error(ErrorCode::BoundaryCase, "approximation undefined at q = 1 - r");
  }
  const double nn = static_cast<double>(n);
  RegimeApprox out;
  if (q < knee) {
    out.a_approx = 1.0;
    out.sigma_cn_approx = std::pow(nn, -((p + 1.0) / 2.0 - (q + r)));
  } else {
    out.a_approx = std::pow(nn, -(q - knee));
    out.sigma_cn_approx = std::pow(nn, -(p - 1.0) / 2.0);
  }
  return out;
}

double fourier_cls_upper_bound(double p, double q, double r, std::size_t n) {
  if (n < 2) throw Error(ErrorCode::InvalidParams, "n must be >= 2");
  const double eps = (p - 1.0) / 2.0 - (q - (1.0 - r));
  if (!(eps > 0.0)) {
    throw Error(ErrorCode::InvalidRegime,
                "union bound needs q < (1 - r) + (p - 1) / 2");
  }
  const double u = std::pow(static_cast<double>(n), -eps / 2.0);
  return 2.0 / kPi * std::asin(std::min(1.0, u)) + u;
}

double fourier_predict(const Eigen::VectorXd& coefficients, double x) {
  const auto d = static_cast<std::size_t>(coefficients.size());
  require_odd_d(d);
  const double c1 = 1.0 / std::sqrt(kPi);
  double value = coefficients[0] / std::sqrt(2.0 * kPi);
  for (std::size_t f = 1; 2 * f < d; ++f) {
    const double arg = static_cast<double>(f) * x;
    value += c1 * (coefficients[static_cast<Eigen::Index>(sine_column(f))] * std::sin(arg) +
                   coefficients[static_cast<Eigen::Index>(cosine_column(f))] * std::cos(arg));
  }
  return value;
}

double fourier_test_error(const Eigen::VectorXd& coefficients,
                          std::size_t n_test, std::uint64_t seed) {
  if (n_test < 1) throw Error(ErrorCode::InvalidParams, "n_test must be >= 1");
  CounterRng rng(derive_seed(seed, kTestStream));
  std::uniform_real_distribution<double> uniform(-kPi, kPi);
  std::size_t errors = 0;
  for (std::size_t k = 0; k < n_test; ++k) {
    const double x = uniform(rng);
    if (sgn(fourier_predict(coefficients, x)) != sgn(std::cos(x))) ++errors;
  }
  return static_cast<double>(errors) / static_cast<double>(n_test);
}

}  // namespace ovp
