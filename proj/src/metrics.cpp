#include "ovp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "ovp/error.hpp"
#include "ovp/rng.hpp"

namespace ovp {

namespace {

void check_index(const Eigen::VectorXd& alpha, const Spectrum& spectrum,
                 std::size_t t) {
  if (static_cast<std::size_t>(alpha.size()) != spectrum.size()) {
    throw Error(ErrorCode::InvalidParams,
                "coefficient length does not match spectrum");
  }
  if (t < 1 || t > spectrum.size()) {
    std::ostringstream msg;
    msg << "index t=" << t << " outside [1, " << spectrum.size() << "]";
    throw Error(ErrorCode::IndexOutOfRange, msg.str());
  }
}

// Accumulates per-point squared error and sign disagreement.
struct LossAccumulator {
  double sum_sq = 0.0;
  double sum_sq2 = 0.0;
  std::size_t errors = 0;
  std::size_t count = 0;

  void add(double truth, double prediction) {
    const double diff = truth - prediction;
    const double sq = diff * diff;
    sum_sq += sq;
    sum_sq2 += sq * sq;
    if (sgn(truth) != sgn(prediction)) ++errors;
    ++count;
  }

  EmpiricalReport report() const {
    EmpiricalReport out;
    out.n_test = count;
    if (count == 0) return out;
    const double nn = static_cast<double>(count);
    out.mse_hat = sum_sq / nn;
    out.err_hat = static_cast<double>(errors) / nn;
    out.std_err = std::sqrt(out.err_hat * (1.0 - out.err_hat) / nn);
    if (count > 1) {
      const double var = (sum_sq2 - nn * out.mse_hat * out.mse_hat) / (nn - 1.0);
      out.mse_sample_std = std::sqrt(std::max(0.0, var));
    }
    return out;
  }
};

}  // namespace

double survival(const Eigen::VectorXd& alpha, const Spectrum& spectrum,
                std::size_t t) {
  check_index(alpha, spectrum, t);
  return std::sqrt(spectrum[t - 1]) * alpha[static_cast<Eigen::Index>(t - 1)];
}

double contamination(const Eigen::VectorXd& alpha, const Spectrum& spectrum,
                     std::size_t t) {
  check_index(alpha, spectrum, t);
  double sum = 0.0;
  for (std::size_t j = 0; j < spectrum.size(); ++j) {
    if (j == t - 1) continue;
    const double a = alpha[static_cast<Eigen::Index>(j)];
    sum += spectrum[j] * a * a;
  }
  return std::sqrt(sum);
}

SuCnReport survival_contamination(const Eigen::VectorXd& alpha,
                                  const Spectrum& spectrum, std::size_t t) {
  SuCnReport out;
  out.su = survival(alpha, spectrum, t);
  out.cn = contamination(alpha, spectrum, t);
  if (out.cn > 0.0) {
    out.snr = out.su / out.cn;
  } else if (out.su != 0.0) {
    out.snr = std::copysign(std::numeric_limits<double>::infinity(), out.su);
  } else {
    out.snr = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

LossReport analytic_losses(double su, double cn) {
  if (!(cn >= 0.0)) {
    throw Error(ErrorCode::InvalidParams, "contamination must be >= 0");
  }
  LossReport out;
  out.excess_mse = (1.0 - su) * (1.0 - su) + cn * cn;
  if (cn > 0.0) {
    out.excess_cls = 0.5 - std::atan(su / cn) / std::numbers::pi;
  } else if (su > 0.0) {
    out.excess_cls = 0.0;
  } else if (su < 0.0) {
    out.excess_cls = 1.0;
  } else {
    out.excess_cls = 0.5;
  }
  return out;
}

EmpiricalReport empirical_losses(const Eigen::VectorXd& alpha, std::size_t t,
                                 const Spectrum& spectrum, std::size_t n_test,
                                 std::uint64_t seed) {
  check_index(alpha, spectrum, t);
  if (n_test < 1) throw Error(ErrorCode::InvalidParams, "n_test must be >= 1");

  // <phi, alpha_hat> = sum_j sqrt(lambda_j) alpha_j g_j, <phi, alpha*> = g_t.
  const Eigen::ArrayXd weights =
      Eigen::Map<const Eigen::ArrayXd>(spectrum.lambdas.data(),
                                       static_cast<Eigen::Index>(spectrum.size()))
          .sqrt() *
      alpha.array();
  const auto d = static_cast<Eigen::Index>(spectrum.size());
  const auto t0 = static_cast<Eigen::Index>(t - 1);

  CounterRng rng(derive_seed(seed, kTestStream));
  std::normal_distribution<double> normal(0.0, 1.0);
  LossAccumulator acc;
  Eigen::ArrayXd g(d);
  for (std::size_t k = 0; k < n_test; ++k) {
    for (Eigen::Index j = 0; j < d; ++j) g[j] = normal(rng);
    acc.add(g[t0], (weights * g).sum());
  }
  return acc.report();
}

EmpiricalReport empirical_losses_weak(const Eigen::VectorXd& alpha,
                                      double sigma, std::size_t n_test,
                                      std::uint64_t seed) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidParams, "sigma must be > 0");
  if (n_test < 1) throw Error(ErrorCode::InvalidParams, "n_test must be >= 1");
  const double alpha_sum = alpha.sum();
  const Eigen::Index d = alpha.size();

  CounterRng raw_rng(derive_seed(seed, kRawInputStream));
  CounterRng noise_rng(derive_seed(seed, kTestStream));
  std::normal_distribution<double> raw(0.0, sigma);
  std::normal_distribution<double> normal(0.0, 1.0);
  LossAccumulator acc;
  for (std::size_t k = 0; k < n_test; ++k) {
    const double x = raw(raw_rng);
    double noise = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) noise += alpha[j] * normal(noise_rng);
    acc.add(x, x * alpha_sum + noise);
  }
  return acc.report();
}

double cauchy_cdf(double t) noexcept {
  return 0.5 + std::atan(t) / std::numbers::pi;
}

double cauchy_ratio_check(std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw Error(ErrorCode::InvalidParams, "n_samples must be >= 1");
  CounterRng rng(derive_seed(seed, kTestStream));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> ratios(n_samples);
  for (auto& r : ratios) {
    const double u = normal(rng);
    const double v = normal(rng);
    r = v / u;
  }
  std::sort(ratios.begin(), ratios.end());
  const double nn = static_cast<double>(n_samples);
  double sup = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double f = cauchy_cdf(ratios[i]);
    sup = std::max(sup, std::abs(static_cast<double>(i + 1) / nn - f));
    sup = std::max(sup, std::abs(f - static_cast<double>(i) / nn));
  }
  return sup;
}

MarginReport margin_bound(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& alpha, double delta) {
  if (phi.rows() != y.size() || phi.cols() != alpha.size()) {
    throw Error(ErrorCode::InvalidParams, "margin_bound: shape mismatch");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw Error(ErrorCode::InvalidParams, "delta must lie in (0, 1)");
  }
  const Eigen::Index n = y.size();
  if (n == 0) throw Error(ErrorCode::InvalidParams, "margin_bound: no data");
  const Eigen::VectorXd margins = y.cwiseProduct(phi * alpha);

  MarginReport out;
  out.delta = delta;
  out.gamma = margins.minCoeff();
  if (!(out.gamma > 0.0)) {
    std::ostringstream msg;
    msg << "predictor does not separate the training data (min margin "
        << out.gamma << ")";
    throw Error(ErrorCode::NotSeparating, msg.str());
  }
  out.alpha_norm = alpha.norm();
  out.gamma_n = out.gamma / out.alpha_norm;
  out.frob = phi.norm();

  const double nn = static_cast<double>(n);
  double ramp = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = margins[i];
    if (z <= 0.0) {
      ramp += 1.0;
    } else if (z <= out.gamma) {
      ramp += 1.0 - z / out.gamma;
    }
  }
  out.ramp_term = ramp / nn;
  out.complexity_term = 4.0 / out.gamma_n * out.frob / nn;
  out.confidence_term =
      (8.0 / out.gamma + 1.0) * std::sqrt(std::log(4.0 / delta) / (2.0 * nn));
  out.bound = out.ramp_term + out.complexity_term + out.confidence_term;
  return out;
}

}  // namespace ovp
