#include "ovp/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "ovp/error.hpp"
#include "ovp/rng.hpp"

namespace ovp {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorCode::InvalidParams, what);
}

std::size_t checked_round(double x, const char* what) {
  if (!std::isfinite(x) || x > 9.0e15) {
    throw Error(ErrorCode::Overflow, std::string(what) + " is not representable");
  }
  return static_cast<std::size_t>(std::llround(x));
}

void validate_bilevel(const ensemble::BiLevel& b) {
  if (b.n < 2) invalid("BiLevel: n must be >= 2");
  if (!(b.p > 1.0)) invalid("BiLevel: p must be > 1");
  if (!(b.r >= 0.0 && b.r < 1.0)) invalid("BiLevel: r must lie in [0, 1)");
  if (!(b.q > 0.0 && b.q <= b.p - b.r)) {
    invalid("BiLevel: q must lie in (0, p - r]");
  }
}

std::size_t max_signal_index(const EnsembleSpec& spec) {
  return std::visit(
      overloaded{
          [](const ensemble::Isotropic& e) { return e.d; },
          [](const ensemble::BiLevel& e) {
            return bilevel_dims(e.n, e.p, e.r).s;
          },
          [](const ensemble::WeakFeatures&) { return std::size_t{1}; },
          [](const ensemble::PolyDecay& e) { return e.d; },
          [](const ensemble::Explicit& e) { return e.lambdas.size(); },
      },
      spec);
}

void validate_signal(const EnsembleSpec& spec, const SignalSpec& signal) {
  if (!(signal.nu_star >= 0.0 && signal.nu_star < 0.5)) {
    throw Error(ErrorCode::InvalidSignal, "nu_star must lie in [0, 0.5)");
  }
  if (std::holds_alternative<ensemble::WeakFeatures>(spec)) return;
  const std::size_t limit = max_signal_index(spec);
  if (signal.t < 1 || signal.t > limit) {
    std::ostringstream msg;
    msg << "signal index t=" << signal.t << " outside [1, " << limit << "]";
    throw Error(ErrorCode::InvalidSignal, msg.str());
  }
}

Dataset sample_impl(const EnsembleSpec& spec, const SignalSpec& signal,
                    std::size_t n, std::uint64_t seed, bool label_noise) {
  validate(spec);
  validate_signal(spec, signal);

  Dataset data;
  data.seed = seed;
  std::normal_distribution<double> normal(0.0, 1.0);

  if (const auto* weak = std::get_if<ensemble::WeakFeatures>(&spec)) {
    const auto rows = static_cast<Eigen::Index>(n);
    const auto cols = static_cast<Eigen::Index>(weak->d);
    CounterRng raw_rng(derive_seed(seed, kRawInputStream));
    Eigen::VectorXd x(rows);
    for (Eigen::Index i = 0; i < rows; ++i) x[i] = weak->sigma * normal(raw_rng);

    CounterRng noise_rng(derive_seed(seed, kFeatureStream));
    normal.reset();
    data.phi.resize(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) {
        data.phi(i, j) = x[i] + normal(noise_rng);
      }
    }
    data.z = x;
    data.y = x.unaryExpr([](double v) { return sgn(v); });
    return data;
  }

  const Spectrum spectrum = build_spectrum(spec);
  const auto rows = static_cast<Eigen::Index>(n);
  const auto cols = static_cast<Eigen::Index>(spectrum.size());
  const auto t = static_cast<Eigen::Index>(signal.t - 1);

  CounterRng feature_rng(derive_seed(seed, kFeatureStream));
  data.phi.resize(rows, cols);
  data.z.resize(rows);
  for (Eigen::Index j = 0; j < cols; ++j) {
    const double scale = std::sqrt(spectrum.lambdas[static_cast<std::size_t>(j)]);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double g = normal(feature_rng);
      data.phi(i, j) = scale * g;
      // <phi_i, alpha*> with alpha* = e_t / sqrt(lambda_t) is the raw draw.
      if (j == t) data.z[i] = g;
    }
  }

  data.y.resize(rows);
  CounterRng label_rng(derive_seed(seed, kLabelNoiseStream));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (Eigen::Index i = 0; i < rows; ++i) {
    double label = sgn(data.z[i]);
    // The flip stream is consumed identically with or without noise so
    // training and test draws stay aligned.
    const double u = uniform(label_rng);
    if (label_noise && u < signal.nu_star) label = -label;
    data.y[i] = label;
  }
  return data;
}

}  // namespace

void validate(const Spectrum& spectrum) {
  if (spectrum.lambdas.empty()) invalid("spectrum is empty");
  for (std::size_t j = 0; j < spectrum.size(); ++j) {
    const double v = spectrum.lambdas[j];
    if (!(v > 0.0) || !std::isfinite(v)) {
      invalid("spectrum entries must be finite and > 0");
    }
    if (j > 0 && v > spectrum.lambdas[j - 1]) {
      invalid("spectrum must be sorted non-increasing");
    }
  }
}

void validate(const EnsembleSpec& spec) {
  std::visit(overloaded{
                 [](const ensemble::Isotropic& e) {
                   if (e.n < 1 || e.d < 1) invalid("Isotropic: n, d must be >= 1");
                 },
                 [](const ensemble::BiLevel& e) { validate_bilevel(e); },
                 [](const ensemble::WeakFeatures& e) {
                   if (e.n < 1 || e.d < 1) invalid("WeakFeatures: n, d must be >= 1");
                   if (!(e.sigma > 0.0)) invalid("WeakFeatures: sigma must be > 0");
                 },
                 [](const ensemble::PolyDecay& e) {
                   if (e.n < 1 || e.d < 1) invalid("PolyDecay: n, d must be >= 1");
                   if (!(e.m >= 0.0)) invalid("PolyDecay: m must be >= 0");
                 },
                 [](const ensemble::Explicit& e) {
                   validate(Spectrum{e.lambdas});
                 },
             },
             spec);
}

std::size_t training_size(const EnsembleSpec& spec) {
  return std::visit(
      overloaded{
          [](const ensemble::Explicit&) { return std::size_t{0}; },
          [](const auto& e) { return e.n; },
      },
      spec);
}

std::size_t feature_dim(const EnsembleSpec& spec) {
  return std::visit(
      overloaded{
          [](const ensemble::BiLevel& e) {
            return bilevel_dims(e.n, e.p, e.r).d;
          },
          [](const ensemble::Explicit& e) { return e.lambdas.size(); },
          [](const auto& e) { return e.d; },
      },
      spec);
}

BiLevelDims bilevel_dims(std::size_t n, double p, double r,
                         std::size_t max_dim) {
  if (n < 2) invalid("bilevel_dims: n must be >= 2");
  if (!(p > 1.0)) invalid("bilevel_dims: p must be > 1");
  if (!(r >= 0.0 && r < 1.0)) invalid("bilevel_dims: r must lie in [0, 1)");
  const double nd = static_cast<double>(n);
  const double d_real = std::pow(nd, p);
  if (d_real > static_cast<double>(max_dim)) {
    std::ostringstream msg;
    msg << "bilevel_dims: d = n^p = " << d_real << " exceeds maximum " << max_dim;
    throw Error(ErrorCode::Overflow, msg.str());
  }
  BiLevelDims dims;
  dims.d = checked_round(d_real, "n^p");
  dims.s = std::max<std::size_t>(1, checked_round(std::pow(nd, r), "n^r"));
  if (dims.d <= n) invalid("bilevel_dims: rounding left d <= n");
  return dims;
}

Spectrum build_spectrum(const EnsembleSpec& spec) {
  validate(spec);
  return std::visit(
      overloaded{
          [](const ensemble::Isotropic& e) {
            return Spectrum{std::vector<double>(e.d, 1.0)};
          },
          [](const ensemble::BiLevel& e) {
            const auto [d, s] = bilevel_dims(e.n, e.p, e.r);
            const double dd = static_cast<double>(d);
            const double ds = static_cast<double>(s);
            // Near q = p - r the rounded d and s can put the favored level
            // below the rest; a = s/d is the isotropic corner, so clamp there.
            const double a = std::max(std::pow(static_cast<double>(e.n), -e.q), ds / dd);
            const double high = a * dd / ds;
            const double low = (1.0 - a) * dd / (dd - ds);
            std::vector<double> lambdas(d, low);
            std::fill(lambdas.begin(), lambdas.begin() + static_cast<long>(s), std::max(high, low));
            return Spectrum{std::move(lambdas)};
          },
          [](const ensemble::WeakFeatures&) -> Spectrum {
            throw Error(ErrorCode::NotDiagonal,
                        "WeakFeatures covariance is not diagonal");
          },
          [](const ensemble::PolyDecay& e) {
            std::vector<double> lambdas(e.d);
            for (std::size_t k = 0; k < e.d; ++k) {
              lambdas[k] = std::pow(static_cast<double>(k + 1), -e.m);
            }
            return Spectrum{std::move(lambdas)};
          },
          [](const ensemble::Explicit& e) { return Spectrum{e.lambdas}; },
      },
      spec);
}

Dataset sample_dataset(const EnsembleSpec& spec, const SignalSpec& signal,
                       std::size_t n, std::uint64_t seed) {
  return sample_impl(spec, signal, n, seed, /*label_noise=*/true);
}

Dataset sample_test_set(const EnsembleSpec& spec, const SignalSpec& signal,
                        std::size_t n_test, std::uint64_t seed) {
  return sample_impl(spec, signal, n_test, seed, /*label_noise=*/false);
}

}  // namespace ovp
