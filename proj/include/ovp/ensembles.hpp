#pragma once

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace ovp {

/// Eigenvalues of a diagonal feature covariance, sorted non-increasing and
/// strictly positive. Features are generated in this eigenbasis.
struct Spectrum {
  std::vector<double> lambdas;

  std::size_t size() const noexcept { return lambdas.size(); }
  double operator[](std::size_t j) const { return lambdas[j]; }
};

/// Checks the Spectrum invariants; throws InvalidParams on violation.
void validate(const Spectrum& spectrum);

namespace ensemble {

struct Isotropic {
  std::size_t n = 0;
  std::size_t d = 0;
};

/// d = n^p features, s = n^r favored ones carrying total weight a*d, a = n^-q.
struct BiLevel {
  std::size_t n = 0;
  double p = 0.0;
  double q = 0.0;
  double r = 0.0;
};

/// phi(X) = X * 1_d + W with X ~ N(0, sigma^2), W ~ N(0, I_d).
struct WeakFeatures {
  std::size_t n = 0;
  std::size_t d = 0;
  double sigma = 0.0;
};

/// lambda_k = k^-m.
struct PolyDecay {
  std::size_t n = 0;
  std::size_t d = 0;
  double m = 0.0;
};

struct Explicit {
  std::vector<double> lambdas;
};

}  // namespace ensemble

using EnsembleSpec =
    std::variant<ensemble::Isotropic, ensemble::BiLevel,
                 ensemble::WeakFeatures, ensemble::PolyDecay,
                 ensemble::Explicit>;

/// Throws InvalidParams when the parameters fall outside the admissible range.
void validate(const EnsembleSpec& spec);

/// Training-set size recorded in the spec (0 for Explicit).
std::size_t training_size(const EnsembleSpec& spec);

/// Feature dimension implied by the spec.
std::size_t feature_dim(const EnsembleSpec& spec);

/// Upper bound on the feature dimension accepted by bilevel_dims.
inline constexpr std::size_t kMaxFeatureDim = std::size_t{1} << 28;

struct BiLevelDims {
  std::size_t d = 0;
  std::size_t s = 0;
};

/// d = round(n^p), s = round(n^r). Throws InvalidParams for inadmissible
/// inputs and Overflow when d exceeds max_dim.
BiLevelDims bilevel_dims(std::size_t n, double p, double r,
                         std::size_t max_dim = kMaxFeatureDim);

/// Covariance spectrum of a diagonal ensemble. WeakFeatures is rejected with
/// NotDiagonal.
Spectrum build_spectrum(const EnsembleSpec& spec);

/// 1-sparse ground truth: alpha* = e_t / sqrt(lambda_t), with t 1-based.
struct SignalSpec {
  std::size_t t = 1;
  double nu_star = 0.0;
};

/// Sign with sgn(0) = +1.
inline double sgn(double x) noexcept { return x < 0.0 ? -1.0 : 1.0; }

struct Dataset {
  Eigen::MatrixXd phi;  // rows are feature vectors
  Eigen::VectorXd z;    // real outputs
  Eigen::VectorXd y;    // labels in {-1, +1}
  std::uint64_t seed = 0;

  Eigen::Index n() const noexcept { return phi.rows(); }
  Eigen::Index d() const noexcept { return phi.cols(); }
};

/// Draws n i.i.d. training points. Deterministic in (spec, signal, n, seed).
Dataset sample_dataset(const EnsembleSpec& spec, const SignalSpec& signal,
                       std::size_t n, std::uint64_t seed);

/// Same features as sample_dataset for the same seed, but with clean labels.
Dataset sample_test_set(const EnsembleSpec& spec, const SignalSpec& signal,
                        std::size_t n_test, std::uint64_t seed);

}  // namespace ovp
