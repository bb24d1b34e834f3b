#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ovp/ensembles.hpp"
#include "ovp/error.hpp"

using namespace ovp;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Kolmogorov-Smirnov statistic against N(0, 1).
double ks_normal(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double dmax = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = normal_cdf(xs[i]);
    dmax = std::max({dmax, (i + 1) / n - f, f - i / n});
  }
  return dmax;
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an ovp::Error");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("bi-level spectrum levels") {
  const auto s = build_spectrum(ensemble::BiLevel{529, 1.5, 0.5, 0.5});
  REQUIRE(s.size() == 12167);
  for (std::size_t j = 0; j < 23; ++j) CHECK(s[j] == doctest::Approx(23.0).epsilon(1e-12));
  // (1 - 1/23) * 12167 / 12144
  const double low = (1.0 - 1.0 / 23.0) * 12167.0 / 12144.0;
  CHECK(s[23] == doctest::Approx(low).epsilon(1e-12));
  CHECK(s[12166] == s[23]);
  validate(s);
}

TEST_CASE("simple spectra") {
  const auto iso = build_spectrum(ensemble::Isotropic{32, 4});
  CHECK(iso.lambdas == std::vector<double>{1, 1, 1, 1});
  const auto poly = build_spectrum(ensemble::PolyDecay{10, 3, 1.0});
  CHECK(poly[0] == 1.0);
  CHECK(poly[1] == doctest::Approx(0.5));
  CHECK(poly[2] == doctest::Approx(1.0 / 3.0));
  const auto flat = build_spectrum(ensemble::PolyDecay{10, 5, 0.0});
  CHECK(flat.lambdas == std::vector<double>(5, 1.0));
}

TEST_CASE("bi-level trace equals d across parameters") {
  for (std::size_t n : {16u, 64u, 121u, 529u}) {
    for (double p : {1.2, 1.5, 2.0}) {
      for (double r : {0.0, 0.3, 0.5}) {
        for (double q : {0.05, 0.3, 0.6, p - r}) {
          const auto s = build_spectrum(ensemble::BiLevel{n, p, q, r});
          const double trace = std::accumulate(s.lambdas.begin(), s.lambdas.end(), 0.0);
          CHECK(trace == doctest::Approx(static_cast<double>(s.size())).epsilon(1e-10));
          validate(s);
        }
      }
    }
  }
}

TEST_CASE("bilevel_dims") {
  auto a = bilevel_dims(529, 1.5, 0.5);
  CHECK(a.d == 12167);
  CHECK(a.s == 23);
  auto b = bilevel_dims(100, 2.0, 0.5);
  CHECK(b.d == 10000);
  CHECK(b.s == 10);
  auto c = bilevel_dims(50, 1.3, 0.0);
  CHECK(c.d == static_cast<std::size_t>(std::llround(std::pow(50.0, 1.3))));
  CHECK(c.s == 1);

  CHECK(code_of([] { bilevel_dims(529, 1.0, 0.5); }) == ErrorCode::InvalidParams);
  CHECK(code_of([] { bilevel_dims(529, 1.5, 1.0); }) == ErrorCode::InvalidParams);
  CHECK(code_of([] { bilevel_dims(1, 1.5, 0.5); }) == ErrorCode::InvalidParams);
  CHECK(code_of([] { bilevel_dims(1024, 3.0, 0.5); }) == ErrorCode::Overflow);
  CHECK(code_of([] { bilevel_dims(100, 2.0, 0.5, 9999); }) == ErrorCode::Overflow);
}

TEST_CASE("ensemble validation") {
  CHECK(code_of([] { build_spectrum(ensemble::BiLevel{529, 1.5, 1.1, 0.5}); }) ==
        ErrorCode::InvalidParams);
  CHECK(code_of([] { build_spectrum(ensemble::BiLevel{529, 1.5, 0.0, 0.5}); }) ==
        ErrorCode::InvalidParams);
  CHECK(code_of([] { build_spectrum(ensemble::PolyDecay{4, 4, -1.0}); }) ==
        ErrorCode::InvalidParams);
  CHECK(code_of([] { build_spectrum(ensemble::Explicit{{1.0, 2.0}}); }) ==
        ErrorCode::InvalidParams);
  CHECK(code_of([] { build_spectrum(ensemble::Explicit{{1.0, 0.0}}); }) ==
        ErrorCode::InvalidParams);
  CHECK(code_of([] { build_spectrum(ensemble::WeakFeatures{32, 512, 0.1}); }) ==
        ErrorCode::NotDiagonal);
  CHECK(code_of([] {
          sample_dataset(ensemble::BiLevel{529, 1.5, 0.5, 0.5}, SignalSpec{24, 0.0}, 4, 1);
        }) == ErrorCode::InvalidSignal);
  CHECK(code_of([] {
          sample_dataset(ensemble::Isotropic{4, 8}, SignalSpec{1, 0.5}, 4, 1);
        }) == ErrorCode::InvalidSignal);
}

TEST_CASE("isotropic sample shape and noiseless labels") {
  const auto data = sample_dataset(ensemble::Isotropic{32, 2048}, SignalSpec{1, 0.0}, 32, 7);
  CHECK(data.n() == 32);
  CHECK(data.d() == 2048);
  for (Eigen::Index i = 0; i < 32; ++i) {
    CHECK(data.y[i] == sgn(data.z[i]));
    CHECK(data.z[i] == data.phi(i, 0));
  }
}

TEST_CASE("true-feature outputs are standard normal") {
  SUBCASE("pooled over seeds on a small bi-level ensemble") {
    const ensemble::BiLevel spec{64, 1.5, 0.5, 0.5};
    std::vector<double> pooled;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto data = sample_dataset(spec, SignalSpec{1, 0.0}, 1000, seed);
      pooled.insert(pooled.end(), data.z.begin(), data.z.end());
    }
    CHECK(ks_normal(pooled) < 1.628 / std::sqrt(static_cast<double>(pooled.size())));
  }
  SUBCASE("one training set on the 529-point ensemble") {
    const ensemble::BiLevel spec{529, 1.5, 0.5, 0.5};
    const auto s = build_spectrum(spec);
    const auto data = sample_dataset(spec, SignalSpec{3, 0.0}, 529, 11);
    std::vector<double> z(data.z.begin(), data.z.end());
    CHECK(ks_normal(z) < 1.628 / std::sqrt(529.0));
    for (Eigen::Index i = 0; i < 529; ++i) {
      CHECK(data.z[i] == doctest::Approx(data.phi(i, 2) / std::sqrt(s[2])).epsilon(1e-12));
    }
  }
}

TEST_CASE("empirical covariance matches the spectrum") {
  const auto spec = ensemble::PolyDecay{2000, 5, 1.0};
  const auto s = build_spectrum(spec);
  const auto data = sample_dataset(spec, SignalSpec{1, 0.0}, 2000, 3);
  const Eigen::MatrixXd cov = data.phi.transpose() * data.phi / 2000.0;
  for (Eigen::Index a = 0; a < 5; ++a) {
    for (Eigen::Index b = 0; b < 5; ++b) {
      const double expected = a == b ? s[static_cast<std::size_t>(a)] : 0.0;
      CHECK(std::abs(cov(a, b) - expected) < 0.2);
    }
  }
}

TEST_CASE("label noise flips at the requested rate") {
  const auto data = sample_dataset(ensemble::Isotropic{100000, 1}, SignalSpec{1, 0.25}, 100000, 5);
  double flips = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) flips += data.y[i] != sgn(data.z[i]) ? 1.0 : 0.0;
  CHECK(std::abs(flips / 100000.0 - 0.25) < 0.01);
}

TEST_CASE("test sets have clean labels and share features with training draws") {
  const ensemble::BiLevel spec{64, 1.5, 0.5, 0.5};
  const SignalSpec noisy{2, 0.1};
  const auto train = sample_dataset(spec, noisy, 500, 17);
  const auto test = sample_test_set(spec, noisy, 500, 17);
  CHECK(train.phi == test.phi);
  for (Eigen::Index i = 0; i < 500; ++i) CHECK(test.y[i] == sgn(test.z[i]));
  CHECK((train.y.array() != test.y.array()).count() > 0);

  const auto empty = sample_test_set(spec, noisy, 0, 17);
  CHECK(empty.n() == 0);
  CHECK(empty.y.size() == 0);
}

TEST_CASE("sampling is deterministic in the seed") {
  const ensemble::BiLevel spec{64, 1.5, 0.5, 0.5};
  const auto a = sample_dataset(spec, SignalSpec{1, 0.2}, 64, 99);
  const auto b = sample_dataset(spec, SignalSpec{1, 0.2}, 64, 99);
  const auto c = sample_dataset(spec, SignalSpec{1, 0.2}, 64, 100);
  CHECK(a.phi == b.phi);
  CHECK(a.y == b.y);
  CHECK(a.z == b.z);
  CHECK(a.phi != c.phi);
}

TEST_CASE("weak features share the raw input across columns") {
  const ensemble::WeakFeatures spec{32, 512, 0.1};
  const auto data = sample_dataset(spec, SignalSpec{1, 0.0}, 32, 8);
  REQUIRE(data.d() == 512);
  for (Eigen::Index i = 0; i < 32; ++i) {
    CHECK(data.y[i] == sgn(data.z[i]));
    // Row mean of X + W concentrates around X with spread 1/sqrt(512).
    CHECK(std::abs(data.phi.row(i).mean() - data.z[i]) < 5.0 / std::sqrt(512.0));
  }
  // Noise columns have unit variance around the shared input.
  const Eigen::MatrixXd w = data.phi.colwise() - data.z;
  const double var = w.squaredNorm() / static_cast<double>(w.size());
  CHECK(var == doctest::Approx(1.0).epsilon(0.02));

  const auto big = sample_dataset(ensemble::WeakFeatures{20000, 1, 0.1}, SignalSpec{1, 0.0}, 20000, 9);
  const double sd = std::sqrt(big.z.squaredNorm() / 20000.0);
  CHECK(sd == doctest::Approx(0.1).epsilon(0.03));
}
