#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "ovp/ensembles.hpp"
#include "ovp/error.hpp"
#include "ovp/theory.hpp"

using namespace ovp;

namespace {

// Smallest integer d with d >= 72 (sqrt(d) n sqrt(ln n) + n^1.5 ln n + 1),
// from the quadratic in sqrt(d).
std::size_t isotropic_crossing(std::size_t n) {
  const double nn = static_cast<double>(n);
  const double b = 72.0 * nn * std::sqrt(std::log(nn));
  const double c = 72.0 * (std::pow(nn, 1.5) * std::log(nn) + 1.0);
  const double root = (b + std::sqrt(b * b + 4.0 * c)) / 2.0;
  return static_cast<std::size_t>(std::ceil(root * root));
}

}  // namespace

TEST_CASE("regime classification examples") {
  auto a = classify_regime(1.5, 0.25, 0.5);
  CHECK(a.regime == Regime::BothSucceed);
  CHECK(a.limit_mse == 0.0);
  CHECK(a.limit_cls == 0.0);
  CHECK(a.q_low == doctest::Approx(0.5));
  CHECK(a.q_high == doctest::Approx(0.75));

  auto b = classify_regime(1.5, 0.6, 0.5);
  CHECK(b.regime == Regime::ClassificationOnly);
  CHECK(b.limit_mse == 1.0);
  CHECK(b.limit_cls == 0.0);

  auto c = classify_regime(1.5, 0.9, 0.5);
  CHECK(c.regime == Regime::BothFail);
  CHECK(c.limit_mse == 1.0);
  CHECK(c.limit_cls == 0.5);

  auto knee = classify_regime(1.5, 0.5, 0.5);
  CHECK(knee.regime == Regime::Boundary);
  CHECK(std::isnan(knee.limit_mse));
  CHECK(classify_regime(1.5, 0.75, 0.5).regime == Regime::Boundary);

  CHECK_THROWS_AS(classify_regime(1.0, 0.5, 0.5), Error);
  CHECK_THROWS_AS(classify_regime(1.5, 1.1, 0.5), Error);
  CHECK_THROWS_AS(classify_regime(1.5, 0.0, 0.5), Error);
  CHECK_THROWS_AS(classify_regime(1.5, 0.5, 1.0), Error);
}

TEST_CASE("regimes partition the (q, r) plane in order") {
  const double p = 1.5;
  for (int ir = 0; ir < 100; ++ir) {
    const double r = 0.99 * ir / 99.0;
    int last = -1;
    for (int iq = 1; iq < 100; ++iq) {
      const double q = (p - r) * iq / 100.0;
      const auto v = classify_regime(p, q, r);
      const double lo = 1.0 - r;
      const double hi = lo + (p - 1.0) / 2.0;
      Regime expected = Regime::Boundary;
      if (std::abs(q - lo) > kBoundaryTol && std::abs(q - hi) > kBoundaryTol) {
        expected = q < lo ? Regime::BothSucceed
                          : (q < hi ? Regime::ClassificationOnly : Regime::BothFail);
      }
      CHECK(v.regime == expected);
      if (v.regime != Regime::Boundary) {
        const int rank = static_cast<int>(v.regime);
        CHECK(rank >= last);
        last = rank;
      }
    }
  }
}

TEST_CASE("isotropic support-vector condition") {
  const auto a = all_sv_condition_isotropic(32, 1141);
  CHECK(a.rhs == doctest::Approx(10.0 * 32.0 * std::log(32.0) + 31.0));
  CHECK(a.rhs == doctest::Approx(1140.0).epsilon(1e-3));
  CHECK(a.holds);
  CHECK_FALSE(all_sv_condition_isotropic(32, 1140).holds);
  CHECK_FALSE(all_sv_condition_isotropic(32, 1024).holds);
  const auto b = all_sv_condition_isotropic(2, 100);
  CHECK(b.holds);
  CHECK(b.rhs == doctest::Approx(14.86).epsilon(1e-3));
}

TEST_CASE("general support-vector condition") {
  CHECK_FALSE(all_sv_condition_general(Spectrum{{1.0}}, 2).holds);
  const auto iso32 = all_sv_condition_general(build_spectrum(ensemble::Isotropic{32, 1141}), 32);
  CHECK_FALSE(iso32.holds);
  CHECK(iso32.lhs == doctest::Approx(1141.0));

  for (std::size_t n : {2u, 3u, 5u, 10u}) {
    const std::size_t d = isotropic_crossing(n);
    CAPTURE(n);
    CAPTURE(d);
    const auto at = all_sv_condition_general(Spectrum{std::vector<double>(d, 1.0)}, n);
    const auto below = all_sv_condition_general(Spectrum{std::vector<double>(d - 1, 1.0)}, n);
    CHECK(at.holds);
    CHECK_FALSE(below.holds);
    // The general condition is the stronger one on isotropic inputs.
    CHECK(all_sv_condition_isotropic(n, d).holds);
    CHECK(all_sv_condition_isotropic(n, 2 * d).holds);
  }
}

TEST_CASE("bi-level sufficient condition") {
  CHECK(bilevel_sv_sufficient(3.0, 1.2, 0.5));
  CHECK_FALSE(bilevel_sv_sufficient(1.5, 0.8, 0.5));
  for (double q : {0.5, 1.0, 1.4}) CHECK_FALSE(bilevel_sv_sufficient(2.0, q, 0.5));
  CHECK_FALSE(bilevel_sv_sufficient(3.0, 1.0, 0.5));
}

TEST_CASE("predicted scalings") {
  const auto a = predicted_scalings(1.5, 0.6, 0.5, 0.0);
  CHECK(a.su_exponent == doctest::Approx(-0.1));
  CHECK(a.cn_lower_exponent == doctest::Approx(-0.25));
  CHECK(a.su_limit == 0.0);

  const auto b = predicted_scalings(1.5, 0.1, 0.5, 0.0);
  CHECK(b.su_limit == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)));
  CHECK(b.su_limit == doctest::Approx(0.7979).epsilon(1e-4));
  CHECK(b.su_exponent == 0.0);

  const auto c = predicted_scalings(1.5, 0.1, 0.5, 0.25);
  CHECK(c.su_limit == doctest::Approx(b.su_limit / 2.0));

  CHECK_THROWS_AS(predicted_scalings(1.5, 0.5, 0.5, 0.0), Error);
  CHECK_THROWS_AS(predicted_scalings(1.5, 0.1, 0.5, 0.5), Error);
}

TEST_CASE("predicted scalings agree with the regime limits") {
  for (double r : {0.0, 0.2, 0.5, 0.8}) {
    for (double p : {1.2, 1.5, 2.5}) {
      for (int iq = 1; iq < 40; ++iq) {
        const double q = (p - r) * iq / 40.0;
        const auto v = classify_regime(p, q, r);
        if (v.regime == Regime::Boundary) continue;
        const auto s = predicted_scalings(p, q, r, 0.0);
        CAPTURE(p);
        CAPTURE(q);
        CAPTURE(r);
        CHECK(std::isfinite(s.cn_upper_exponent));
        CHECK(s.cn_lower_exponent <= s.cn_upper_exponent + 1e-12);
        switch (v.regime) {
          case Regime::BothSucceed:
            // Survival stays positive while contamination vanishes.
            CHECK(s.su_limit > 0.0);
            CHECK(s.cn_upper_exponent < 0.0);
            CHECK(v.limit_cls == 0.0);
            break;
          case Regime::ClassificationOnly:
            CHECK(s.snr_lower_exponent > 0.0);
            CHECK(v.limit_cls == 0.0);
            break;
          case Regime::BothFail:
            CHECK(s.snr_upper_exponent < 0.0);
            CHECK(v.limit_cls == 0.5);
            break;
          default:
            break;
        }
      }
    }
  }
}

TEST_CASE("exponent fits") {
  const std::vector<double> ns{64, 128, 256, 512, 1024};
  std::vector<double> power;
  for (double n : ns) power.push_back(3.0 * std::pow(n, -0.25));
  const auto f = fit_exponent(ns, power);
  CHECK(f.slope == doctest::Approx(-0.25).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));

  const auto flat = fit_exponent(ns, std::vector<double>(5, 2.0));
  CHECK(std::abs(flat.slope) < 1e-14);

  CHECK_THROWS_AS(fit_exponent({4, 4, 4}, {1, 2, 3}), Error);
  try {
    fit_exponent({4, 4, 4}, {1, 2, 3});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateInput);
  }
  CHECK_THROWS_AS(fit_exponent({1, 2}, {1, 2}), Error);
  CHECK_THROWS_AS(fit_exponent({1, 2, 3}, {1, -2, 3}), Error);
}
