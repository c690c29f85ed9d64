#include <cmath>

#include "doctest.h"

#include "fraclap/error.hpp"
#include "fraclap/oracles.hpp"

using namespace fraclap;

namespace {
const double kPi = std::acos(-1.0);
}

TEST_CASE("rectangle spectrum is (pi n / a)^2 + (pi k / b)^2 in order") {
  const auto modes = rectangle_spectrum(1.0, 0.25, 50);
  REQUIRE(modes.size() == 50);
  CHECK(modes[0].value == 0.0);
  // Below (4 pi)^2 only the x-modes appear: (pi n)^2 for n = 0..4.
  for (int n = 0; n <= 3; ++n) {
    CHECK(modes[n].value == doctest::Approx(std::pow(kPi * n, 2)));
    CHECK(modes[n].k == 0);
  }
  for (std::size_t i = 1; i < modes.size(); ++i) CHECK(modes[i - 1].value <= modes[i].value);
  CHECK_THROWS_AS(rectangle_spectrum(0.0, 1.0, 3), InvalidInput);
}

TEST_CASE("unit square multiplicities") {
  const auto modes = rectangle_spectrum(1.0, 1.0, 6);
  CHECK(modes[1].value == doctest::Approx(kPi * kPi));
  CHECK(modes[2].value == doctest::Approx(kPi * kPi));
  CHECK(modes[3].value == doctest::Approx(2 * kPi * kPi));
  CHECK(modes[4].value == doctest::Approx(4 * kPi * kPi));
  CHECK(modes[5].value == doctest::Approx(4 * kPi * kPi));
}

TEST_CASE("phi_minus inverts 5 - 4 z on the lower branch") {
  for (double t : {0.0, 0.1, 0.7, 1.2}) {
    const double z = phi_minus(t);
    // phi_-(t) solves z (5 - z) = t on the branch through 0.
    CHECK(z * (5.0 - z) == doctest::Approx(t).epsilon(1e-12));
  }
}

TEST_CASE("big phi is the renormalized limit of phi_minus iterates") {
  CHECK(big_phi(0.0) == doctest::Approx(0.0));
  const double t = 1e-6;
  CHECK(big_phi(t) / t == doctest::Approx(1.0).epsilon(1e-5));
  for (double s : {0.3, 1.0, 2.0, 3.5}) {
    // Phi(t) = 5 Phi(phi_-(t)) is the functional equation of the limit.
    CHECK(big_phi(s) == doctest::Approx(5.0 * big_phi(phi_minus(s))).epsilon(1e-10));
  }
}

TEST_CASE("spectral decimation row eigenvalues approach (3/2)(pi j)^2") {
  for (int j = 1; j <= 4; ++j) {
    const double exact = 1.5 * std::pow(kPi * j, 2);
    const double scaled = std::pow(0.8, 12) * sg_row_eigenvalue(12, j);
    CHECK(std::abs(scaled - exact) / exact < 1e-3);
  }
  // The approach improves with m.
  const double e8 = std::abs(std::pow(0.8, 8) * sg_row_eigenvalue(8, 1) - 1.5 * kPi * kPi);
  const double e12 = std::abs(std::pow(0.8, 12) * sg_row_eigenvalue(12, 1) - 1.5 * kPi * kPi);
  CHECK(e12 < e8);
}

TEST_CASE("extension energy increases to the interval energy") {
  CosineSeries f;
  f.a = {0.0, 1.0};
  double prev = 0.0;
  for (int m = 1; m <= 12; ++m) {
    const auto e = extension_energy(f, m);
    CHECK(e.scaled > prev);
    prev = e.scaled;
    CHECK(e.E_I == doctest::Approx(kPi * kPi / 2));
  }
  CHECK(std::abs(prev - kPi * kPi / 2) < 1e-4);
}

TEST_CASE("normal derivative limit of a single mode") {
  CosineSeries f;
  f.a = {0.0, 1.0};
  const auto r = normal_derivative_limit(f, 0.3, {4, 8, 12});
  CHECK(r.limit == doctest::Approx(-kPi * kPi * std::cos(0.3 * kPi)));
  REQUIRE(r.scaled.size() == 3);
  CHECK(std::abs(r.scaled[2] - r.limit) < std::abs(r.scaled[0] - r.limit));
}

TEST_CASE("row eigenfunction satisfies the averaged graph relation with a constant") {
  const auto fit = sg_row_relation_fit(6, 2, ApexConvention::SameIndex);
  CHECK(fit.spread < 1e-9);
  CHECK(fit.constant == doctest::Approx(0.25));
}
