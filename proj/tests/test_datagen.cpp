// Licensed under the Apache License 2.0 (see LICENSE file).

#include "datagen.hpp"
#include "support.hpp"

#include <cmath>

using namespace deasel;
using namespace deasel::datagen;
using dea::Rts;
using numlin::Matrix;
using numlin::Vector;
using testing::error_kind;

namespace {

double sample_correlation(const Vector& a, const Vector& b) {
  const Vector ca = a.array() - a.mean();
  const Vector cb = b.array() - b.mean();
  return ca.dot(cb) / (ca.norm() * cb.norm());
}

}  // namespace

TEST_SUITE_BEGIN("datagen");

TEST_CASE("correlate: endpoints and sample correlation") {
  Rng rng(5);
  const Eigen::Index n = 10000;
  Vector x(n), w(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    x(k) = rng.uniform(std::log(5.0), std::log(15.0));
    w(k) = rng.uniform(std::log(5.0), std::log(15.0));
  }
  CHECK(correlate(x, 1.0, w) == x);
  CHECK(correlate(x, 0.0, w) == w);
  const double r = sample_correlation(correlate(x, 0.8, w), x);
  CHECK(r >= 0.77);
  CHECK(r <= 0.83);
  CHECK(error_kind([&] { correlate(x, 1.5, w); }) == ErrorKind::Input);
  CHECK(error_kind([&] { correlate(x, 0.5, w.head(3)); }) == ErrorKind::Input);
}

TEST_CASE("expected_efficiency and calibrate_sigma") {
  // E[exp(-|sigma Z|)] by direct numerical integration of the half-normal density.
  const auto integrate = [](double sigma) {
    const int steps = 200000;
    const double upper = 12.0 * sigma, h = upper / steps;
    double total = 0.0;
    for (int i = 0; i < steps; ++i) {
      const double u = (i + 0.5) * h;
      total += std::exp(-u) * std::sqrt(2.0 / M_PI) / sigma * std::exp(-u * u / (2 * sigma * sigma)) * h;
    }
    return total;
  };
  CHECK(expected_efficiency(0.2) == doctest::Approx(integrate(0.2)).epsilon(1e-8));
  CHECK(expected_efficiency(0.2) == doctest::Approx(0.85848).epsilon(1e-4));
  const double sigma = calibrate_sigma(0.85);
  CHECK(sigma == doctest::Approx(0.21365).epsilon(1e-4));
  CHECK(std::abs(expected_efficiency(sigma) - 0.85) <= 1e-6);
  CHECK(calibrate_sigma(0.8584) == doctest::Approx(0.20).epsilon(2e-3));
  CHECK(calibrate_sigma(0.999999) < 1e-4);
  CHECK(error_kind([] { calibrate_sigma(1.0); }) == ErrorKind::Input);
  CHECK(error_kind([] { calibrate_sigma(0.0); }) == ErrorKind::Input);
}

TEST_CASE("Monte Carlo mean efficiency at the calibrated sigma") {
  Rng rng(2024);
  const double sigma = calibrate_sigma(0.85);
  double total = 0.0;
  const int draws = 1000000;
  for (int i = 0; i < draws; ++i) total += std::exp(-std::abs(sigma * rng.normal()));
  const double mean = total / draws;
  CHECK(mean >= 0.845);
  CHECK(mean <= 0.855);
}

TEST_CASE("Rng streams are reproducible") {
  Rng a(9), b(9);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  Rng u(3);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  CHECK(derive_seed(1, {1, 0, 0}) != derive_seed(1, {1, 0, 1}));
  CHECK(derive_seed(1, {1, 0, 0}) == derive_seed(1, {1, 0, 0}));
  CHECK(derive_seed(1, {2, 0}) != derive_seed(2, {1, 0}));
}

TEST_CASE("builtin scenarios") {
  for (Rts rts : {Rts::CRS, Rts::VRS}) {
    for (int id = 1; id <= kBuiltinScenarioCount; ++id) {
      const auto sc = builtin_scenario(id, rts);
      CHECK_NOTHROW(sc.validate());
      CHECK(sc.rts == rts);
    }
  }
  const auto base = builtin_scenario(1, Rts::CRS);
  CHECK(base.n == 100);
  CHECK(base.relevant == 3);
  CHECK(base.irrelevant == 1);
  CHECK(builtin_scenario(8, Rts::CRS).n == 25);
  CHECK(builtin_scenario(9, Rts::VRS).n == 300);
  CHECK(builtin_scenario(11, Rts::CRS).relevant == 2);
  CHECK(error_kind([] { builtin_scenario(13, Rts::CRS); }) == ErrorKind::Input);
}

TEST_CASE("scenario validation") {
  auto sc = builtin_scenario(1, Rts::CRS);
  sc.alpha = {0.5, 0.3, 0.3};
  CHECK(error_kind([&] { sc.validate(); }) == ErrorKind::Input);
  sc = builtin_scenario(1, Rts::VRS);
  sc.alpha = {0.5, 0.3, 0.3};
  CHECK(error_kind([&] { sc.validate(); }) == ErrorKind::Input);
  sc = builtin_scenario(1, Rts::CRS);
  sc.n = 1;
  CHECK(error_kind([&] { sc.validate(); }) == ErrorKind::Input);
  sc = builtin_scenario(1, Rts::CRS);
  sc.correlations = {{1, 0, 1.2}};
  CHECK(error_kind([&] { generate_scenario(sc, 1); }) == ErrorKind::Input);
  sc = builtin_scenario(1, Rts::CRS);
  sc.log_hi = sc.log_lo;
  CHECK(error_kind([&] { sc.validate(); }) == ErrorKind::Input);
}

TEST_CASE("generate_scenario: shape, truth and the production identity") {
  const auto sc = builtin_scenario(1, Rts::CRS);
  const auto [d, truth] = generate_scenario(sc, 77);
  CHECK(d.inputs() == 4);
  CHECK(d.outputs() == 1);
  CHECK(d.dmus() == 100);
  CHECK(truth.true_inputs == dea::IndexSet{0, 1, 2});
  CHECK(truth.epsilon.maxCoeff() <= 1.0);
  CHECK(truth.epsilon.minCoeff() > 0.0);
  CHECK(d.X.minCoeff() >= 5.0 - 1e-12);
  CHECK(d.X.maxCoeff() <= 15.0 + 1e-12);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < 100; ++k) {
    double logy = -truth.u(k);
    for (std::size_t i = 0; i < 3; ++i) logy += sc.alpha[i] * std::log(d.X(static_cast<Eigen::Index>(i), k));
    worst = std::max(worst, std::abs(std::log(d.Y(0, k)) - logy));
    CHECK(truth.epsilon(k) == doctest::Approx(std::exp(-truth.u(k))).epsilon(1e-14));
  }
  CHECK(worst <= 1e-12);

  const auto [again, truth2] = generate_scenario(sc, 77);
  CHECK(again.X == d.X);
  CHECK(again.Y == d.Y);
  const auto [other, truth3] = generate_scenario(sc, 78);
  CHECK(other.X != d.X);
}

TEST_CASE("generate_scenario: large-sample moments") {
  auto sc = builtin_scenario(2, Rts::CRS);
  sc.n = 10000;
  const auto [d, truth] = generate_scenario(sc, 4242);
  CHECK(std::abs(truth.epsilon.mean() - 0.85) <= 0.01);
  const Vector lx0 = d.X.row(0).array().log();
  const Vector lx1 = d.X.row(1).array().log();
  const Vector lx3 = d.X.row(3).array().log();
  CHECK(std::abs(sample_correlation(lx1, lx0) - 0.8) <= 0.03);
  CHECK(std::abs(sample_correlation(lx3, lx0)) <= 0.03);
}

TEST_CASE("generate_scenario: zero sigma gives a noise-free frontier") {
  auto sc = builtin_scenario(1, Rts::CRS);
  sc.sigma = 0.0;
  const auto [d, truth] = generate_scenario(sc, 3);
  CHECK(truth.epsilon == Vector::Ones(100));
  CHECK(truth.sigma == 0.0);
}

TEST_SUITE_END();
