// Licensed under the Apache License 2.0 (see LICENSE file).

#include "datagen.hpp"

#include "error.hpp"

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <numbers>

namespace deasel::datagen {

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (spare_) {
    const double z = *spare_;
    spare_.reset();
    return z;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = mix64(master);
  for (auto k : keys) h = mix64(mix64(h) ^ k);
  return h;
}

void Scenario::validate() const {
  if (relevant < 1 || alpha.size() != relevant) throw Error(ErrorKind::Input, "scenario: alpha must have one entry per relevant input");
  double sum = 0.0;
  for (double a : alpha) {
    if (!(a > 0.0)) throw Error(ErrorKind::Input, "scenario: elasticities must be positive");
    sum += a;
  }
  if (rts == dea::Rts::CRS && std::abs(sum - 1.0) > 1e-9) throw Error(ErrorKind::Input, "scenario: CRS needs sum(alpha) = 1");
  if (rts == dea::Rts::VRS && !(sum < 1.0 - 1e-12)) throw Error(ErrorKind::Input, "scenario: VRS needs sum(alpha) < 1");
  if (n < 2) throw Error(ErrorKind::Input, "scenario: need at least two DMUs");
  if (!(log_lo < log_hi)) throw Error(ErrorKind::Input, "scenario: log-input interval must have a < b");
  if (!sigma && !(target_mean_efficiency > 0.0 && target_mean_efficiency < 1.0)) {
    throw Error(ErrorKind::Input, "scenario: target mean efficiency must lie in (0, 1)");
  }
  if (sigma && !(*sigma >= 0.0)) throw Error(ErrorKind::Input, "scenario: sigma must be >= 0");
  for (const auto& c : correlations) {
    if (c.target >= inputs() || c.source >= inputs() || c.target == c.source) {
      throw Error(ErrorKind::Input, "scenario: correlation refers to an invalid input pair");
    }
    if (!(std::abs(c.rho) <= 1.0)) throw Error(ErrorKind::Input, "scenario: |rho| must be <= 1");
  }
}

Vector correlate(const Vector& source, double rho, const Vector& w) {
  if (!(std::abs(rho) <= 1.0)) throw Error(ErrorKind::Input, "correlate: |rho| must be <= 1");
  if (source.size() != w.size()) throw Error(ErrorKind::Input, "correlate: length mismatch");
  if (rho == 1.0) return source;
  if (rho == 0.0) return w;
  return rho * source + std::sqrt(1.0 - rho * rho) * w;
}

namespace {

// exp(x^2) erfc(x), continued fraction for large x where the factors
// separately overflow/underflow.
double erfcx(double x) {
  if (x < 4.0) return std::exp(x * x) * std::erfc(x);
  double frac = 0.0;
  for (int k = 120; k >= 1; --k) frac = (0.5 * k) / (x + frac);
  return 1.0 / ((x + frac) * std::sqrt(std::numbers::pi));
}

}  // namespace

double expected_efficiency(double sigma) {
  if (!(sigma >= 0.0)) throw Error(ErrorKind::Input, "sigma must be >= 0");
  return erfcx(sigma / std::numbers::sqrt2);
}

double calibrate_sigma(double target) {
  if (!(target > 0.0 && target < 1.0)) throw Error(ErrorKind::Input, "calibrate_sigma: target must lie in (0, 1)");
  double hi = 1.0;
  while (expected_efficiency(hi) > target) hi *= 2.0;
  auto f = [target](double s) { return expected_efficiency(s) - target; };
  std::uintmax_t iters = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(f, 0.0, hi, boost::math::tools::eps_tolerance<double>(45), iters);
  return 0.5 * (a + b);
}

std::pair<dea::DataSet, TruthInfo> generate_scenario(const Scenario& sc, std::uint64_t seed) {
  sc.validate();
  const auto m = static_cast<Eigen::Index>(sc.inputs());
  const auto n = static_cast<Eigen::Index>(sc.n);
  Rng rng(seed);

  // Log inputs, input-major, then correlations in declared order.
  numlin::Matrix logX(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index k = 0; k < n; ++k) logX(i, k) = rng.uniform(sc.log_lo, sc.log_hi);
  }
  for (const auto& c : sc.correlations) {
    const auto t = static_cast<Eigen::Index>(c.target);
    const auto src = static_cast<Eigen::Index>(c.source);
    logX.row(t) = correlate(logX.row(src).transpose(), c.rho, logX.row(t).transpose()).transpose();
  }

  TruthInfo truth;
  truth.seed = seed;
  truth.sigma = sc.sigma ? *sc.sigma : calibrate_sigma(sc.target_mean_efficiency);
  truth.u.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) truth.u(k) = std::abs(truth.sigma * rng.normal());
  truth.epsilon = (-truth.u).array().exp();
  for (std::size_t i = 0; i < sc.relevant; ++i) truth.true_inputs.push_back(i);

  // ln y = ln(beta) + sum alpha_i ln x_i - u with beta = 1.
  numlin::Matrix Y(1, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    double logy = -truth.u(k);
    for (std::size_t i = 0; i < sc.relevant; ++i) logy += sc.alpha[i] * logX(static_cast<Eigen::Index>(i), k);
    Y(0, k) = std::exp(logy);
  }
  auto data = dea::DataSet::make(logX.array().exp().matrix(), std::move(Y));
  return {std::move(data), std::move(truth)};
}

Scenario builtin_scenario(int id, dea::Rts rts) {
  if (id < 1 || id > kBuiltinScenarioCount) throw Error(ErrorKind::Input, "unknown scenario id " + std::to_string(id));
  const bool crs = rts == dea::Rts::CRS;
  Scenario sc;
  sc.id = id;
  sc.rts = rts;
  sc.log_lo = std::log(5.0);
  sc.log_hi = std::log(15.0);
  const std::vector<double> equal3 = crs ? std::vector<double>(3, 1.0 / 3.0) : std::vector<double>(3, 0.25);
  const std::vector<Correlation> correlated{{1, 0, 0.8}, {2, 0, 0.2}};
  const std::vector<double> varied_a = crs ? std::vector<double>{1.0 / 3.0, 4.0 / 9.0, 2.0 / 9.0}
                                           : std::vector<double>{0.25, 1.0 / 3.0, 1.0 / 6.0};
  const std::vector<double> varied_b = crs ? std::vector<double>{1.0 / 3.0, 2.0 / 9.0, 4.0 / 9.0}
                                           : std::vector<double>{0.25, 1.0 / 6.0, 1.0 / 3.0};
  sc.alpha = equal3;
  switch (id) {
    case 1: sc.description = "Base case"; break;
    case 2: sc.description = "Correlated inputs"; sc.correlations = correlated; break;
    case 3: sc.description = "Highly correlated inputs"; sc.correlations = {{1, 0, 0.8}, {2, 0, 0.8}}; break;
    case 4: sc.description = "Input contribution to output varied"; sc.alpha = varied_a; break;
    case 5:
      sc.description = "Correlated inputs and input contribution to output varied";
      sc.alpha = varied_a;
      sc.correlations = correlated;
      break;
    case 6:
      sc.description = "Correlated inputs and input contribution to output varied";
      sc.alpha = varied_b;
      sc.correlations = correlated;
      break;
    case 7: sc.description = "Correlated input and a random variable"; sc.correlations = {{3, 0, 0.8}}; break;
    case 8: sc.description = "Small sample size"; sc.n = 25; break;
    case 9: sc.description = "Large sample size"; sc.n = 300; break;
    case 10:
      sc.description = "Base case with one more relevant input";
      sc.relevant = 4;
      sc.alpha = std::vector<double>(4, crs ? 0.25 : 0.2);
      break;
    case 11:
      sc.description = "Base case without a relevant input";
      sc.relevant = 2;
      sc.alpha = std::vector<double>(2, crs ? 0.5 : 1.0 / 3.0);
      break;
    case 12: sc.description = "Base case with three irrelevant inputs"; sc.irrelevant = 3; break;
    default: break;
  }
  return sc;
}

}  // namespace deasel::datagen
