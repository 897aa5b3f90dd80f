// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include "dea.hpp"

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace deasel::datagen {

using numlin::Vector;

/// Reproducible random source. The engine is mt19937_64, whose output
/// sequence is fixed by the C++ standard; the uniform and normal transforms
/// below are ours, so draws are identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// 53-bit uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal by Box-Muller; the second variate of each pair is kept.
  double normal();

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Seed for an independent stream: folds each key into `master` with mix64.
/// Trials use derive_seed(master, {scenario, rts, trial}).
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys);

/// x_target = rho * x_source + w * sqrt(1 - rho^2), applied to log inputs;
/// w is the target's own independent uniform draw.
struct Correlation {
  std::size_t target = 0;
  std::size_t source = 0;
  double rho = 0.0;
};

struct Scenario {
  int id = 1;
  dea::Rts rts = dea::Rts::CRS;
  std::vector<double> alpha;
  std::vector<Correlation> correlations;
  std::size_t n = 100;
  std::size_t relevant = 3;
  std::size_t irrelevant = 1;
  double log_lo = 0.0;
  double log_hi = 0.0;
  double target_mean_efficiency = 0.85;
  /// Replaces the calibrated sigma when set (0 gives a noise-free frontier).
  std::optional<double> sigma;
  std::string description;

  std::size_t inputs() const { return relevant + irrelevant; }
  void validate() const;
};

struct TruthInfo {
  dea::IndexSet true_inputs;
  Vector epsilon;  // in (0, 1]
  Vector u;        // -ln(epsilon), half-normal
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

/// Throws Error{Input} when |rho| > 1 or the lengths differ.
Vector correlate(const Vector& source, double rho, const Vector& w);

/// E[exp(-|N(0, sigma^2)|)] = 2 exp(sigma^2/2) (1 - Phi(sigma)).
double expected_efficiency(double sigma);

/// Inverts expected_efficiency; throws Error{Input} outside (0, 1).
double calibrate_sigma(double target_mean_efficiency);

/// Draws a Cobb-Douglas panel with half-normal inefficiency. Relevant inputs
/// come first, then irrelevant ones. Deterministic in (scenario, seed).
std::pair<dea::DataSet, TruthInfo> generate_scenario(const Scenario& scenario, std::uint64_t seed);

/// The twelve experiment designs (ids 1..12) for either returns-to-scale.
Scenario builtin_scenario(int id, dea::Rts rts);

inline constexpr int kBuiltinScenarioCount = 12;

}  // namespace deasel::datagen
