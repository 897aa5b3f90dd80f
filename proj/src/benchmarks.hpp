// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include "dea.hpp"
#include "selection.hpp"

#include <cstddef>
#include <span>

namespace deasel::bench {

using numlin::Vector;

struct EcmParams {
  double p0 = 0.15;
  double gamma_bar = 1.10;
  double alpha = 0.05;
  dea::Rts rts = dea::Rts::CRS;

  void validate() const;
};

struct EcmTest {
  bool significant = false;
  double p_value = 1.0;
  std::size_t count = 0;  // T = #{k : gamma_k > gamma_bar}
  std::size_t trials = 0;  // DMUs with a finite gamma
};

/// gamma_k = theta_k(current without candidate) / theta_k(current), radial
/// output-oriented scores. NaN where either LP failed. Throws Error{Input}
/// when the candidate is not in `current` or `current` has one input.
Vector ecm_gamma(const dea::DataSet& data, std::span<const std::size_t> current, std::size_t candidate,
                 dea::Rts rts);

/// Exact upper binomial tail P[Binomial(n_eff, p0) >= T]. Throws
/// Error{Undecidable} when every gamma is missing.
EcmTest ecm_binomial_test(const Vector& gamma, const EcmParams& params);

/// Backward elimination from the full candidate set. Among inputs whose
/// contribution is not significant the one with the smallest T is removed
/// (then smallest mean gamma, then lowest index) until all remaining inputs
/// are significant or one is left.
SelectionResult ecm_backward_select(const dea::DataSet& data, std::span<const std::size_t> candidates,
                                    const EcmParams& params);

struct RbParams {
  double confidence = 0.90;
  std::size_t seed_input = 0;
  dea::Rts rts = dea::Rts::CRS;

  void validate() const;
};

/// Regression-based forward test. Efficiency E = 1/theta from the included
/// inputs is regressed (with intercept, on raw levels) against every
/// candidate not yet included; all candidates with a positive coefficient and
/// one-sided p-value <= 1 - confidence are added at once, and the round
/// repeats until nothing is added. Candidates that make the design rank
/// deficient are skipped for that round with a warning.
///
/// Throws Error{Input} when n <= |candidates| + 2 or the seed is invalid.
SelectionResult rb_select(const dea::DataSet& data, std::span<const std::size_t> candidates, const RbParams& params);

}  // namespace deasel::bench
