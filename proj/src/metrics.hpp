// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include "numlin.hpp"

#include <optional>
#include <vector>

namespace deasel::metrics {

struct ScoreMetrics {
  double mse = 0.0;
  std::optional<double> pearson;   // empty when either vector is constant
  std::optional<double> spearman;
};

struct IdentificationMetrics {
  double pct_all = 0.0;
  std::optional<double> pct_efficient;  // empty without true-efficient DMUs
};

/// Throws Error{Input} for unequal lengths, fewer than two entries or
/// non-finite values.
ScoreMetrics score_metrics(const numlin::Vector& truth, const numlin::Vector& model);

IdentificationMetrics identification_metrics(const std::vector<bool>& truth, const std::vector<bool>& model);

/// 1-based ranks with ties sharing the average of their positions.
numlin::Vector average_ranks(const numlin::Vector& values);

std::optional<double> pearson(const numlin::Vector& a, const numlin::Vector& b);

}  // namespace deasel::metrics
