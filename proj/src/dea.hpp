// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include "numlin.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace deasel::dea {

using numlin::Matrix;
using numlin::Vector;
using IndexSet = std::vector<std::size_t>;

/// A panel of n DMUs: X is m x n (inputs), Y is s x n (outputs). Column k is
/// DMU k. All entries must be finite and strictly positive.
struct DataSet {
  Matrix X;
  Matrix Y;
  std::vector<std::string> input_labels;
  std::vector<std::string> output_labels;

  /// Builds and validates a panel; empty label lists become x1.., y1..
  static DataSet make(Matrix X, Matrix Y, std::vector<std::string> input_labels = {},
                      std::vector<std::string> output_labels = {});

  std::size_t inputs() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t outputs() const { return static_cast<std::size_t>(Y.rows()); }
  std::size_t dmus() const { return static_cast<std::size_t>(X.cols()); }

  /// Throws Error{Input} when an invariant is violated.
  void validate() const;

  /// The first `count` DMUs.
  DataSet head(std::size_t count) const;
  /// Same DMUs, only the listed input rows.
  DataSet select_inputs(std::span<const std::size_t> rows) const;
  /// Every input and output row divided by its mean across DMUs.
  DataSet normalized() const;

  IndexSet all_inputs() const;
};

enum class ModelKind { CCR, BCC, Additive };
enum class Rts { CRS, VRS };
enum class DmuStatus { Optimal, Failed };

const char* to_string(ModelKind kind);
const char* to_string(Rts rts);

struct EfficiencyResult {
  ModelKind kind = ModelKind::CCR;
  Rts rts = Rts::CRS;
  /// Radial: output expansion factor theta >= 1. Additive: total slack Z >= 0.
  /// NaN where the DMU's LP failed.
  Vector scores;
  std::vector<DmuStatus> status;
  IndexSet inputs;

  std::size_t failures() const;
};

inline constexpr double kDefaultEfficiencyTol = 1e-6;

/// Output-oriented CCR envelopment scores, one LP per DMU.
EfficiencyResult ccr_output_scores(const DataSet& data, std::span<const std::size_t> inputs);

/// CCR plus the convexity row sum(lambda) = 1.
EfficiencyResult bcc_output_scores(const DataSet& data, std::span<const std::size_t> inputs);

/// Radial scores for the given returns to scale (CCR for CRS, BCC for VRS).
EfficiencyResult radial_output_scores(const DataSet& data, std::span<const std::size_t> inputs, Rts rts);

/// Additive model: maximal total input excess plus output shortfall.
EfficiencyResult additive_scores(const DataSet& data, std::span<const std::size_t> inputs, Rts rts);

/// Flags DMUs whose score is within `tol` of efficient. Failed DMUs are
/// never flagged.
std::vector<bool> efficient_set(const EfficiencyResult& result, double tol = kDefaultEfficiencyTol);

}  // namespace deasel::dea
