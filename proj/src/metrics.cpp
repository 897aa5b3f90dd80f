// Licensed under the Apache License 2.0 (see LICENSE file).

#include "metrics.hpp"

#include "error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace deasel::metrics {

using numlin::Vector;

Vector average_ranks(const Vector& values) {
  const auto n = values.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values(a) < values(b); });
  Vector ranks(n);
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values(order[j + 1]) == values(order[i])) ++j;
    const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks(order[t]) = shared;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> pearson(const Vector& a, const Vector& b) {
  const Vector da = a.array() - a.mean();
  const Vector db = b.array() - b.mean();
  const double saa = da.squaredNorm(), sbb = db.squaredNorm();
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  const double r = da.dot(db) / std::sqrt(saa * sbb);
  return std::clamp(r, -1.0, 1.0);
}

ScoreMetrics score_metrics(const Vector& truth, const Vector& model) {
  if (truth.size() != model.size()) throw Error(ErrorKind::Input, "score_metrics: length mismatch");
  if (truth.size() < 2) throw Error(ErrorKind::Input, "score_metrics: need at least two entries");
  if (!truth.allFinite() || !model.allFinite()) throw Error(ErrorKind::Input, "score_metrics: non-finite score");
  ScoreMetrics out;
  out.mse = (truth - model).squaredNorm() / static_cast<double>(truth.size());
  out.pearson = pearson(truth, model);
  out.spearman = pearson(average_ranks(truth), average_ranks(model));
  return out;
}

IdentificationMetrics identification_metrics(const std::vector<bool>& truth, const std::vector<bool>& model) {
  if (truth.size() != model.size()) throw Error(ErrorKind::Input, "identification_metrics: length mismatch");
  if (truth.empty()) throw Error(ErrorKind::Input, "identification_metrics: empty masks");
  std::size_t agree = 0, efficient = 0, found = 0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    if (truth[k] == model[k]) ++agree;
    if (truth[k]) {
      ++efficient;
      if (model[k]) ++found;
    }
  }
  IdentificationMetrics out;
  out.pct_all = static_cast<double>(agree) / static_cast<double>(truth.size());
  if (efficient > 0) out.pct_efficient = static_cast<double>(found) / static_cast<double>(efficient);
  return out;
}

}  // namespace deasel::metrics
