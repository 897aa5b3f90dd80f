// Licensed under the Apache License 2.0 (see LICENSE file).

#include "benchmarks.hpp"

#include "error.hpp"

#include <boost/math/distributions/binomial.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>

namespace deasel::bench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

dea::IndexSet without(std::span<const std::size_t> set, std::size_t drop) {
  dea::IndexSet out;
  for (auto i : set) {
    if (i != drop) out.push_back(i);
  }
  return out;
}

Vector ratio(const dea::EfficiencyResult& reduced, const dea::EfficiencyResult& full) {
  Vector g(full.scores.size());
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    const double a = reduced.scores(k), b = full.scores(k);
    g(k) = (std::isfinite(a) && std::isfinite(b)) ? a / b : kNaN;
  }
  return g;
}

double finite_mean(const Vector& v) {
  double sum = 0.0;
  std::size_t count = 0;
  for (double x : v) {
    if (std::isfinite(x)) {
      sum += x;
      ++count;
    }
  }
  return count ? sum / static_cast<double>(count) : kNaN;
}

void check_candidates(const dea::DataSet& data, std::span<const std::size_t> candidates) {
  if (candidates.empty()) throw Error(ErrorKind::Input, "need at least one candidate input");
  dea::IndexSet sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(ErrorKind::Input, "candidate inputs must be distinct");
  }
  if (sorted.back() >= data.inputs()) throw Error(ErrorKind::Input, "candidate input out of range", sorted.back());
}

}  // namespace

void EcmParams::validate() const {
  if (!(p0 > 0.0 && p0 < 1.0)) throw Error(ErrorKind::Input, "ECM p0 must lie in (0, 1)");
  if (!(gamma_bar >= 1.0)) throw Error(ErrorKind::Input, "ECM gamma_bar must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::Input, "ECM alpha must lie in (0, 1)");
}

void RbParams::validate() const {
  if (!(confidence > 0.0 && confidence < 1.0)) throw Error(ErrorKind::Input, "RB confidence must lie in (0, 1)");
}

Vector ecm_gamma(const dea::DataSet& data, std::span<const std::size_t> current, std::size_t candidate,
                 dea::Rts rts) {
  if (std::find(current.begin(), current.end(), candidate) == current.end()) {
    throw Error(ErrorKind::Input, "ECM candidate is not among the current inputs", candidate);
  }
  if (current.size() < 2) throw Error(ErrorKind::Input, "ECM cannot drop the only remaining input");
  const auto full = dea::radial_output_scores(data, current, rts);
  const auto reduced = dea::radial_output_scores(data, without(current, candidate), rts);
  return ratio(reduced, full);
}

EcmTest ecm_binomial_test(const Vector& gamma, const EcmParams& params) {
  params.validate();
  EcmTest t;
  for (double g : gamma) {
    if (!std::isfinite(g)) continue;
    ++t.trials;
    if (g > params.gamma_bar) ++t.count;
  }
  if (t.trials == 0) throw Error(ErrorKind::Undecidable, "ECM test: every efficiency ratio is missing");
  if (t.count == 0) {
    t.p_value = 1.0;
  } else {
    const boost::math::binomial dist(static_cast<double>(t.trials), params.p0);
    t.p_value = boost::math::cdf(boost::math::complement(dist, static_cast<double>(t.count - 1)));
  }
  t.significant = t.p_value <= params.alpha;
  return t;
}

SelectionResult ecm_backward_select(const dea::DataSet& data, std::span<const std::size_t> candidates,
                                    const EcmParams& params) {
  params.validate();
  check_candidates(data, candidates);
  SelectionResult out;
  out.method = Method::ECM;
  dea::IndexSet current(candidates.begin(), candidates.end());

  while (current.size() > 1) {
    const auto full = dea::radial_output_scores(data, current, params.rts);
    out.solver_failures += full.failures();

    // (T, mean gamma, position) of the weakest non-significant input.
    std::tuple<std::size_t, double, std::size_t> weakest{0, 0.0, 0};
    bool found = false;
    for (std::size_t pos = 0; pos < current.size(); ++pos) {
      const auto reduced = dea::radial_output_scores(data, without(current, current[pos]), params.rts);
      out.solver_failures += reduced.failures();
      const Vector gamma = ratio(reduced, full);
      EcmTest test;
      try {
        test = ecm_binomial_test(gamma, params);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Undecidable) throw;
        out.warnings.push_back("ECM: input " + std::to_string(current[pos]) + " undecidable, kept");
        continue;
      }
      if (test.significant) continue;
      const std::tuple<std::size_t, double, std::size_t> key{test.count, finite_mean(gamma), current[pos]};
      if (!found || key < weakest) {
        weakest = key;
        found = true;
      }
    }
    if (!found) break;
    current = without(current, std::get<2>(weakest));
  }

  std::sort(current.begin(), current.end());
  out.selected = std::move(current);
  return out;
}

namespace {

bool full_column_rank(const numlin::Matrix& design) {
  Eigen::ColPivHouseholderQR<numlin::Matrix> qr(design);
  qr.setThreshold(1e-10);
  return qr.rank() == design.cols();
}

}  // namespace

SelectionResult rb_select(const dea::DataSet& data, std::span<const std::size_t> candidates, const RbParams& params) {
  params.validate();
  check_candidates(data, candidates);
  if (params.seed_input >= data.inputs()) throw Error(ErrorKind::Input, "RB seed input out of range", params.seed_input);
  if (data.dmus() <= candidates.size() + 2) {
    throw Error(ErrorKind::Input, "RB needs more DMUs than candidates plus two");
  }

  SelectionResult out;
  out.method = Method::RB;
  dea::IndexSet included{params.seed_input};
  dea::IndexSet pending = without(candidates, params.seed_input);
  const double p_max = 1.0 - params.confidence;
  const auto n = static_cast<Eigen::Index>(data.dmus());

  while (!pending.empty()) {
    const auto scores = dea::radial_output_scores(data, included, params.rts);
    out.solver_failures += scores.failures();

    std::vector<Eigen::Index> rows;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (std::isfinite(scores.scores(k))) rows.push_back(k);
    }
    const auto used = static_cast<Eigen::Index>(rows.size());
    Vector E(used);
    for (Eigen::Index r = 0; r < used; ++r) E(r) = 1.0 / scores.scores(rows[r]);

    // Intercept first, then each pending candidate that keeps full rank.
    numlin::Matrix design = numlin::Matrix::Ones(used, 1);
    dea::IndexSet tested;
    for (auto c : pending) {
      numlin::Matrix trial(used, design.cols() + 1);
      trial.leftCols(design.cols()) = design;
      for (Eigen::Index r = 0; r < used; ++r) trial(r, design.cols()) = data.X(static_cast<Eigen::Index>(c), rows[r]);
      if (!full_column_rank(trial)) {
        out.warnings.push_back("RB: input " + std::to_string(c) + " skipped (rank deficient design)");
        continue;
      }
      design = std::move(trial);
      tested.push_back(c);
    }
    if (tested.empty() || used <= design.cols()) break;

    const auto fit = numlin::ols_regress(design, E);
    dea::IndexSet added;
    for (std::size_t j = 0; j < tested.size(); ++j) {
      const auto col = static_cast<Eigen::Index>(j + 1);
      if (fit.coefficients(col) > 0.0 && fit.p_value_positive(col) <= p_max) added.push_back(tested[j]);
    }
    if (added.empty()) break;
    for (auto c : added) {
      included.push_back(c);
      pending = without(pending, c);
    }
  }

  std::sort(included.begin(), included.end());
  out.selected = std::move(included);
  return out;
}

}  // namespace deasel::bench
