// Licensed under the Apache License 2.0 (see LICENSE file).

#include "datagen.hpp"
#include "dea.hpp"
#include "support.hpp"

#include <cmath>

using namespace deasel;
using namespace deasel::dea;
using numlin::LpProblem;
using numlin::LpStatus;
using numlin::ObjectiveSense;
using numlin::RowSense;
using numlin::Matrix;
using numlin::Vector;
using testing::error_kind;

namespace {

DataSet panel(std::initializer_list<double> x, std::initializer_list<double> y) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Matrix X(1, n), Y(1, n);
  Eigen::Index k = 0;
  for (double v : x) X(0, k++) = v;
  k = 0;
  for (double v : y) Y(0, k++) = v;
  return DataSet::make(X, Y);
}

// Output-oriented CCR through the multiplier form: theta_k = min v'x_k
// subject to u'y_k = 1 and v'x_j - u'y_j >= 0 for every j.
double ccr_multiplier_oracle(const DataSet& d, std::size_t k) {
  const auto m = d.X.rows(), s = d.Y.rows(), n = d.X.cols();
  LpProblem lp = LpProblem::with_variables(m + s, ObjectiveSense::Minimize);
  lp.cost.head(m) = d.X.col(static_cast<Eigen::Index>(k));
  Vector norm = Vector::Zero(m + s);
  norm.tail(s) = d.Y.col(static_cast<Eigen::Index>(k));
  lp.add_row(norm, RowSense::Equal, 1.0);
  for (Eigen::Index j = 0; j < n; ++j) {
    Vector row(m + s);
    row << d.X.col(j), -d.Y.col(j);
    lp.add_row(row, RowSense::GreaterEqual, 0.0);
  }
  const auto sol = numlin::solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  return sol.objective;
}

// Additive primal: min v'x_k - u'y_k + w s.t. v'x_j - u'y_j + w >= 0,
// v, u >= 1, w free (fixed at 0 for CRS).
double additive_primal_oracle(const DataSet& d, std::size_t k, Rts rts) {
  const auto m = d.X.rows(), s = d.Y.rows(), n = d.X.cols();
  LpProblem lp = LpProblem::with_variables(m + s + 1, ObjectiveSense::Minimize);
  lp.cost << d.X.col(static_cast<Eigen::Index>(k)), -d.Y.col(static_cast<Eigen::Index>(k)), 1.0;
  lp.lower.head(m + s).setOnes();
  lp.lower(m + s) = rts == Rts::VRS ? -numlin::kInf : 0.0;
  lp.upper(m + s) = rts == Rts::VRS ? numlin::kInf : 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    Vector row(m + s + 1);
    row << d.X.col(j), -d.Y.col(j), 1.0;
    lp.add_row(row, RowSense::GreaterEqual, 0.0);
  }
  const auto sol = numlin::solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  return sol.objective;
}

}  // namespace

TEST_SUITE_BEGIN("dea_core");

TEST_CASE("DataSet validation") {
  CHECK(error_kind([] { DataSet::make(Matrix::Ones(1, 2), Matrix::Ones(1, 3)); }) == ErrorKind::Input);
  CHECK(error_kind([] { DataSet::make(Matrix::Zero(1, 2), Matrix::Ones(1, 2)); }) == ErrorKind::Input);
  CHECK(error_kind([] { DataSet::make(Matrix::Ones(2, 2), Matrix::Ones(1, 2), {"a"}); }) == ErrorKind::Input);
  const auto d = DataSet::make(Matrix::Ones(2, 3), Matrix::Ones(1, 3));
  CHECK(d.input_labels == std::vector<std::string>{"x1", "x2"});
  CHECK(d.output_labels == std::vector<std::string>{"y1"});
  CHECK(error_kind([&] { ccr_output_scores(d, IndexSet{}); }) == ErrorKind::Input);
  CHECK(error_kind([&] { ccr_output_scores(d, IndexSet{2}); }) == ErrorKind::Input);
}

TEST_CASE("DataSet::normalized divides rows by their means") {
  Matrix X(1, 3), Y(1, 3);
  X << 1, 2, 3;
  Y << 4, 4, 4;
  const auto d = DataSet::make(X, Y).normalized();
  CHECK(d.X(0, 0) == doctest::Approx(0.5));
  CHECK(d.X(0, 2) == doctest::Approx(1.5));
  CHECK(d.Y(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("CCR: single-ratio example and singleton") {
  const auto d = panel({1, 1}, {1, 0.5});
  const auto r = ccr_output_scores(d, d.all_inputs());
  CHECK(r.scores(0) == doctest::Approx(1.0));
  CHECK(r.scores(1) == doctest::Approx(2.0));
  const auto one = panel({3}, {7});
  CHECK(ccr_output_scores(one, one.all_inputs()).scores(0) == doctest::Approx(1.0));
  CHECK(bcc_output_scores(one, one.all_inputs()).scores(0) == doctest::Approx(1.0));
}

TEST_CASE("CCR matches the multiplier-form oracle on a random 3-input panel") {
  std::mt19937_64 rng(7);
  const auto d = testing::random_panel(rng, 3, 1, 15);
  const auto r = ccr_output_scores(d, d.all_inputs());
  CHECK(r.failures() == 0);
  double worst = 0.0;
  for (std::size_t k = 0; k < d.dmus(); ++k) {
    worst = std::max(worst, std::abs(r.scores(static_cast<Eigen::Index>(k)) - ccr_multiplier_oracle(d, k)));
  }
  CHECK(worst <= 1e-7);
  CHECK(r.scores.minCoeff() >= 1.0 - 1e-9);
  CHECK(r.scores.minCoeff() <= 1.0 + 1e-6);
}

TEST_CASE("BCC: two-point hull example") {
  const auto d = panel({1, 2}, {1, 1.5});
  const auto bcc = bcc_output_scores(d, d.all_inputs());
  const auto ccr = ccr_output_scores(d, d.all_inputs());
  CHECK(bcc.scores(0) == doctest::Approx(1.0));
  CHECK(bcc.scores(1) == doctest::Approx(1.0));
  CHECK(ccr.scores(1) == doctest::Approx(4.0 / 3.0));
  CHECK(radial_output_scores(d, d.all_inputs(), Rts::VRS).scores(1) == doctest::Approx(1.0));
}

TEST_CASE("BCC never exceeds CCR on 20 random panels") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 20; ++t) {
    const auto d = testing::random_panel(rng, 1 + t % 3, 1 + t % 2, 12);
    const auto ccr = ccr_output_scores(d, d.all_inputs());
    const auto bcc = bcc_output_scores(d, d.all_inputs());
    CHECK((bcc.scores - ccr.scores).maxCoeff() <= 1e-9);
    CHECK(bcc.scores.minCoeff() >= 1.0 - 1e-9);
  }
}

TEST_CASE("Additive: examples") {
  const auto d = panel({1, 1}, {2, 1});
  const auto r = additive_scores(d, d.all_inputs(), Rts::VRS);
  CHECK(r.scores(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.scores(1) == doctest::Approx(1.0));

  const auto twins = DataSet::make(Matrix::Constant(2, 4, 3.0), Matrix::Constant(1, 4, 2.0));
  for (Rts rts : {Rts::CRS, Rts::VRS}) {
    CHECK(additive_scores(twins, twins.all_inputs(), rts).scores.cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("Additive scores equal the primal multiplier LP (duality)") {
  std::mt19937_64 rng(23);
  for (Rts rts : {Rts::VRS, Rts::CRS}) {
    const auto d = testing::random_panel(rng, 2, 2, 10);
    const auto r = additive_scores(d, d.all_inputs(), rts);
    for (std::size_t k = 0; k < d.dmus(); ++k) {
      CHECK(std::abs(r.scores(static_cast<Eigen::Index>(k)) - additive_primal_oracle(d, k, rts)) <= 1e-7);
    }
    CHECK(r.scores.minCoeff() >= -1e-9);
    if (rts == Rts::VRS) CHECK(r.scores.minCoeff() <= 1e-9);
  }
}

TEST_CASE("Radial scores are invariant to input units") {
  std::mt19937_64 rng(31);
  const auto d = testing::random_panel(rng, 3, 1, 20);
  auto scaled = d;
  scaled.X.row(1) *= 37.5;
  for (Rts rts : {Rts::CRS, Rts::VRS}) {
    const auto a = radial_output_scores(d, d.all_inputs(), rts);
    const auto b = radial_output_scores(scaled, scaled.all_inputs(), rts);
    CHECK((a.scores - b.scores).cwiseAbs().maxCoeff() <= 1e-7);
  }
}

TEST_CASE("Removing an input weakly raises every radial score") {
  std::mt19937_64 rng(37);
  for (int t = 0; t < 10; ++t) {
    const auto d = testing::random_panel(rng, 3, 1, 15);
    for (Rts rts : {Rts::CRS, Rts::VRS}) {
      const auto full = radial_output_scores(d, d.all_inputs(), rts);
      const auto fewer = radial_output_scores(d, IndexSet{0, 2}, rts);
      CHECK((full.scores - fewer.scores).maxCoeff() <= 1e-9);
    }
  }
}

TEST_CASE("Noise-free CRS Cobb-Douglas panels lie on the CCR frontier") {
  auto sc = datagen::builtin_scenario(1, Rts::CRS);
  sc.sigma = 0.0;
  sc.irrelevant = 0;
  sc.n = 40;
  const auto [d, truth] = datagen::generate_scenario(sc, 99);
  const auto r = ccr_output_scores(d, truth.true_inputs);
  CHECK(r.scores.maxCoeff() <= 1.0 + 1e-6);
}

TEST_CASE("efficient_set") {
  EfficiencyResult r;
  r.kind = ModelKind::CCR;
  r.scores = (Vector(3) << 1.0, 1.0000005, 1.2).finished();
  r.status.assign(3, DmuStatus::Optimal);
  CHECK(efficient_set(r, 1e-6) == std::vector<bool>{true, true, false});
  r.scores = Vector::Ones(3);
  CHECK(efficient_set(r) == std::vector<bool>{true, true, true});
  r.status[1] = DmuStatus::Failed;
  r.scores(1) = std::nan("");
  CHECK(efficient_set(r) == std::vector<bool>{true, false, true});

  EfficiencyResult z;
  z.kind = ModelKind::Additive;
  z.scores = (Vector(2) << 0.0, 0.3).finished();
  z.status.assign(2, DmuStatus::Optimal);
  CHECK(efficient_set(z, 1e-6) == std::vector<bool>{true, false});
}

TEST_SUITE_END();
