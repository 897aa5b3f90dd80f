// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include "dea.hpp"
#include "error.hpp"

#include <doctest.h>

#include <random>

namespace testing {

using deasel::dea::DataSet;
using deasel::numlin::Matrix;
using deasel::numlin::Vector;

inline Matrix uniform_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix M(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) M(i, j) = dist(rng);
  return M;
}

inline DataSet random_panel(std::mt19937_64& rng, Eigen::Index m, Eigen::Index s, Eigen::Index n) {
  return DataSet::make(uniform_matrix(rng, m, n, 1.0, 10.0), uniform_matrix(rng, s, n, 1.0, 10.0));
}

template <class F>
deasel::ErrorKind error_kind(F&& f) {
  try {
    f();
  } catch (const deasel::Error& e) {
    return e.kind();
  }
  FAIL("expected deasel::Error");
  return deasel::ErrorKind::Contract;
}

}  // namespace testing
