// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace deasel {

enum class Method { GL, ECM, RB };

const char* to_string(Method method);

/// Outcome of a variable-selection method. Indices refer to input rows of
/// the DataSet the method was run on.
struct SelectionResult {
  Method method = Method::GL;
  std::vector<std::size_t> selected;
  /// GL only: l2 norm of each input's weight group.
  std::vector<double> group_norms;
  double lambda = 0.0;

  bool converged = true;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  /// Per-DMU LP failures encountered while scoring (ECM, RB).
  std::size_t solver_failures = 0;
  std::vector<std::string> warnings;
};

}  // namespace deasel
