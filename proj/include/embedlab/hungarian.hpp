#pragma once

#include <vector>

#include "embedlab/types.hpp"

namespace embedlab {

// Exact rectangular assignment (Kuhn-Munkres with potentials): returns, for
// each row of weight (rows <= cols), the column it is matched to, maximizing
// the total weight of the injective assignment.
std::vector<std::size_t> hungarian_max(const MatrixXdRM& weight);

}  // namespace embedlab
