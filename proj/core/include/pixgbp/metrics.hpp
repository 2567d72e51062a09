#pragma once

#include <span>
#include <vector>

#include "pixgbp/graph.hpp"
#include "pixgbp/lie.hpp"

namespace pixgbp {

/// Mean geodesic distance of the estimates to `ground_truth`, divided by the
/// magnitude of `ground_truth`. Throws std::invalid_argument for an identity
/// ground truth or an empty estimate set.
double normalized_rotational_error(std::span<const Rotation> estimates, const Rotation& ground_truth);

/// Same metric over every variable of the graph.
double normalized_rotational_error(const FactorGraph& graph, const Rotation& ground_truth);

/// One value per level, index 0 = photometric level.
std::vector<double> per_level_error(const FactorGraph& graph, const Rotation& ground_truth);

/// Mean Frobenius norm of the belief covariances. Throws NumericalError if a
/// belief is not positive definite.
double mean_uncertainty(const FactorGraph& graph);

}  // namespace pixgbp
