#include "pixgbp/metrics.hpp"

#include <Eigen/Cholesky>
#include <stdexcept>

#include "pixgbp/error.hpp"

namespace pixgbp {
namespace {

double magnitude_of(const Rotation& ground_truth) {
  const double m = log_map(ground_truth).norm();
  if (!(m > 0.0)) throw std::invalid_argument("normalised rotational error needs a non-identity ground truth");
  return m;
}

}  // namespace

double normalized_rotational_error(std::span<const Rotation> estimates, const Rotation& ground_truth) {
  if (estimates.empty()) throw std::invalid_argument("normalised rotational error of an empty estimate set");
  const double magnitude = magnitude_of(ground_truth);
  double sum = 0.0;
  for (const auto& r : estimates) sum += geodesic_distance(r, ground_truth);
  return sum / static_cast<double>(estimates.size()) / magnitude;
}

double normalized_rotational_error(const FactorGraph& graph, const Rotation& ground_truth) {
  if (graph.num_variables() == 0) throw std::invalid_argument("normalised rotational error of an empty graph");
  const double magnitude = magnitude_of(ground_truth);
  double sum = 0.0;
  for (const auto& v : graph.variables()) sum += geodesic_distance(v.frame, ground_truth);
  return sum / static_cast<double>(graph.num_variables()) / magnitude;
}

std::vector<double> per_level_error(const FactorGraph& graph, const Rotation& ground_truth) {
  const double magnitude = magnitude_of(ground_truth);
  std::vector<double> sum(static_cast<size_t>(graph.num_levels()), 0.0);
  std::vector<std::size_t> count(sum.size(), 0);
  for (const auto& v : graph.variables()) {
    sum[static_cast<size_t>(v.level)] += geodesic_distance(v.frame, ground_truth);
    ++count[static_cast<size_t>(v.level)];
  }
  for (size_t l = 0; l < sum.size(); ++l) sum[l] = count[l] > 0 ? sum[l] / count[l] / magnitude : 0.0;
  return sum;
}

double mean_uncertainty(const FactorGraph& graph) {
  if (graph.num_variables() == 0) return 0.0;
  double sum = 0.0;
  for (const auto& v : graph.variables()) {
    Eigen::LLT<Eigen::Matrix3d> llt(v.belief.lambda);
    if (llt.info() != Eigen::Success) throw NumericalError("mean_uncertainty: belief is not positive definite");
    sum += llt.solve(Eigen::Matrix3d::Identity()).norm();
  }
  return sum / static_cast<double>(graph.num_variables());
}

}  // namespace pixgbp
