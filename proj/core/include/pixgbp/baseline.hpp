#pragma once

#include <cstddef>
#include <vector>

#include "pixgbp/factors.hpp"
#include "pixgbp/lie.hpp"

namespace pixgbp {

struct PhotometricEnergy {
  double energy = 0.0;  // ½ Σ r²
  Eigen::Vector3d gradient = Eigen::Vector3d::Zero();  // Σ Jᵀ r
  std::size_t valid_pixels = 0;
};

/// Whole-image energy and its gradient with respect to a right perturbation.
PhotometricEnergy photometric_energy(const PhotometricScene& scene, const Rotation& rotation);

struct CentralizedOptions {
  /// Calibrated on 64x64, 60° fov scenes from the procedural panorama.
  double step_size = 1.5e-5;
  int iterations = 300;
};

struct CentralizedResult {
  std::vector<Rotation> estimates;  // after each iteration
  std::vector<double> energies;     // at the estimate each iteration started from
};

/// Fixed-step gradient descent μ ← μ ⊕ (−α·g). Throws NumericalError if every
/// pixel warps out of the image.
CentralizedResult solve_centralized(const PhotometricScene& scene, const Rotation& init,
                                    const CentralizedOptions& options);

}  // namespace pixgbp
