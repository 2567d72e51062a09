#include "pixgbp/baseline.hpp"

#include "pixgbp/error.hpp"

namespace pixgbp {

PhotometricEnergy photometric_energy(const PhotometricScene& scene, const Rotation& rotation) {
  PhotometricEnergy out;
  for (int y = 0; y < scene.left.height(); ++y) {
    for (int x = 0; x < scene.left.width(); ++x) {
      const auto term = photometric_residual(Eigen::Vector2d(x, y), rotation, scene);
      if (!term) continue;
      out.energy += 0.5 * term->residual * term->residual;
      out.gradient += term->jacobian.transpose() * term->residual;
      ++out.valid_pixels;
    }
  }
  return out;
}

CentralizedResult solve_centralized(const PhotometricScene& scene, const Rotation& init,
                                    const CentralizedOptions& options) {
  CentralizedResult result;
  result.estimates.reserve(static_cast<size_t>(options.iterations));
  result.energies.reserve(static_cast<size_t>(options.iterations));
  Rotation estimate = init;
  for (int it = 0; it < options.iterations; ++it) {
    const PhotometricEnergy e = photometric_energy(scene, estimate);
    if (e.valid_pixels == 0) {
      throw NumericalError("centralized solver: every pixel warps outside the right image at iteration " +
                           std::to_string(it));
    }
    estimate = oplus(estimate, -options.step_size * e.gradient);
    result.energies.push_back(e.energy);
    result.estimates.push_back(estimate);
  }
  return result;
}

}  // namespace pixgbp
