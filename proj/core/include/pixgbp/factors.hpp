#pragma once

#include <Eigen/Core>
#include <optional>

#include "pixgbp/imaging.hpp"
#include "pixgbp/lie.hpp"

namespace pixgbp {

/// Isotropic noise scales of the three factor kinds; each factor's residual
/// precision is σ⁻²·I.
struct FactorParams {
  double sigma_p = 1e-2;  // prior, radians
  double sigma_d = 1e-1;  // photometric, intensity units
  double sigma_r = 1e-2;  // regularisation, radians

  /// Throws ConfigError unless all scales are finite and strictly positive.
  void validate() const;

  static FactorParams flat_defaults() { return {1e-2, 1e-1, 1e-2}; }
  static FactorParams sharded_defaults() { return {1e-2, 1e-1, 1e-4}; }
};

/// Read-only image pair seen by every photometric factor.
struct PhotometricScene {
  PhotometricScene(GrayImage left_image, GrayImage right_image, CameraIntrinsics k);

  GrayImage left;
  GrayImage right;
  ImageGradient right_gradient;
  CameraIntrinsics intrinsics;
};

struct PhotometricTerm {
  double residual;
  Eigen::RowVector3d jacobian;
};

/// r = I_l[p] - I_r[W(p; R)] and dr/dτ under R ⊕ τ; nullopt when the warped
/// point leaves the right image or falls behind the camera.
std::optional<PhotometricTerm> photometric_residual(const Eigen::Vector2d& pixel, const Rotation& rotation,
                                                    const PhotometricScene& scene);

struct PriorTerm {
  Eigen::Vector3d residual;
  Eigen::Matrix3d jacobian;
};

/// r = rotation ⊖ anchor.
PriorTerm prior_residual(const Rotation& rotation, const Rotation& anchor);

struct RegularizationTerm {
  Eigen::Vector3d residual;
  Eigen::Matrix3d jacobian_i;
  Eigen::Matrix3d jacobian_j;
};

/// r = rot_j ⊖ rot_i with Jacobians for right perturbations of each argument.
RegularizationTerm regularization_residual(const Rotation& rot_i, const Rotation& rot_j);

}  // namespace pixgbp
