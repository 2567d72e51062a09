#include "pixgbp/factors.hpp"

#include <cmath>

#include "pixgbp/error.hpp"

namespace pixgbp {

void FactorParams::validate() const {
  auto ok = [](double s) { return std::isfinite(s) && s > 0.0; };
  if (!ok(sigma_p) || !ok(sigma_d) || !ok(sigma_r)) {
    throw ConfigError("factor noise scales must be finite and strictly positive");
  }
}

PhotometricScene::PhotometricScene(GrayImage left_image, GrayImage right_image, CameraIntrinsics k)
    : left(std::move(left_image)), right(std::move(right_image)), intrinsics(k) {
  if (left.height() != right.height() || left.width() != right.width()) {
    throw DimensionError("left and right images must have the same size");
  }
  right_gradient = gradient_field(right);
}

std::optional<PhotometricTerm> photometric_residual(const Eigen::Vector2d& pixel, const Rotation& rotation,
                                                    const PhotometricScene& scene) {
  const CameraIntrinsics& k = scene.intrinsics;
  const Eigen::Vector3d q = k.unproject(pixel);
  const Eigen::Vector3d dir = rotation * q;
  const auto warped_opt = warp(pixel, rotation, k);
  if (!warped_opt) return std::nullopt;
  const Eigen::Vector2d& warped = *warped_opt;
  const double iz = 1.0 / dir.z();

  const auto left = sample_bilinear(scene.left, pixel);
  const auto right = sample_with_gradient(scene.right, scene.right_gradient, warped);
  if (!left || !right) return std::nullopt;

  // d(K R Exp(τ) q)/dτ = -K R [q]x; with r = I_l - I_r(π(·)) the two minus signs cancel.
  Eigen::Matrix<double, 2, 3> dproj;
  dproj << k.fx * iz, 0.0, -k.fx * dir.x() * iz * iz,
           0.0, k.fy * iz, -k.fy * dir.y() * iz * iz;
  const Eigen::Matrix3d dpoint = rotation.matrix() * skew(q);
  const Eigen::RowVector3d jac = right->gradient.transpose() * dproj * dpoint;
  return PhotometricTerm{*left - right->value, jac};
}

PriorTerm prior_residual(const Rotation& rotation, const Rotation& anchor) {
  const Eigen::Vector3d r = ominus(rotation, anchor);
  return {r, right_jacobian_inv(r)};
}

RegularizationTerm regularization_residual(const Rotation& rot_i, const Rotation& rot_j) {
  const Eigen::Vector3d r = ominus(rot_j, rot_i);
  const Eigen::Matrix3d jinv = right_jacobian_inv(r);
  // J_r⁻¹(-r) = J_r⁻¹(r)ᵀ
  return {r, -jinv.transpose(), jinv};
}

}  // namespace pixgbp
