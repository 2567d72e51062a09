#pragma once

#include <Eigen/Core>

namespace pixgbp {

/// Axis-angle vector in so(3), radians.
using Tangent = Eigen::Vector3d;

/// Element of SO(3) stored as an orthonormal 3x3 matrix.
class Rotation {
 public:
  Rotation() : matrix_(Eigen::Matrix3d::Identity()) {}

  /// Wraps `m` without re-orthonormalising; use `from_matrix` for noisy input.
  explicit Rotation(const Eigen::Matrix3d& m) : matrix_(m) {}

  /// Projects an arbitrary matrix onto the closest rotation (SVD).
  static Rotation from_matrix(const Eigen::Matrix3d& m);
  static Rotation from_quaternion(double w, double x, double y, double z);
  static Rotation identity() { return Rotation(); }

  const Eigen::Matrix3d& matrix() const { return matrix_; }
  Rotation inverse() const { return Rotation(matrix_.transpose()); }

  /// (w, x, y, z) with w >= 0.
  Eigen::Vector4d quaternion() const;

  Rotation operator*(const Rotation& other) const { return Rotation(matrix_ * other.matrix_); }
  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const { return matrix_ * p; }

  bool operator==(const Rotation& other) const { return matrix_ == other.matrix_; }

  /// Max deviation of RᵀR from I and of det(R) from 1.
  double orthonormality_error() const;

 private:
  Eigen::Matrix3d matrix_;
};

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

Rotation exp_map(const Tangent& tau);
Tangent log_map(const Rotation& r);

/// Right Jacobian of SO(3): Exp(τ + δ) ≈ Exp(τ)·Exp(J_r(τ)·δ).
Eigen::Matrix3d right_jacobian(const Tangent& tau);
Eigen::Matrix3d right_jacobian_inv(const Tangent& tau);

/// R·Exp(τ) (right, local-frame perturbation).
inline Rotation oplus(const Rotation& r, const Tangent& tau) { return r * exp_map(tau); }

/// Log(R1⁻¹·R2), the local difference of R2 seen from R1.
inline Tangent ominus(const Rotation& r2, const Rotation& r1) { return log_map(r1.inverse() * r2); }

double geodesic_distance(const Rotation& a, const Rotation& b);

}  // namespace pixgbp
