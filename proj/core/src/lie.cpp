#include "pixgbp/lie.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numbers>

namespace pixgbp {
namespace {

// Below this angle exp/log/J_r use their Taylor series.
constexpr double kSeriesAngle = 1e-6;
// Below this angle the trigonometric coefficients are evaluated as truncated
// power series accurate to machine precision.
constexpr double kPolynomialAngle = 1e-2;

// [τ]ₓ² = ττᵀ - |τ|² I
Eigen::Matrix3d square_of_skew(const Eigen::Vector3d& tau, double theta2) {
  Eigen::Matrix3d m = tau * tau.transpose();
  m.diagonal().array() -= theta2;
  return m;
}

Eigen::Vector3d vee(const Eigen::Matrix3d& m) {
  return {m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)};
}

}  // namespace

Rotation Rotation::from_matrix(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  Eigen::Matrix3d r = u * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    u.col(2) = -u.col(2);
    r = u * svd.matrixV().transpose();
  }
  return Rotation(r);
}

Rotation Rotation::from_quaternion(double w, double x, double y, double z) {
  Eigen::Quaterniond q(w, x, y, z);
  q.normalize();
  return Rotation(q.toRotationMatrix());
}

Eigen::Vector4d Rotation::quaternion() const {
  Eigen::Quaterniond q(matrix_);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return {q.w(), q.x(), q.y(), q.z()};
}

double Rotation::orthonormality_error() const {
  const double ortho = (matrix_.transpose() * matrix_ - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return std::max(ortho, std::abs(matrix_.determinant() - 1.0));
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Rotation exp_map(const Tangent& tau) {
  const double theta2 = tau.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Eigen::Matrix3d w = skew(tau);
  const Eigen::Matrix3d w2 = square_of_skew(tau, theta2);
  if (theta < kSeriesAngle) {
    return Rotation(Eigen::Matrix3d::Identity() + w + 0.5 * w2);
  }
  double a = 0.0;
  double b = 0.0;
  if (theta < kPolynomialAngle) {
    a = 1.0 - theta2 / 6.0 * (1.0 - theta2 / 20.0 * (1.0 - theta2 / 42.0));
    b = 0.5 - theta2 / 24.0 * (1.0 - theta2 / 30.0 * (1.0 - theta2 / 56.0));
  } else {
    const double half = std::sin(0.5 * theta);
    a = std::sin(theta) / theta;
    b = 2.0 * half * half / theta2;  // (1 - cos θ) / θ²
  }
  return Rotation(Eigen::Matrix3d::Identity() + a * w + b * w2);
}

Tangent log_map(const Rotation& rot) {
  const Eigen::Matrix3d& r = rot.matrix();
  const Eigen::Vector3d w = 0.5 * vee(r);  // sin θ · axis
  const double s = w.norm();
  const double c = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  if (c > 0.0 && s < kPolynomialAngle) {
    // θ / sin θ as a series in sin θ
    const double s2 = s * s;
    if (s < kSeriesAngle) return (1.0 + s2 / 6.0) * w;
    return (1.0 + s2 * (1.0 / 6.0 + s2 * (3.0 / 40.0 + s2 * (5.0 / 112.0 + s2 * 35.0 / 1152.0)))) * w;
  }
  const double theta = std::atan2(s, c);
  if (s > 1e-6 || c > 0.0) {
    return (theta / s) * w;
  }

  // θ ≈ π: the skew part vanishes, recover the axis from the symmetric part
  // aaᵀ = (R - cos θ I) / (1 - cos θ) using its largest diagonal entry.
  const Eigen::Matrix3d aat = (r - c * Eigen::Matrix3d::Identity()) / (1.0 - c);
  Eigen::Index k = 0;
  aat.diagonal().maxCoeff(&k);
  Eigen::Vector3d axis = aat.col(k) / std::sqrt(std::max(aat(k, k), 0.0));
  axis.normalize();
  // Sign: agree with the residual skew part when there is one, otherwise the
  // component with the largest diagonal entry is kept positive.
  if (axis.dot(w) < 0.0) axis = -axis;
  return theta * axis;
}

Eigen::Matrix3d right_jacobian(const Tangent& tau) {
  const double theta2 = tau.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Eigen::Matrix3d w = skew(tau);
  const Eigen::Matrix3d w2 = square_of_skew(tau, theta2);
  if (theta < kSeriesAngle) {
    return Eigen::Matrix3d::Identity() - 0.5 * w + (1.0 / 6.0) * w2;
  }
  double a = 0.0;
  double b = 0.0;
  if (theta < kPolynomialAngle) {
    a = 0.5 - theta2 / 24.0 * (1.0 - theta2 / 30.0 * (1.0 - theta2 / 56.0));
    b = 1.0 / 6.0 - theta2 / 120.0 * (1.0 - theta2 / 42.0 * (1.0 - theta2 / 72.0));
  } else {
    const double half = std::sin(0.5 * theta);
    a = 2.0 * half * half / theta2;  // (1 - cos θ) / θ²
    b = (theta - std::sin(theta)) / (theta2 * theta);
  }
  return Eigen::Matrix3d::Identity() - a * w + b * w2;
}

Eigen::Matrix3d right_jacobian_inv(const Tangent& tau) {
  const double theta2 = tau.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Eigen::Matrix3d w = skew(tau);
  const Eigen::Matrix3d w2 = square_of_skew(tau, theta2);
  if (theta < kSeriesAngle) {
    return Eigen::Matrix3d::Identity() + 0.5 * w + (1.0 / 12.0) * w2;
  }
  const double b = theta < kPolynomialAngle
                       ? 1.0 / 12.0 + theta2 * (1.0 / 720.0 + theta2 * (1.0 / 30240.0 + theta2 / 1209600.0))
                       : 1.0 / theta2 - std::cos(0.5 * theta) / (2.0 * theta * std::sin(0.5 * theta));
  return Eigen::Matrix3d::Identity() + 0.5 * w + b * w2;
}

double geodesic_distance(const Rotation& a, const Rotation& b) { return ominus(b, a).norm(); }

}  // namespace pixgbp
