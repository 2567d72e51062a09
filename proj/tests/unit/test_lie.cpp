#include <doctest.h>

#include <vector>

#include <cmath>
#include <numbers>
#include <random>

#include "pixgbp/lie.hpp"
#include "test_support.hpp"

using namespace pixgbp;
using namespace pixgbp::testing;

namespace {

// Closed-form right Jacobian in extended precision, used as an oracle at the
// branch switchovers.
Eigen::Matrix3d right_jacobian_reference(const Tangent& tau) {
  const long double theta = std::sqrt(static_cast<long double>(tau.squaredNorm()));
  const long double a = (1.0L - std::cos(theta)) / (theta * theta);
  const long double b = (theta - std::sin(theta)) / (theta * theta * theta);
  const Eigen::Matrix3d w = skew(tau);
  return Eigen::Matrix3d::Identity() - static_cast<double>(a) * w + static_cast<double>(b) * w * w;
}

}  // namespace

TEST_SUITE("lie") {

TEST_CASE("exp of zero is the identity") {
  CHECK(exp_map(Tangent::Zero()).matrix() == Eigen::Matrix3d::Identity());
  CHECK(oplus(Rotation(), Tangent::Zero()).matrix() == Eigen::Matrix3d::Identity());
}

TEST_CASE("quarter turn about x maps y to z and z to -y") {
  const Rotation r = exp_map(Tangent(std::numbers::pi / 2, 0, 0));
  CHECK(max_abs(r * Eigen::Vector3d::UnitY() - Eigen::Vector3d::UnitZ()) < 1e-15);
  CHECK(max_abs(r * Eigen::Vector3d::UnitZ() + Eigen::Vector3d::UnitY()) < 1e-15);
  CHECK(max_abs(log_map(r) - Tangent(std::numbers::pi / 2, 0, 0)) < 1e-15);
}

TEST_CASE("log of the identity is zero") { CHECK(log_map(Rotation()).isZero(0.0)); }

TEST_CASE("exp and log are inverse for random tangents") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const Tangent tau = random_tangent(rng, std::numbers::pi - 1e-6);
    const Rotation r = exp_map(tau);
    CHECK(r.orthonormality_error() < 1e-12);
    CHECK(max_abs(log_map(r) - tau) < 1e-9);
    CHECK(max_abs(exp_map(log_map(r)).matrix() - r.matrix()) < 1e-9);
    CHECK(max_abs((exp_map(tau) * exp_map(-tau)).matrix() - Eigen::Matrix3d::Identity()) < 1e-14);
  }
}

TEST_CASE("exp and log are inverse across every angle regime") {
  std::mt19937_64 rng(12);
  for (double theta : {1e-12, 3e-7, 9.9e-7, 1.01e-6, 5e-4, 9.99e-3, 1.001e-2, 0.3, 3.0, 3.14159}) {
    for (int i = 0; i < 20; ++i) {
      Tangent tau = random_tangent(rng, 1.0).normalized() * theta;
      CHECK(relative_error(log_map(exp_map(tau)), tau) < 1e-9);
    }
  }
}

TEST_CASE("log of a tiny rotation follows the series branch") {
  const Eigen::Vector3d axis = Eigen::Vector3d(1, -2, 0.5).normalized();
  const Tangent tau = 1e-9 * axis;
  const Tangent got = log_map(exp_map(tau));
  CHECK(max_abs(got - tau) < 1e-20);
  // Either side of the series switchover agrees with the exact branch.
  for (double theta : {0.999e-6, 1.001e-6}) {
    const Tangent t = theta * axis;
    CHECK(relative_error(log_map(exp_map(t)), t) < 1e-12);
  }
}

TEST_CASE("log at half a turn returns a valid axis") {
  const std::vector<Eigen::Vector3d> axes{Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY(),
                                         Eigen::Vector3d(1, 1, 1).normalized()};
  for (const Eigen::Vector3d& axis : axes) {
    const Rotation r = exp_map(std::numbers::pi * axis);
    const Tangent got = log_map(r);
    CHECK(std::abs(got.norm() - std::numbers::pi) < 1e-9);
    CHECK(max_abs(exp_map(got).matrix() - r.matrix()) < 1e-9);
  }
}

TEST_CASE("right Jacobian at zero is the identity") {
  CHECK(right_jacobian(Tangent::Zero()) == Eigen::Matrix3d::Identity());
  CHECK(right_jacobian_inv(Tangent::Zero()) == Eigen::Matrix3d::Identity());
}

TEST_CASE("right Jacobian small-angle expansion") {
  std::mt19937_64 rng(13);
  for (double theta : {1e-8, 1e-5, 1e-3}) {
    const Tangent tau = random_tangent(rng, 1.0).normalized() * theta;
    const Eigen::Matrix3d first_order = Eigen::Matrix3d::Identity() - 0.5 * skew(tau);
    CHECK(max_abs(right_jacobian(tau) - first_order) <= theta * theta / 6.0 + 1e-16);
  }
}

TEST_CASE("right Jacobian is continuous at the series switchovers") {
  std::mt19937_64 rng(14);
  for (double theta : {0.999e-6, 1.001e-6, 0.999e-2, 1.001e-2, 0.5}) {
    const Tangent tau = random_tangent(rng, 1.0).normalized() * theta;
    CHECK(max_abs(right_jacobian(tau) - right_jacobian_reference(tau)) < 1e-12);
  }
}

TEST_CASE("right Jacobian times its inverse is the identity") {
  std::mt19937_64 rng(15);
  for (int i = 0; i < 500; ++i) {
    const Tangent tau = random_tangent(rng, 3.0);
    CHECK(max_abs(right_jacobian(tau) * right_jacobian_inv(tau) - Eigen::Matrix3d::Identity()) < 1e-10);
  }
  for (double theta : {1e-9, 5e-7, 2e-6, 5e-3, 2e-2}) {
    const Tangent tau = random_tangent(rng, 1.0).normalized() * theta;
    CHECK(max_abs(right_jacobian(tau) * right_jacobian_inv(tau) - Eigen::Matrix3d::Identity()) < 1e-10);
  }
}

TEST_CASE("right Jacobian matches finite differences") {
  std::mt19937_64 rng(16);
  for (int i = 0; i < 200; ++i) {
    const Tangent tau = random_tangent(rng, 2.5);
    const Rotation base = exp_map(tau);
    const Eigen::Matrix3d numeric = central_difference<3>(
        [&](const Tangent& d) -> Eigen::Vector3d { return ominus(exp_map(tau + d), base); }, 1e-6);
    CHECK(relative_error(right_jacobian(tau), numeric) < 1e-5);
    // The inverse maps a perturbation of the result back onto the argument.
    const Eigen::Matrix3d numeric_inv = central_difference<3>(
        [&](const Tangent& d) -> Eigen::Vector3d { return log_map(oplus(base, d)) - tau; }, 1e-6);
    CHECK(relative_error(right_jacobian_inv(tau), numeric_inv) < 1e-5);
  }
}

TEST_CASE("oplus and ominus are inverse") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 500; ++i) {
    const Rotation r = random_rotation(rng);
    const Rotation q = random_rotation(rng);
    CHECK(max_abs(oplus(r, ominus(q, r)).matrix() - q.matrix()) < 1e-9);
    const Tangent tau = random_tangent(rng, std::numbers::pi - 1e-6);
    CHECK(max_abs(ominus(oplus(r, tau), r) - tau) < 1e-9);
    CHECK(ominus(r, r).isZero(1e-15));
  }
}

TEST_CASE("geodesic distance") {
  std::mt19937_64 rng(18);
  CHECK(std::abs(geodesic_distance(Rotation(), exp_map(Tangent(0.01, 0, 0))) - 0.01) < 1e-15);
  for (int i = 0; i < 500; ++i) {
    const Rotation a = random_rotation(rng);
    const Rotation b = random_rotation(rng);
    const Rotation c = random_rotation(rng);
    CHECK(geodesic_distance(a, a) < 1e-12);
    CHECK(std::abs(geodesic_distance(a, b) - geodesic_distance(b, a)) < 1e-12);
    CHECK(std::abs(geodesic_distance(a, b) - ominus(b, a).norm()) < 1e-15);
    CHECK(geodesic_distance(a, c) <= geodesic_distance(a, b) + geodesic_distance(b, c) + 1e-12);
  }
}

TEST_CASE("matrix projection and quaternions") {
  std::mt19937_64 rng(19);
  const Rotation r = random_rotation(rng);
  Eigen::Matrix3d noisy = r.matrix();
  noisy(0, 1) += 1e-4;
  CHECK(Rotation::from_matrix(noisy).orthonormality_error() < 1e-12);
  CHECK(geodesic_distance(Rotation::from_matrix(noisy), r) < 1e-4);
  const Eigen::Vector4d q = r.quaternion();
  CHECK(q(0) >= 0.0);
  CHECK(max_abs(Rotation::from_quaternion(q(0), q(1), q(2), q(3)).matrix() - r.matrix()) < 1e-12);
}

}
