#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "pixgbp/factors.hpp"
#include "pixgbp/graph.hpp"
#include "pixgbp/imaging.hpp"
#include "pixgbp/lie.hpp"

namespace pixgbp::testing {

inline Tangent random_tangent(std::mt19937_64& rng, double max_norm) {
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Tangent axis(n01(rng), n01(rng), n01(rng));
  axis.normalize();
  return axis * (max_norm * u01(rng));
}

inline Rotation random_rotation(std::mt19937_64& rng) {
  return exp_map(random_tangent(rng, std::numbers::pi - 1e-3));
}

inline Eigen::Matrix3d random_spd(std::mt19937_64& rng, double min_eig = 0.5) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::Matrix3d a;
  for (int i = 0; i < 9; ++i) a(i) = n01(rng);
  return a * a.transpose() + min_eig * Eigen::Matrix3d::Identity();
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

/// Relative error |a - b| / max(|b|, floor) in the max norm.
inline double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double floor = 1e-12) {
  return max_abs(a - b) / std::max(max_abs(b), floor);
}

/// Central-difference Jacobian of `f` with respect to its tangent argument at 0.
template <int Rows>
Eigen::Matrix<double, Rows, 3> central_difference(
    const std::function<Eigen::Matrix<double, Rows, 1>(const Tangent&)>& f, double h) {
  Eigen::Matrix<double, Rows, 3> jac;
  for (int k = 0; k < 3; ++k) {
    const Tangent d = Tangent::Unit(k) * h;
    jac.col(k) = (f(d) - f(-d)) / (2.0 * h);
  }
  return jac;
}

/// Smooth random texture: a sum of a few random sinusoids, values in [0, 1].
inline GrayImage sinusoid_texture(int h, int w, std::mt19937_64& rng, int terms = 6) {
  std::uniform_real_distribution<double> freq(0.05, 0.35), phase(0.0, 2.0 * std::numbers::pi);
  std::vector<std::array<double, 3>> waves;
  for (int t = 0; t < terms; ++t) waves.push_back({freq(rng), freq(rng), phase(rng)});
  GrayImage img(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double v = 0.0;
      for (const auto& [fx, fy, ph] : waves) v += std::sin(fx * x + fy * y + ph);
      img.at(x, y) = 0.5 + 0.5 * v / terms;
    }
  }
  return img;
}

// Gently curved texture: the interpolated central-difference gradient then
// agrees with the derivative of the bilinear interpolant to well below 1e-3.
inline GrayImage gentle_texture(int h, int w, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double gx = 0.002 + 0.002 * u01(rng), gy = 0.002 + 0.002 * u01(rng);
  const double p1 = 6.3 * u01(rng), p2 = 6.3 * u01(rng);
  GrayImage img(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.at(x, y) = 0.3 + gx * x + gy * y + 0.04 * std::sin(0.012 * (x + 0.5 * y) + p1) +
                     0.04 * std::sin(0.01 * (y - 0.3 * x) + p2);
    }
  }
  return img;
}

/// Joint Gaussian over all variables from every factor's potential at the
/// current frames, assembled directly from the residual Jacobians.
struct DenseJoint {
  Eigen::VectorXd eta;
  Eigen::MatrixXd lambda;
};

inline DenseJoint dense_joint(const FactorGraph& g) {
  const auto n = static_cast<Eigen::Index>(3 * g.num_variables());
  DenseJoint joint{Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n)};
  for (const auto& f : g.factors()) {
    const double w = 1.0 / (f.sigma * f.sigma);
    const Eigen::Index a = 3 * f.vars[0];
    if (f.kind == FactorKind::Prior) {
      const Rotation& frame = g.variable(f.vars[0]).frame;
      const PriorTerm t = prior_residual(frame, f.anchor.value_or(frame));
      joint.eta.segment<3>(a) -= w * t.jacobian.transpose() * t.residual;
      joint.lambda.block<3, 3>(a, a) += w * t.jacobian.transpose() * t.jacobian;
    } else if (f.kind == FactorKind::Regularization) {
      const Eigen::Index b = 3 * f.vars[1];
      const RegularizationTerm t = regularization_residual(g.variable(f.vars[0]).frame, g.variable(f.vars[1]).frame);
      joint.eta.segment<3>(a) -= w * t.jacobian_i.transpose() * t.residual;
      joint.eta.segment<3>(b) -= w * t.jacobian_j.transpose() * t.residual;
      joint.lambda.block<3, 3>(a, a) += w * t.jacobian_i.transpose() * t.jacobian_i;
      joint.lambda.block<3, 3>(a, b) += w * t.jacobian_i.transpose() * t.jacobian_j;
      joint.lambda.block<3, 3>(b, a) += w * t.jacobian_j.transpose() * t.jacobian_i;
      joint.lambda.block<3, 3>(b, b) += w * t.jacobian_j.transpose() * t.jacobian_j;
    } else {
      const auto term = photometric_residual(f.pixel, g.variable(f.vars[0]).frame, *g.scene());
      if (!term) continue;
      joint.eta.segment<3>(a) -= w * term->residual * term->jacobian.transpose();
      joint.lambda.block<3, 3>(a, a) += w * term->jacobian.transpose() * term->jacobian;
    }
  }
  return joint;
}

struct DenseMarginals {
  std::vector<Eigen::Vector3d> mean;
  std::vector<Eigen::Matrix3d> cov;
};

inline DenseMarginals dense_marginals(const DenseJoint& joint) {
  const Eigen::Index n = joint.eta.size();
  const Eigen::MatrixXd cov = joint.lambda.ldlt().solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::VectorXd mu = cov * joint.eta;
  DenseMarginals out;
  for (Eigen::Index i = 0; i < n / 3; ++i) {
    out.mean.push_back(mu.segment<3>(3 * i));
    out.cov.push_back(cov.block<3, 3>(3 * i, 3 * i));
  }
  return out;
}

/// Random tree of `n` variables at random frames with anchored priors on a
/// random subset (at least one) and regularisation factors along the edges.
inline FactorGraph random_tree(std::mt19937_64& rng, int n) {
  FactorGraph g;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> scale(0.05, 0.5);
  for (int i = 0; i < n; ++i) g.add_variable(random_rotation(rng));
  for (int i = 1; i < n; ++i) {
    const auto parent = static_cast<VariableId>(std::uniform_int_distribution<int>(0, i - 1)(rng));
    const VariableId child = static_cast<VariableId>(i);
    // Keep neighbouring frames close so the residuals stay in the small-angle regime.
    g.variable(child).frame = oplus(g.variable(parent).frame, random_tangent(rng, 0.3));
    if (u01(rng) < 0.5) {
      g.add_regularization(parent, child, scale(rng));
    } else {
      g.add_regularization(child, parent, scale(rng));
    }
  }
  for (int i = 0; i < n; ++i) {
    if (i == 0 || u01(rng) < 0.4) {
      const auto v = static_cast<VariableId>(i);
      g.add_prior(v, scale(rng), oplus(g.variable(v).frame, random_tangent(rng, 0.2)));
    }
  }
  return g;
}

}  // namespace pixgbp::testing
