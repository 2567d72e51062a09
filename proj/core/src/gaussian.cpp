#include "pixgbp/gaussian.hpp"

#include <cmath>
#include <numeric>

namespace pixgbp {
namespace {

// Beyond this tangent norm the ⊞-anchored transport is not trusted.
constexpr double kMaxAnchorNorm = 0.5;

Eigen::Matrix3d symmetric(const Eigen::Matrix3d& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

CanonicalGaussian<> marginalize(const CanonicalGaussian<>& joint, const std::vector<int>& keep) {
  const int n = joint.dim();
  std::vector<bool> kept(static_cast<size_t>(n), false);
  for (int k : keep) {
    if (k < 0 || k >= n) throw DimensionError("marginalize: index " + std::to_string(k) + " out of range");
    if (kept[static_cast<size_t>(k)]) throw DimensionError("marginalize: duplicate index " + std::to_string(k));
    kept[static_cast<size_t>(k)] = true;
  }
  std::vector<int> drop;
  for (int i = 0; i < n; ++i) {
    if (!kept[static_cast<size_t>(i)]) drop.push_back(i);
  }
  const auto ka = static_cast<Eigen::Index>(keep.size());
  const auto kb = static_cast<Eigen::Index>(drop.size());
  Eigen::VectorXd eta_a(ka), eta_b(kb);
  Eigen::MatrixXd laa(ka, ka), lab(ka, kb), lbb(kb, kb);
  for (Eigen::Index i = 0; i < ka; ++i) {
    eta_a(i) = joint.eta(keep[i]);
    for (Eigen::Index j = 0; j < ka; ++j) laa(i, j) = joint.lambda(keep[i], keep[j]);
    for (Eigen::Index j = 0; j < kb; ++j) lab(i, j) = joint.lambda(keep[i], drop[j]);
  }
  for (Eigen::Index i = 0; i < kb; ++i) {
    eta_b(i) = joint.eta(drop[i]);
    for (Eigen::Index j = 0; j < kb; ++j) lbb(i, j) = joint.lambda(drop[i], drop[j]);
  }
  auto out = eliminate<Eigen::Dynamic, Eigen::Dynamic>(eta_a, eta_b, laa, lab, lbb);
  if (!out) throw NumericalError("marginalize: eliminated block is not positive definite");
  return *out;
}

std::optional<Eigen::Matrix3d> inverse_if_pd(const Eigen::Matrix3d& m) {
  const double c00 = m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
  const double c01 = m(1, 2) * m(2, 0) - m(1, 0) * m(2, 2);
  const double c02 = m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0);
  const double det = m(0, 0) * c00 + m(0, 1) * c01 + m(0, 2) * c02;
  const double minor2 = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  if (!(m(0, 0) > 0.0) || !(minor2 > 0.0) || !(det > 0.0) || !std::isfinite(det)) return std::nullopt;
  Eigen::Matrix3d inv;
  inv(0, 0) = c00;
  inv(1, 0) = c01;
  inv(2, 0) = c02;
  inv(0, 1) = m(0, 2) * m(2, 1) - m(0, 1) * m(2, 2);
  inv(1, 1) = m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0);
  inv(2, 1) = m(0, 1) * m(2, 0) - m(0, 0) * m(2, 1);
  inv(0, 2) = m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1);
  inv(1, 2) = m(0, 2) * m(1, 0) - m(0, 0) * m(1, 2);
  inv(2, 2) = minor2;
  inv /= det;
  return inv;
}

std::optional<Tangent> mean_of(const Gaussian3& g) {
  const auto inv = inverse_if_pd(g.lambda);
  if (!inv) return std::nullopt;
  return Tangent(*inv * g.eta);
}

LieMoments boxplus(const Rotation& frame, const MomentGaussian<3>& g) {
  const Eigen::Matrix3d jr = right_jacobian(g.mu);
  return {oplus(frame, g.mu), symmetric(jr * g.sigma * jr.transpose())};
}

MomentGaussian<3> boxminus(const LieMoments& g, const Rotation& frame) {
  const Tangent theta = ominus(g.frame, frame);
  const Eigen::Matrix3d jinv = right_jacobian_inv(theta);
  return {theta, symmetric(jinv * g.sigma * jinv.transpose())};
}

LieGaussian boxplus(const LieGaussian& g) {
  const auto tau = mean_of(g.gauss);
  if (!tau) throw NumericalError("boxplus: precision is not positive definite");
  // Σ' = J Σ Jᵀ  ⇔  Λ' = J⁻ᵀ Λ J⁻¹, and J_r(τ)⁻¹ = J_r⁻¹(τ).
  const Eigen::Matrix3d jinv = right_jacobian_inv(*tau);
  return {oplus(g.frame, *tau), Gaussian3(Eigen::Vector3d::Zero(), symmetric(jinv.transpose() * g.gauss.lambda * jinv))};
}

Gaussian3 boxminus(const LieGaussian& g, const Rotation& frame) {
  if (g.gauss.is_zero()) return Gaussian3::zero();
  const Tangent theta = ominus(g.frame, frame);
  const Eigen::Matrix3d jr = right_jacobian(theta);
  Gaussian3 out;
  out.lambda = symmetric(jr.transpose() * g.gauss.lambda * jr);
  out.eta = jr.transpose() * g.gauss.eta + out.lambda * theta;
  return out;
}

namespace {

// Λ' = PᵀΛP, η' = Pᵀη + Λ'θ for tangent coordinates x = P(y - θ).
Gaussian3 transport_linear(const Gaussian3& g, const Tangent& theta, const Eigen::Matrix3d& p) {
  Gaussian3 out;
  out.lambda = symmetric(p.transpose() * g.lambda * p);
  out.eta = p.transpose() * g.eta + out.lambda * theta;
  return out;
}

}  // namespace

LieGaussian reframe(const LieGaussian& msg, const Rotation& new_frame) {
  if (msg.gauss.is_zero()) return {new_frame, Gaussian3::zero()};
  if (msg.frame == new_frame) return msg;
  if (const auto tau = mean_of(msg.gauss); tau && tau->norm() < kMaxAnchorNorm) {
    return {new_frame, boxminus(boxplus(msg), new_frame)};
  }
  const Tangent theta = ominus(msg.frame, new_frame);
  return {new_frame, transport_linear(msg.gauss, theta, exp_map(-0.5 * theta).matrix())};
}

FrameStep::FrameStep(const Tangent& s)
    : step(s), backward(exp_map(-s).matrix()), half_forward(exp_map(0.5 * s).matrix()) {}

Gaussian3 reframe_after_step(const Gaussian3& msg, const FrameStep& step) {
  if (msg.is_zero()) return Gaussian3::zero();
  Gaussian3 out;
  if (const auto inv = inverse_if_pd(msg.lambda)) {
    const Tangent tau = *inv * msg.eta;
    if (tau.norm() < kMaxAnchorNorm) {
      // ⊞ to the message mean, then ⊟ to the new frame.
      const Tangent theta = log_map(Rotation(step.backward * exp_map(tau).matrix()));
      const Eigen::Matrix3d a = right_jacobian_inv(tau) * right_jacobian(theta);
      out.lambda = symmetric(a.transpose() * msg.lambda * a);
      out.eta = out.lambda * theta;
      return out;
    }
  }
  return transport_linear(msg, -step.step, step.half_forward);
}

Gaussian3 blend(const Gaussian3& a, const Gaussian3& b, double w) {
  return Gaussian3((1.0 - w) * a.eta + w * b.eta, (1.0 - w) * a.lambda + w * b.lambda);
}

}  // namespace pixgbp
