#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "pixgbp/error.hpp"
#include "pixgbp/lie.hpp"

namespace pixgbp {

/// Gaussian in information form N⁻¹(η, Λ) with η = Λμ and Λ = Σ⁻¹.
/// Λ may be singular; a zero Λ is the multiplicative identity.
template <int N = Eigen::Dynamic>
struct CanonicalGaussian {
  using Vector = Eigen::Matrix<double, N, 1>;
  using Matrix = Eigen::Matrix<double, N, N>;

  Vector eta;
  Matrix lambda;

  CanonicalGaussian() : CanonicalGaussian(zero(N == Eigen::Dynamic ? 0 : N)) {}
  CanonicalGaussian(Vector e, Matrix l) : eta(std::move(e)), lambda(std::move(l)) {}

  static CanonicalGaussian zero(int dim = N) {
    return CanonicalGaussian(Vector::Zero(dim), Matrix::Zero(dim, dim));
  }

  int dim() const { return static_cast<int>(eta.size()); }
  bool is_zero() const { return eta.isZero(0.0) && lambda.isZero(0.0); }

  void symmetrize() { lambda = (0.5 * (lambda + lambda.transpose())).eval(); }
};

template <int N = Eigen::Dynamic>
struct MomentGaussian {
  using Vector = Eigen::Matrix<double, N, 1>;
  using Matrix = Eigen::Matrix<double, N, N>;

  Vector mu;
  Matrix sigma;
};

using Gaussian3 = CanonicalGaussian<3>;

template <int N>
CanonicalGaussian<N> product(const CanonicalGaussian<N>& a, const CanonicalGaussian<N>& b) {
  if (a.dim() != b.dim()) {
    throw DimensionError("product of Gaussians with dimensions " + std::to_string(a.dim()) + " and " +
                         std::to_string(b.dim()));
  }
  return CanonicalGaussian<N>(a.eta + b.eta, a.lambda + b.lambda);
}

template <int N>
CanonicalGaussian<N>& operator*=(CanonicalGaussian<N>& a, const CanonicalGaussian<N>& b) {
  if (a.dim() != b.dim()) throw DimensionError("product of Gaussians with mismatched dimensions");
  a.eta += b.eta;
  a.lambda += b.lambda;
  return a;
}

/// Inverse of a symmetric 3x3 matrix if it is positive definite (Sylvester's
/// criterion), via the adjugate.
std::optional<Eigen::Matrix3d> inverse_if_pd(const Eigen::Matrix3d& m);

/// Schur-complement elimination of the `drop` block. Returns nullopt when the
/// eliminated precision block is not positive definite.
template <int K, int D>
std::optional<CanonicalGaussian<K>> eliminate(const Eigen::Matrix<double, K, 1>& eta_keep,
                                              const Eigen::Matrix<double, D, 1>& eta_drop,
                                              const Eigen::Matrix<double, K, K>& lambda_kk,
                                              const Eigen::Matrix<double, K, D>& lambda_kd,
                                              const Eigen::Matrix<double, D, D>& lambda_dd) {
  if (lambda_dd.size() == 0) return CanonicalGaussian<K>(eta_keep, lambda_kk);
  // gain = Λ_dd⁻¹ Λ_dk
  Eigen::Matrix<double, D, K> gain;
  if constexpr (D == 3) {
    const auto inv = inverse_if_pd(lambda_dd);
    if (!inv) return std::nullopt;
    gain = *inv * lambda_kd.transpose();
  } else {
    Eigen::LLT<Eigen::Matrix<double, D, D>> llt(lambda_dd);
    if (llt.info() != Eigen::Success) return std::nullopt;
    gain = llt.solve(lambda_kd.transpose());
  }
  CanonicalGaussian<K> out(eta_keep - gain.transpose() * eta_drop, lambda_kk - lambda_kd * gain);
  out.symmetrize();
  return out;
}

/// Marginal over the variables listed in `keep` (in the given order).
CanonicalGaussian<> marginalize(const CanonicalGaussian<>& joint, const std::vector<int>& keep);

template <int N>
MomentGaussian<N> to_moments(const CanonicalGaussian<N>& g) {
  Eigen::LLT<typename CanonicalGaussian<N>::Matrix> llt(g.lambda);
  if (llt.info() != Eigen::Success) throw NumericalError("to_moments: precision is not positive definite");
  MomentGaussian<N> m;
  m.sigma = llt.solve(CanonicalGaussian<N>::Matrix::Identity(g.dim(), g.dim()));
  m.sigma = (0.5 * (m.sigma + m.sigma.transpose())).eval();
  m.mu = llt.solve(g.eta);
  return m;
}

template <int N>
CanonicalGaussian<N> from_moments(const MomentGaussian<N>& m) {
  Eigen::LLT<typename MomentGaussian<N>::Matrix> llt(m.sigma);
  if (llt.info() != Eigen::Success) throw NumericalError("from_moments: covariance is not positive definite");
  CanonicalGaussian<N> g(llt.solve(m.mu), llt.solve(MomentGaussian<N>::Matrix::Identity(m.mu.size(), m.mu.size())));
  g.symmetrize();
  return g;
}

/// Mean of a 3-dim canonical Gaussian, or nullopt if Λ is not positive definite.
std::optional<Tangent> mean_of(const Gaussian3& g);

/// A belief or message: Gaussian over the tangent space at `frame`, i.e. the
/// random rotation frame ⊕ ξ with ξ ~ N⁻¹(η, Λ).
struct LieGaussian {
  Rotation frame;
  Gaussian3 gauss = Gaussian3::zero();
};

/// Zero-mean Gaussian at `frame` in moment form (the result of ⊞).
struct LieMoments {
  Rotation frame;
  Eigen::Matrix3d sigma;
};

/// frame ⊞ N(τ, Σ) = (frame ⊕ τ) ⊕ N(0, J_r(τ) Σ J_r(τ)ᵀ).
LieMoments boxplus(const Rotation& frame, const MomentGaussian<3>& g);

/// G ⊟ frame = N(θ, J_r⁻¹(θ) Σ_G J_r⁻ᵀ(θ)) with θ = G.frame ⊖ frame.
MomentGaussian<3> boxminus(const LieMoments& g, const Rotation& frame);

/// Information-form ⊞: moves the frame to the mean. Throws NumericalError when
/// Λ is singular.
LieGaussian boxplus(const LieGaussian& g);

/// Information-form ⊟ about the message's own frame:
/// Λ' = J_r(θ)ᵀ Λ J_r(θ), η' = J_r(θ)ᵀ η + Λ' θ with θ = g.frame ⊖ frame.
/// Never inverts Λ, so rank-deficient messages are transported as well.
Gaussian3 boxminus(const LieGaussian& g, const Rotation& frame);

/// Re-expresses a message at `new_frame`. Messages with a well-defined mean go
/// through ⊞ then ⊟. Rank-deficient ones are transported linearly on (η, Λ),
/// with tangent coordinates related by x = Exp(-θ/2)(y - θ). A→B→A is the
/// identity on both pathways.
LieGaussian reframe(const LieGaussian& msg, const Rotation& new_frame);

/// Transport shared by every message of a variable whose frame moved from F
/// to F ⊕ step.
struct FrameStep {
  explicit FrameStep(const Tangent& step);

  Tangent step;
  Eigen::Matrix3d backward;           // Exp(-step)
  Eigen::Matrix3d half_forward;       // Exp(step / 2)
};

/// Same result as reframe(msg at F, F ⊕ step) without touching F.
Gaussian3 reframe_after_step(const Gaussian3& msg, const FrameStep& step);

/// Convex combination (1 - w)·a + w·b of two same-frame messages.
Gaussian3 blend(const Gaussian3& a, const Gaussian3& b, double w);

}  // namespace pixgbp
