#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "pixgbp/factors.hpp"
#include "pixgbp/gaussian.hpp"
#include "pixgbp/lie.hpp"

namespace pixgbp {

using VariableId = std::uint32_t;
using FactorId = std::uint32_t;

enum class FactorKind : std::uint8_t { Photometric, Prior, Regularization };

/// Position of a variable among a factor's ordered neighbours.
struct FactorSlot {
  FactorId factor;
  std::uint8_t slot;
};

struct VariableNode {
  Rotation frame;  // current mean and linearisation point
  Gaussian3 belief = Gaussian3::zero();
  std::vector<FactorSlot> factors;
  int level = 0;  // 0 for photometric (pixel) variables
  Eigen::Vector2i pixel{-1, -1};
};

/// Incremental potential N⁻¹(η̄, Λ̄) over the stacked tangent spaces of a
/// factor's neighbours, built at `frames`. Only the leading 3·arity entries are used.
struct LinearizedPotential {
  Eigen::Matrix<double, 6, 1> eta = Eigen::Matrix<double, 6, 1>::Zero();
  Eigen::Matrix<double, 6, 6> lambda = Eigen::Matrix<double, 6, 6>::Zero();
  std::array<Rotation, 2> frames;
  double energy = 0.0;
  bool valid = false;
};

struct FactorNode {
  FactorKind kind = FactorKind::Prior;
  int arity = 1;
  std::array<VariableId, 2> vars{0, 0};
  double sigma = 1.0;
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();  // photometric factors
  std::optional<Rotation> anchor;                   // prior factors; unset = current linearisation point
  LinearizedPotential potential;
  /// Factor-to-variable messages, one per slot, each tagged with the frame the
  /// recipient had when it was expressed.
  std::array<LieGaussian, 2> outgoing;
};

class FactorGraph {
 public:
  VariableId add_variable(const Rotation& frame = Rotation(), int level = 0,
                          const Eigen::Vector2i& pixel = Eigen::Vector2i(-1, -1));
  FactorId add_photometric(VariableId v, const Eigen::Vector2d& pixel, double sigma_d);
  FactorId add_prior(VariableId v, double sigma_p, std::optional<Rotation> anchor = std::nullopt);
  FactorId add_regularization(VariableId i, VariableId j, double sigma_r);

  void set_scene(std::shared_ptr<const PhotometricScene> scene) { scene_ = std::move(scene); }
  const PhotometricScene* scene() const { return scene_.get(); }

  /// Resets every frame, belief and stored message; beliefs become zero-information.
  void reset(const Rotation& frame = Rotation());

  std::size_t num_variables() const { return variables_.size(); }
  std::size_t num_factors() const { return factors_.size(); }
  int num_levels() const { return num_levels_; }

  const VariableNode& variable(VariableId v) const { return variables_[v]; }
  VariableNode& variable(VariableId v) { return variables_[v]; }
  const FactorNode& factor(FactorId f) const { return factors_[f]; }
  FactorNode& factor(FactorId f) { return factors_[f]; }

  const std::vector<VariableNode>& variables() const { return variables_; }
  const std::vector<FactorNode>& factors() const { return factors_; }

  std::size_t count(FactorKind kind) const;

 private:
  FactorId add_factor(FactorNode node);

  std::vector<VariableNode> variables_;
  std::vector<FactorNode> factors_;
  std::shared_ptr<const PhotometricScene> scene_;
  int num_levels_ = 0;
};

/// Potential of factor `f` at the current frames of its neighbours. Photometric
/// factors whose warp leaves the image return an invalid, zero-information potential.
LinearizedPotential linearize_factor(const FactorGraph& graph, FactorId f);

/// Product of the stored messages into `v` from every factor except `f`,
/// expressed at v's frame. Returns the zero-information message if v has no other factor.
LieGaussian variable_to_factor(const FactorGraph& graph, VariableId v, FactorId f);

/// Message from `f` to its neighbour in `slot`, using the potential stored in
/// the factor and on-demand variable-to-factor messages. nullopt when the
/// eliminated block is singular.
std::optional<LieGaussian> factor_to_variable(const FactorGraph& graph, FactorId f, int slot);

struct BeliefUpdate {
  double step_norm = 0.0;  // |τ| of the frame advance
  bool singular = false;   // belief precision was not positive definite
};

/// Fuses the incoming messages of `v`. With `advance_frame` the frame moves to
/// the belief mean and every stored incoming message is re-expressed there.
BeliefUpdate update_belief(FactorGraph& graph, VariableId v, bool advance_frame = true);

struct GbpOptions {
  /// Weight of the previous message when damping; 0 disables damping.
  double damping = 0.0;
  /// false keeps every linearisation point fixed (linear GBP).
  bool advance_frames = true;
  int workers = 1;
};

struct SweepReport {
  int sweep = 0;
  double mean_step_norm = 0.0;  // radians
  double energy = 0.0;          // Σ E_f at the frames the sweep linearised at
  double wall_ms = 0.0;
  std::size_t invalid_factors = 0;
  std::size_t degenerate_messages = 0;
  std::size_t singular_beliefs = 0;
};

/// Synchronous two-step schedule: (A) relinearise every factor and recompute all
/// factor-to-variable messages from the previous sweep's messages, then (B)
/// update every belief and re-express its incoming messages at the new frame.
class GbpSolver {
 public:
  explicit GbpSolver(GbpOptions options = {}) : options_(options) {}

  SweepReport sweep(FactorGraph& graph);
  int sweeps_done() const { return sweeps_; }

 private:
  GbpOptions options_;
  int sweeps_ = 0;
  std::vector<std::array<LieGaussian, 2>> next_;
  std::vector<std::uint8_t> degenerate_;
  std::vector<double> steps_;
  std::vector<std::uint8_t> singular_;
};

/// True if every stored message is tagged with its recipient's current frame.
bool frames_consistent(const FactorGraph& graph);

}  // namespace pixgbp
