#include "pixgbp/graph.hpp"

#include <chrono>
#include <stdexcept>
#include <string>

#include "pixgbp/error.hpp"
#include "pixgbp/parallel.hpp"

namespace pixgbp {
namespace {

FactorNode make_factor(FactorKind kind, int arity, VariableId a, VariableId b, double sigma) {
  FactorNode node;
  node.kind = kind;
  node.arity = arity;
  node.vars = {a, b};
  node.sigma = sigma;
  return node;
}

LieGaussian expressed_at(const LieGaussian& msg, const Rotation& frame) {
  if (msg.frame == frame) return msg;
  return reframe(msg, frame);
}

}  // namespace

VariableId FactorGraph::add_variable(const Rotation& frame, int level, const Eigen::Vector2i& pixel) {
  VariableNode node;
  node.frame = frame;
  node.level = level;
  node.pixel = pixel;
  variables_.push_back(std::move(node));
  num_levels_ = std::max(num_levels_, level + 1);
  return static_cast<VariableId>(variables_.size() - 1);
}

FactorId FactorGraph::add_factor(FactorNode node) {
  if (!(node.sigma > 0.0)) throw ConfigError("factor noise scale must be positive");
  const auto id = static_cast<FactorId>(factors_.size());
  for (int s = 0; s < node.arity; ++s) {
    if (node.vars[s] >= variables_.size()) throw std::out_of_range("factor refers to unknown variable");
    variables_[node.vars[s]].factors.push_back({id, static_cast<std::uint8_t>(s)});
    node.outgoing[s] = {variables_[node.vars[s]].frame, Gaussian3::zero()};
  }
  factors_.push_back(std::move(node));
  return id;
}

FactorId FactorGraph::add_photometric(VariableId v, const Eigen::Vector2d& pixel, double sigma_d) {
  FactorNode node = make_factor(FactorKind::Photometric, 1, v, v, sigma_d);
  node.pixel = pixel;
  return add_factor(std::move(node));
}

FactorId FactorGraph::add_prior(VariableId v, double sigma_p, std::optional<Rotation> anchor) {
  FactorNode node = make_factor(FactorKind::Prior, 1, v, v, sigma_p);
  node.anchor = std::move(anchor);
  return add_factor(std::move(node));
}

FactorId FactorGraph::add_regularization(VariableId i, VariableId j, double sigma_r) {
  if (i == j) throw ConfigError("regularisation factor needs two distinct variables");
  return add_factor(make_factor(FactorKind::Regularization, 2, i, j, sigma_r));
}

void FactorGraph::reset(const Rotation& frame) {
  for (auto& v : variables_) {
    v.frame = frame;
    v.belief = Gaussian3::zero();
  }
  for (auto& f : factors_) {
    f.potential = LinearizedPotential{};
    for (int s = 0; s < f.arity; ++s) f.outgoing[s] = {frame, Gaussian3::zero()};
  }
}

std::size_t FactorGraph::count(FactorKind kind) const {
  std::size_t n = 0;
  for (const auto& f : factors_) n += f.kind == kind ? 1 : 0;
  return n;
}

LinearizedPotential linearize_factor(const FactorGraph& graph, FactorId id) {
  const FactorNode& f = graph.factor(id);
  LinearizedPotential pot;
  for (int s = 0; s < f.arity; ++s) pot.frames[s] = graph.variable(f.vars[s]).frame;
  const double precision = 1.0 / (f.sigma * f.sigma);

  switch (f.kind) {
    case FactorKind::Photometric: {
      const PhotometricScene* scene = graph.scene();
      if (scene == nullptr) throw ConfigError("photometric factor evaluated without an image pair");
      const auto term = photometric_residual(f.pixel, pot.frames[0], *scene);
      if (!term) return pot;
      pot.eta.head<3>() = -precision * term->residual * term->jacobian.transpose();
      pot.lambda.topLeftCorner<3, 3>() = precision * term->jacobian.transpose() * term->jacobian;
      pot.energy = 0.5 * precision * term->residual * term->residual;
      break;
    }
    case FactorKind::Prior: {
      if (!f.anchor) {
        pot.lambda.topLeftCorner<3, 3>() = precision * Eigen::Matrix3d::Identity();
        break;
      }
      const auto term = prior_residual(pot.frames[0], f.anchor.value_or(pot.frames[0]));
      pot.eta.head<3>() = -precision * term.jacobian.transpose() * term.residual;
      pot.lambda.topLeftCorner<3, 3>() = precision * term.jacobian.transpose() * term.jacobian;
      pot.energy = 0.5 * precision * term.residual.squaredNorm();
      break;
    }
    case FactorKind::Regularization: {
      const auto term = regularization_residual(pot.frames[0], pot.frames[1]);
      Eigen::Matrix<double, 3, 6> jac;
      jac << term.jacobian_i, term.jacobian_j;
      pot.eta = -precision * jac.transpose() * term.residual;
      pot.lambda = precision * jac.transpose() * jac;
      pot.energy = 0.5 * precision * term.residual.squaredNorm();
      break;
    }
  }
  pot.lambda = (0.5 * (pot.lambda + pot.lambda.transpose())).eval();
  pot.valid = true;
  return pot;
}

LieGaussian variable_to_factor(const FactorGraph& graph, VariableId v, FactorId f) {
  const VariableNode& node = graph.variable(v);
  LieGaussian out{node.frame, Gaussian3::zero()};
  for (const FactorSlot& fs : node.factors) {
    if (fs.factor == f) continue;
    out.gauss *= expressed_at(graph.factor(fs.factor).outgoing[fs.slot], node.frame).gauss;
  }
  return out;
}

std::optional<LieGaussian> factor_to_variable(const FactorGraph& graph, FactorId id, int slot) {
  const FactorNode& f = graph.factor(id);
  const LinearizedPotential& pot = f.potential;
  const Rotation& target_frame = graph.variable(f.vars[slot]).frame;
  if (!pot.valid) return LieGaussian{target_frame, Gaussian3::zero()};

  LieGaussian msg{pot.frames[slot], Gaussian3::zero()};
  if (f.arity == 1) {
    msg.gauss = Gaussian3(pot.eta.head<3>(), pot.lambda.topLeftCorner<3, 3>());
  } else {
    const int other = 1 - slot;
    const int a = 3 * slot;
    const int b = 3 * other;
    Gaussian3 incoming = variable_to_factor(graph, f.vars[other], id).gauss;
    const Rotation& other_frame = graph.variable(f.vars[other]).frame;
    if (!(other_frame == pot.frames[other])) {
      incoming = reframe(LieGaussian{other_frame, incoming}, pot.frames[other]).gauss;
    }
    const Eigen::Matrix3d lbb = pot.lambda.block<3, 3>(b, b) + incoming.lambda;
    const Eigen::Vector3d eb = pot.eta.segment<3>(b) + incoming.eta;
    auto marg = eliminate<3, 3>(pot.eta.segment<3>(a), eb, pot.lambda.block<3, 3>(a, a),
                                pot.lambda.block<3, 3>(a, b), lbb);
    if (!marg) return std::nullopt;
    msg.gauss = *marg;
  }
  return expressed_at(msg, target_frame);
}

BeliefUpdate update_belief(FactorGraph& graph, VariableId v, bool advance_frame) {
  VariableNode& node = graph.variable(v);
  Gaussian3 belief = Gaussian3::zero();
  for (const FactorSlot& fs : node.factors) {
    LieGaussian& msg = graph.factor(fs.factor).outgoing[fs.slot];
    if (!(msg.frame == node.frame)) msg = reframe(msg, node.frame);
    belief *= msg.gauss;
  }
  belief.symmetrize();

  BeliefUpdate result;
  const auto tau = mean_of(belief);
  if (!tau) {
    node.belief = belief;
    result.singular = true;
    return result;
  }
  if (!advance_frame) {
    node.belief = belief;
    return result;
  }

  // ⊞: the frame moves to the belief mean, which becomes zero.
  const Eigen::Matrix3d jinv = right_jacobian_inv(*tau);
  node.frame = oplus(node.frame, *tau);
  node.belief = Gaussian3(Eigen::Vector3d::Zero(), jinv.transpose() * belief.lambda * jinv);
  node.belief.symmetrize();
  const FrameStep step(*tau);
  for (const FactorSlot& fs : node.factors) {
    LieGaussian& msg = graph.factor(fs.factor).outgoing[fs.slot];
    msg.gauss = reframe_after_step(msg.gauss, step);
    msg.frame = node.frame;
  }
  result.step_norm = tau->norm();
  return result;
}

SweepReport GbpSolver::sweep(FactorGraph& graph) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t nf = graph.num_factors();
  const std::size_t nv = graph.num_variables();
  next_.resize(nf);
  degenerate_.assign(nf, 0);

  // Step A: relinearise and recompute factor-to-variable messages against the
  // messages stored by the previous sweep.
  parallel_for(nf, options_.workers, [&](std::size_t i) {
    const auto id = static_cast<FactorId>(i);
    FactorNode& f = graph.factor(id);
    f.potential = linearize_factor(graph, id);
    for (int s = 0; s < f.arity; ++s) {
      auto msg = factor_to_variable(graph, id, s);
      if (!msg) {
        degenerate_[i] = 1;
        msg = LieGaussian{graph.variable(f.vars[s]).frame, Gaussian3::zero()};
      }
      if (options_.damping > 0.0) {
        const LieGaussian old = expressed_at(f.outgoing[s], msg->frame);
        msg->gauss = blend(msg->gauss, old.gauss, options_.damping);
      }
      next_[i][s] = *msg;
    }
  });

  SweepReport report;
  report.sweep = ++sweeps_;
  for (std::size_t i = 0; i < nf; ++i) {
    FactorNode& f = graph.factor(static_cast<FactorId>(i));
    for (int s = 0; s < f.arity; ++s) f.outgoing[s] = next_[i][s];
    report.energy += f.potential.energy;
    report.invalid_factors += f.potential.valid ? 0 : 1;
    report.degenerate_messages += degenerate_[i];
  }

  // Step B: beliefs and frame updates; each variable only touches the message
  // slots addressed to it.
  steps_.assign(nv, 0.0);
  singular_.assign(nv, 0);
  parallel_for(nv, options_.workers, [&](std::size_t i) {
    const BeliefUpdate u = update_belief(graph, static_cast<VariableId>(i), options_.advance_frames);
    steps_[i] = u.step_norm;
    singular_[i] = u.singular ? 1 : 0;
  });
  double total = 0.0;
  for (std::size_t i = 0; i < nv; ++i) {
    total += steps_[i];
    report.singular_beliefs += singular_[i];
  }
  report.mean_step_norm = nv > 0 ? total / static_cast<double>(nv) : 0.0;
  report.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return report;
}

bool frames_consistent(const FactorGraph& graph) {
  for (const auto& f : graph.factors()) {
    for (int s = 0; s < f.arity; ++s) {
      if (!(f.outgoing[s].frame == graph.variable(f.vars[s]).frame)) return false;
    }
  }
  return true;
}

}  // namespace pixgbp
