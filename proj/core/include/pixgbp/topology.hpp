#pragma once

#include <string>
#include <string_view>

#include "pixgbp/factors.hpp"
#include "pixgbp/graph.hpp"

namespace pixgbp {

enum class TopologyKind { Flat, Sharded };

std::string_view to_string(TopologyKind kind);
/// Throws ConfigError for anything but "flat" or "sharded".
TopologyKind parse_topology(std::string_view name);

struct TopologySpec {
  TopologyKind kind = TopologyKind::Flat;
  int height = 0;
  int width = 0;
  FactorParams params;
};

/// 4-neighbour pixel grid. Variable id = y·w + x; every variable has one
/// photometric and one prior factor.
FactorGraph build_flat(int height, int width, const FactorParams& params);

/// Pyramid over non-overlapping 2x2 groups up to a single apex. Level 0 holds the
/// photometric variables (ids as in build_flat), higher levels only priors.
/// Requires a square power-of-two image.
FactorGraph build_sharded(int height, int width, const FactorParams& params);

FactorGraph build_topology(const TopologySpec& spec);

/// Number of pyramid levels build_sharded produces for a side length.
int sharded_levels(int side);

/// Structural queries over the variable graph induced by binary factors.
bool is_connected(const FactorGraph& graph);
bool is_acyclic(const FactorGraph& graph);
/// Longest shortest path (in binary factors) between two variables.
int variable_graph_diameter(const FactorGraph& graph);

}  // namespace pixgbp
