#include "pixgbp/topology.hpp"

#include <numeric>
#include <queue>

#include "pixgbp/error.hpp"

namespace pixgbp {
namespace {

std::vector<std::vector<VariableId>> adjacency(const FactorGraph& graph) {
  std::vector<std::vector<VariableId>> adj(graph.num_variables());
  for (const auto& f : graph.factors()) {
    if (f.arity != 2) continue;
    adj[f.vars[0]].push_back(f.vars[1]);
    adj[f.vars[1]].push_back(f.vars[0]);
  }
  return adj;
}

std::vector<int> bfs_depths(const std::vector<std::vector<VariableId>>& adj, VariableId source) {
  std::vector<int> depth(adj.size(), -1);
  std::queue<VariableId> queue;
  depth[source] = 0;
  queue.push(source);
  while (!queue.empty()) {
    const VariableId v = queue.front();
    queue.pop();
    for (VariableId u : adj[v]) {
      if (depth[u] < 0) {
        depth[u] = depth[v] + 1;
        queue.push(u);
      }
    }
  }
  return depth;
}

void add_pixel_variables(FactorGraph& g, int height, int width, const FactorParams& p) {
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const VariableId v = g.add_variable(Rotation(), 0, {x, y});
      g.add_photometric(v, Eigen::Vector2d(x, y), p.sigma_d);
      g.add_prior(v, p.sigma_p);
    }
  }
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

std::string_view to_string(TopologyKind kind) { return kind == TopologyKind::Flat ? "flat" : "sharded"; }

TopologyKind parse_topology(std::string_view name) {
  if (name == "flat") return TopologyKind::Flat;
  if (name == "sharded") return TopologyKind::Sharded;
  throw ConfigError("unknown topology '" + std::string(name) + "' (expected flat or sharded)");
}

FactorGraph build_flat(int height, int width, const FactorParams& params) {
  params.validate();
  if (height <= 0 || width <= 0) throw ConfigError("image dimensions must be positive");
  FactorGraph g;
  add_pixel_variables(g, height, width, params);
  auto id = [width](int x, int y) { return static_cast<VariableId>(y * width + x); };
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x + 1 < width; ++x) g.add_regularization(id(x, y), id(x + 1, y), params.sigma_r);
  }
  for (int y = 0; y + 1 < height; ++y) {
    for (int x = 0; x < width; ++x) g.add_regularization(id(x, y), id(x, y + 1), params.sigma_r);
  }
  return g;
}

int sharded_levels(int side) {
  int levels = 1;
  while (side > 1) {
    side /= 2;
    ++levels;
  }
  return levels;
}

FactorGraph build_sharded(int height, int width, const FactorParams& params) {
  params.validate();
  if (height != width || !is_power_of_two(width)) {
    throw ConfigError("sharded topology needs a square power-of-two image, got " + std::to_string(width) + "x" +
                      std::to_string(height));
  }
  FactorGraph g;
  add_pixel_variables(g, height, width, params);
  VariableId level_start = 0;
  int side = width;
  for (int level = 1; side > 1; ++level) {
    const int parent_side = side / 2;
    const auto parent_start = static_cast<VariableId>(g.num_variables());
    for (int y = 0; y < parent_side; ++y) {
      for (int x = 0; x < parent_side; ++x) {
        const VariableId parent = g.add_variable(Rotation(), level);
        g.add_prior(parent, params.sigma_p);
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const auto child = level_start + static_cast<VariableId>((2 * y + dy) * side + (2 * x + dx));
            g.add_regularization(child, parent, params.sigma_r);
          }
        }
      }
    }
    level_start = parent_start;
    side = parent_side;
  }
  return g;
}

FactorGraph build_topology(const TopologySpec& spec) {
  return spec.kind == TopologyKind::Flat ? build_flat(spec.height, spec.width, spec.params)
                                         : build_sharded(spec.height, spec.width, spec.params);
}

bool is_connected(const FactorGraph& graph) {
  if (graph.num_variables() == 0) return true;
  const auto depth = bfs_depths(adjacency(graph), 0);
  return std::none_of(depth.begin(), depth.end(), [](int d) { return d < 0; });
}

bool is_acyclic(const FactorGraph& graph) {
  std::vector<VariableId> parent(graph.num_variables());
  std::iota(parent.begin(), parent.end(), VariableId{0});
  auto find = [&](VariableId v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  };
  for (const auto& f : graph.factors()) {
    if (f.arity != 2) continue;
    const VariableId a = find(f.vars[0]);
    const VariableId b = find(f.vars[1]);
    if (a == b) return false;
    parent[a] = b;
  }
  return true;
}

int variable_graph_diameter(const FactorGraph& graph) {
  const auto adj = adjacency(graph);
  int best = 0;
  for (VariableId v = 0; v < adj.size(); ++v) {
    for (int d : bfs_depths(adj, v)) best = std::max(best, d);
  }
  return best;
}

}  // namespace pixgbp
