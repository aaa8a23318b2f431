#include "sparsebm/tree_inference.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <queue>
#include <set>
#include <string>

namespace sparsebm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

int find_root(std::vector<int>& uf, int x) {
  while (uf[x] != x) x = uf[x] = uf[uf[x]];
  return x;
}

}  // namespace

TreeLayout::TreeLayout(int n, std::span<const TreeEdge> edges) {
  if (n < 0) throw StructuralError("negative node count");
  std::vector<int> uf(n);
  std::iota(uf.begin(), uf.end(), 0);
  std::set<std::pair<int, int>> seen;
  std::vector<std::vector<std::pair<int, int>>> adj(n);  // (neighbor, edge)
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [j, l] = edges[e];
    if (j < 0 || j >= n || l < 0 || l >= n)
      throw StructuralError("hidden edge " + std::to_string(j) + "-" + std::to_string(l) +
                            " out of range");
    if (j == l) throw StructuralError("hidden self-loop at " + std::to_string(j));
    if (!seen.insert({std::min(j, l), std::max(j, l)}).second)
      throw StructuralError("duplicate hidden edge " + std::to_string(j) + "-" + std::to_string(l));
    const int rj = find_root(uf, j), rl = find_root(uf, l);
    if (rj == rl) throw StructuralError("hidden graph is not a forest");
    uf[rj] = rl;
    adj[j].push_back({l, static_cast<int>(e)});
    adj[l].push_back({j, static_cast<int>(e)});
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());

  parent_.assign(n, -1);
  parent_edge_.assign(n, -1);
  child_is_first_.assign(edges.size(), 0);
  std::vector<char> visited(n, 0);
  for (int start = 0; start < n; ++start) {
    if (visited[start]) continue;
    roots_.push_back(start);
    visited[start] = 1;
    std::queue<int> q;
    q.push(start);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      order_.push_back(u);
      for (const auto& [v, e] : adj[u]) {
        if (visited[v]) continue;
        visited[v] = 1;
        parent_[v] = u;
        parent_edge_[v] = e;
        child_is_first_[e] = edges[e].j == v;
        q.push(v);
      }
    }
  }
}

namespace {

struct Messages {
  std::vector<std::array<double, 2>> up;        // subtree belief at node
  std::vector<std::array<double, 2>> to_parent;  // message node -> parent
};

Messages upward(const TreeLayout& layout, std::span<const TreeEdge> /*edges*/,
                const VectorXd& field, const VectorXd& coupling,
                std::span<const signed char> clamp) {
  const int n = layout.size();
  Messages m;
  m.up.resize(n);
  m.to_parent.resize(n);
  for (int j = 0; j < n; ++j) {
    m.up[j] = {0.0, field[j]};
    if (!clamp.empty() && clamp[j] != kFree) m.up[j][clamp[j] == 1 ? 0 : 1] = kNegInf;
  }
  const auto& order = layout.order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int c = *it;
    const int p = layout.parent(c);
    if (p < 0) continue;
    const double w = coupling[layout.parent_edge(c)];
    const auto& u = m.up[c];
    m.to_parent[c] = {log_add_exp(u[0], u[1]), log_add_exp(u[0], u[1] + w)};
    m.up[p][0] += m.to_parent[c][0];
    m.up[p][1] += m.to_parent[c][1];
  }
  return m;
}

void check_sizes(const TreeLayout& layout, std::span<const TreeEdge> edges, const VectorXd& field,
                 const VectorXd& coupling, std::span<const signed char> clamp) {
  if (field.size() != layout.size()) throw ArgumentError("field size does not match tree");
  if (coupling.size() != static_cast<Eigen::Index>(edges.size()))
    throw ArgumentError("coupling size does not match edge count");
  if (!clamp.empty() && static_cast<int>(clamp.size()) != layout.size())
    throw ArgumentError("clamp size does not match tree");
}

}  // namespace

double tree_log_partition(const TreeLayout& layout, std::span<const TreeEdge> edges,
                          const VectorXd& field, const VectorXd& coupling) {
  check_sizes(layout, edges, field, coupling, {});
  // Single-pass variant of upward() without the per-node message storage.
  const int n = layout.size();
  thread_local std::vector<std::array<double, 2>> up;
  up.resize(n);
  for (int j = 0; j < n; ++j) up[j] = {0.0, field[j]};
  const auto& order = layout.order();
  double log_z = 0.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int c = *it;
    const int p = layout.parent(c);
    const auto& u = up[c];
    if (p < 0) {
      log_z += log_add_exp(u[0], u[1]);
      continue;
    }
    const double w = coupling[layout.parent_edge(c)];
    up[p][0] += log_add_exp(u[0], u[1]);
    up[p][1] += log_add_exp(u[0], u[1] + w);
  }
  return log_z;
}

TreePosterior tree_posterior(const TreeLayout& layout, std::span<const TreeEdge> edges,
                             const VectorXd& field, const VectorXd& coupling,
                             std::span<const signed char> clamp) {
  check_sizes(layout, edges, field, coupling, clamp);
  const int n = layout.size();
  const Messages m = upward(layout, edges, field, coupling, clamp);

  TreePosterior out;
  out.singleton.resize(n);
  out.pairwise.assign(edges.size(), Eigen::Matrix2d::Zero());
  std::vector<std::array<double, 2>> down(n, {0.0, 0.0});
  std::vector<double> component_log_z(n, 0.0);

  for (int r : layout.roots()) {
    const double z = log_add_exp(m.up[r][0], m.up[r][1]);
    out.log_hidden_partition += z;
  }
  for (int u : layout.order()) {
    const int p = layout.parent(u);
    if (p < 0) {
      component_log_z[u] = log_add_exp(m.up[u][0], m.up[u][1]);
    } else {
      component_log_z[u] = component_log_z[p];
      const double w = coupling[layout.parent_edge(u)];
      // Belief at the parent excluding this child's contribution.
      const std::array<double, 2> ext = {m.up[p][0] - m.to_parent[u][0] + down[p][0],
                                         m.up[p][1] - m.to_parent[u][1] + down[p][1]};
      down[u] = {log_add_exp(ext[0], ext[1]), log_add_exp(ext[0], ext[1] + w)};

      Eigen::Matrix2d joint;  // (child value, parent value)
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
          joint(x, y) = std::exp(m.up[u][x] + ext[y] + (x && y ? w : 0.0) - component_log_z[u]);
      const int e = layout.parent_edge(u);
      out.pairwise[e] = layout.child_is_first(e) ? joint : Eigen::Matrix2d(joint.transpose());
    }
    const double b0 = m.up[u][0] + down[u][0];
    const double b1 = m.up[u][1] + down[u][1];
    out.singleton[u] = std::exp(b1 - log_add_exp(b0, b1));
  }
  return out;
}

}  // namespace sparsebm
