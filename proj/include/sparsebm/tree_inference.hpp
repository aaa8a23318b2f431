#pragma once

#include <span>
#include <vector>

#include "sparsebm/common.hpp"

namespace sparsebm {

struct TreeEdge {
  int j = 0;
  int l = 0;
  friend bool operator==(const TreeEdge&, const TreeEdge&) = default;
};

/// Rooted traversal of a forest over binary variables. Each component is
/// rooted at its smallest index; `order` lists nodes parents-first.
class TreeLayout {
 public:
  TreeLayout() = default;
  /// Throws StructuralError unless `edges` form a forest over 0..n-1.
  TreeLayout(int n, std::span<const TreeEdge> edges);

  int size() const noexcept { return static_cast<int>(parent_.size()); }
  const std::vector<int>& order() const noexcept { return order_; }
  int parent(int node) const { return parent_[node]; }
  /// Index into the edge list of the edge to the parent, -1 for roots.
  int parent_edge(int node) const { return parent_edge_[node]; }
  /// True when the edge's stored `j` endpoint is the child.
  bool child_is_first(int edge) const { return child_is_first_[edge]; }
  const std::vector<int>& roots() const noexcept { return roots_; }
  int component_count() const noexcept { return static_cast<int>(roots_.size()); }

 private:
  std::vector<int> order_;
  std::vector<int> parent_;
  std::vector<int> parent_edge_;
  std::vector<char> child_is_first_;
  std::vector<int> roots_;
};

/// Exact posterior over a forest-structured pairwise binary model
///   p(h) ∝ exp(sum_j field_j h_j + sum_e coupling_e h_j h_l).
struct TreePosterior {
  VectorXd singleton;                   ///< P(h_j = 1)
  std::vector<Eigen::Matrix2d> pairwise;  ///< per edge, entry (x, y) = P(h_j = x, h_l = y)
  double log_hidden_partition = 0.0;    ///< log sum_h of the unnormalized factor
};

/// Clamp value meaning "not observed".
inline constexpr signed char kFree = -1;

/// Sum-product on the forest. `clamp`, when non-empty, fixes selected
/// variables to 0 or 1 (kFree elsewhere); the partition then sums only over
/// consistent states.
TreePosterior tree_posterior(const TreeLayout& layout, std::span<const TreeEdge> edges,
                             const VectorXd& field, const VectorXd& coupling,
                             std::span<const signed char> clamp = {});

/// Upward pass only: log partition without marginals.
double tree_log_partition(const TreeLayout& layout, std::span<const TreeEdge> edges,
                          const VectorXd& field, const VectorXd& coupling);

}  // namespace sparsebm
