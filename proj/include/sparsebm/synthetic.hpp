#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "sparsebm/corpus.hpp"

namespace sparsebm {

/// Generator for sparse-topic corpora with known word groups. Each document
/// switches on a random subset of topics; tokens come from the active
/// topics' word groups plus a uniform background. A planted cross pair
/// (source group, target word) makes the target word appear in the source
/// topic too, which a group-aligned structure can only capture by adding a
/// connection.
struct SyntheticConfig {
  int vocab_size = 60;
  int groups = 8;
  int n_train = 3000;
  int n_test = 300;
  int min_length = 20;
  int max_length = 50;
  double topic_prob = 0.25;
  double background = 0.05;
  int cross_pairs = 2;
  /// Probability mass of the planted word inside its source topic.
  double cross_weight = 0.025;
  std::uint64_t seed = 1;

  void validate() const;
};

struct CrossPair {
  int source_group = 0;
  int word = 0;
};

struct SyntheticCorpus {
  Corpus train;
  Corpus test;
  std::vector<std::vector<int>> groups;  ///< ground-truth word groups
  std::vector<CrossPair> cross;
  std::vector<int> group_of;  ///< word -> ground-truth group
};

SyntheticCorpus generate_synthetic(const SyntheticConfig& config);

/// Pairwise Rand index between two labelings of the same items.
double rand_index(const std::vector<int>& x, const std::vector<int>& y);

}  // namespace sparsebm
