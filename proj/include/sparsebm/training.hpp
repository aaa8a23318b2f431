#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "sparsebm/common.hpp"
#include "sparsebm/corpus.hpp"

namespace sparsebm {

struct TrainConfig {
  int epochs = 50;
  int cd_steps = 10;
  double learning_rate = 0.01;
  int batch_size = 10;
  std::uint64_t seed = 0;
  double weight_init_std = 0.001;
  /// Initialize b to log smoothed empirical word frequencies instead of 0.
  bool init_visible_bias_from_data = false;
  double momentum = 0.0;
  double weight_decay = 0.0;
  /// Use hidden probabilities rather than samples for the last negative-phase
  /// hidden update.
  bool mean_field_final = false;

  void validate() const;
};

/// Sufficient-statistic vector shared by RS and SBM parameterizations. For RS
/// models `tree` is empty.
struct ModelGradient {
  MatrixXd W;
  VectorXd a;
  VectorXd b;
  VectorXd tree;

  static ModelGradient zeros(int hidden, int visible, int tree_edges = 0);
  ModelGradient& operator+=(const ModelGradient& other);
  ModelGradient& operator-=(const ModelGradient& other);
  ModelGradient& operator*=(double s);
};

using DocumentBatch = std::vector<const Document*>;
DocumentBatch make_batch(const Corpus& corpus, std::span<const int> ids);
DocumentBatch make_batch(std::span<const Document> docs);

/// Called after each epoch with (epoch index, number of epochs done so far).
using EpochCallback = std::function<void(int epoch)>;

bool bernoulli(double p, Rng& rng);

/// Draws `length` i.i.d. tokens from softmax(logits) and returns their counts.
Document sample_tokens(const VectorXd& logits, int length, Rng& rng);

/// softmax(logits) as probabilities.
VectorXd softmax(const VectorXd& logits);

}  // namespace sparsebm
