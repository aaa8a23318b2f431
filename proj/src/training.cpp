#include "sparsebm/training.hpp"

#include <algorithm>

namespace sparsebm {

void TrainConfig::validate() const {
  if (epochs < 0) throw ArgumentError("epochs must be >= 0");
  if (cd_steps < 1) throw ArgumentError("cd_steps must be >= 1");
  if (learning_rate < 0) throw ArgumentError("learning_rate must be >= 0");
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (weight_init_std < 0) throw ArgumentError("weight_init_std must be >= 0");
  if (momentum < 0 || momentum >= 1) throw ArgumentError("momentum must be in [0, 1)");
  if (weight_decay < 0) throw ArgumentError("weight_decay must be >= 0");
}

ModelGradient ModelGradient::zeros(int hidden, int visible, int tree_edges) {
  return {MatrixXd::Zero(hidden, visible), VectorXd::Zero(hidden), VectorXd::Zero(visible),
          VectorXd::Zero(tree_edges)};
}

ModelGradient& ModelGradient::operator+=(const ModelGradient& o) {
  W += o.W;
  a += o.a;
  b += o.b;
  tree += o.tree;
  return *this;
}

ModelGradient& ModelGradient::operator-=(const ModelGradient& o) {
  W -= o.W;
  a -= o.a;
  b -= o.b;
  tree -= o.tree;
  return *this;
}

ModelGradient& ModelGradient::operator*=(double s) {
  W *= s;
  a *= s;
  b *= s;
  tree *= s;
  return *this;
}

DocumentBatch make_batch(const Corpus& corpus, std::span<const int> ids) {
  DocumentBatch batch;
  batch.reserve(ids.size());
  for (int id : ids) batch.push_back(&corpus.docs.at(id));
  return batch;
}

DocumentBatch make_batch(std::span<const Document> docs) {
  DocumentBatch batch;
  batch.reserve(docs.size());
  for (const auto& d : docs) batch.push_back(&d);
  return batch;
}

bool bernoulli(double p, Rng& rng) { return uniform01(rng) < p; }

VectorXd softmax(const VectorXd& logits) {
  VectorXd p = (logits.array() - logits.maxCoeff()).exp();
  return p / p.sum();
}

Document sample_tokens(const VectorXd& logits, int length, Rng& rng) {
  const Eigen::Index k = logits.size();
  std::vector<double> cdf(k);
  const double m = logits.maxCoeff();
  double total = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    total += std::exp(logits[i] - m);
    cdf[i] = total;
  }
  std::vector<int> tokens(length);
  for (int t = 0; t < length; ++t) {
    const double u = uniform01(rng) * total;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    tokens[t] = static_cast<int>(it - cdf.begin());
  }
  std::sort(tokens.begin(), tokens.end());
  return Document::from_sorted_tokens(tokens);
}

}  // namespace sparsebm
