#include "sparsebm/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sparsebm/training.hpp"

namespace sparsebm {

void SyntheticConfig::validate() const {
  if (groups < 2 || vocab_size < 2 * groups)
    throw ArgumentError("synthetic corpus needs at least two words per group");
  if (n_train < 1 || n_test < 0) throw ArgumentError("invalid synthetic document counts");
  if (min_length < 1 || max_length < min_length) throw ArgumentError("invalid length range");
  if (!(topic_prob > 0 && topic_prob <= 1)) throw ArgumentError("topic_prob must be in (0, 1]");
  if (background < 0 || background >= 1) throw ArgumentError("background must be in [0, 1)");
  if (cross_pairs < 0 || cross_pairs > groups / 2)
    throw ArgumentError("at most one cross pair per two groups");
  if (cross_weight < 0 || cross_weight >= 1) throw ArgumentError("cross_weight must be in [0, 1)");
}

namespace {

Document draw_document(const std::vector<VectorXd>& topic_logits, const VectorXd& background,
                       double background_prob, double topic_prob, int min_length, int max_length,
                       Rng& rng) {
  const int g = static_cast<int>(topic_logits.size());
  std::vector<int> active;
  for (int t = 0; t < g; ++t)
    if (bernoulli(topic_prob, rng)) active.push_back(t);
  const int length =
      min_length + static_cast<int>(uniform_index(rng, max_length - min_length + 1));
  // Mixture weights over {background, active topics}.
  // A document with no active topic is pure background.
  VectorXd probs = (active.empty() ? 1.0 : background_prob) * softmax(background);
  for (int t : active) probs += ((1.0 - background_prob) / active.size()) * softmax(topic_logits[t]);
  return sample_tokens(probs.array().log().matrix(), length, rng);
}

}  // namespace

SyntheticCorpus generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  Rng rng = derive_rng(config.seed, 0x5E7);
  const int k = config.vocab_size, g = config.groups;
  SyntheticCorpus out;

  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  shuffle_in_place(std::span<int>(perm), rng);
  out.groups.resize(g);
  out.group_of.assign(k, -1);
  for (int i = 0; i < k; ++i) {
    const int t = i * g / k;
    out.groups[t].push_back(perm[i]);
    out.group_of[perm[i]] = t;
  }
  for (auto& grp : out.groups) std::sort(grp.begin(), grp.end());

  // Within-topic word weights vary mildly so words are not interchangeable.
  std::vector<VectorXd> logits(g, VectorXd::Constant(k, -1e30));
  for (int t = 0; t < g; ++t)
    for (int w : out.groups[t]) logits[t][w] = 0.5 * standard_normal(rng);

  // Cross pairs link disjoint group pairs (2i -> 2i+1); the planted word is
  // the target group's first word.
  for (int c = 0; c < config.cross_pairs; ++c) {
    const int source = 2 * c, target = 2 * c + 1;
    const int word = out.groups[target].front();
    out.cross.push_back({source, word});
    const VectorXd p = softmax(logits[source]);
    VectorXd mixed = (1.0 - config.cross_weight) * p;
    mixed[word] += config.cross_weight;
    logits[source] = mixed.array().log().matrix();
  }
  const VectorXd background = VectorXd::Zero(k);

  out.train.name = "synthetic-train";
  out.test.name = "synthetic-test";
  for (int w = 0; w < k; ++w) out.train.vocab.push_back("w" + std::to_string(w));
  out.test.vocab = out.train.vocab;
  for (int n = 0; n < config.n_train + config.n_test; ++n) {
    Document d = draw_document(logits, background, config.background, config.topic_prob,
                               config.min_length, config.max_length, rng);
    (n < config.n_train ? out.train : out.test).docs.push_back(std::move(d));
  }
  return out;
}

double rand_index(const std::vector<int>& x, const std::vector<int>& y) {
  if (x.size() != y.size()) throw ArgumentError("labelings differ in length");
  const std::size_t n = x.size();
  if (n < 2) return 1.0;
  std::size_t agree = 0, total = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      agree += (x[i] == x[j]) == (y[i] == y[j]);
      ++total;
    }
  return static_cast<double>(agree) / static_cast<double>(total);
}

}  // namespace sparsebm
