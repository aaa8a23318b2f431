#include "sparsebm/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace sparsebm {

void PruneConfig::validate(int vocab_size) const {
  if (target_per_unit < 1 || target_per_unit > vocab_size)
    throw ArgumentError("prune target must be in [1, K]");
  if (!(prune_fraction > 0 && prune_fraction < 1))
    throw ArgumentError("prune fraction must be in (0, 1)");
  if (retrain_epochs_per_iter < 1) throw ArgumentError("retrain epochs must be positive");
  train.validate();
}

void prune_step(RsModel& model, ConnectionMask& mask, int keep_per_unit) {
  const int f = model.hidden_count(), k = model.vocab_size();
  if (mask.rows() != f || mask.cols() != k) throw ArgumentError("mask shape mismatch");
  if (keep_per_unit < 1) throw ArgumentError("keep_per_unit must be positive");
  std::vector<int> alive;
  for (int j = 0; j < f; ++j) {
    alive.clear();
    for (int w = 0; w < k; ++w)
      if (mask(j, w)) alive.push_back(w);
    if (keep_per_unit > static_cast<int>(alive.size()))
      throw ArgumentError("hidden " + std::to_string(j) + " has only " +
                          std::to_string(alive.size()) + " connections, cannot keep " +
                          std::to_string(keep_per_unit));
    std::stable_sort(alive.begin(), alive.end(), [&](int x, int y) {
      return std::abs(model.W(j, x)) > std::abs(model.W(j, y));
    });
    for (std::size_t i = keep_per_unit; i < alive.size(); ++i) mask(j, alive[i]) = false;
  }
  apply_connection_mask(model, mask);
}

PruneResult prune_and_retrain(const RsModel& model, const Corpus& corpus,
                              const PruneConfig& config) {
  model.validate();
  config.validate(model.vocab_size());
  PruneResult result{model, ConnectionMask::Constant(model.hidden_count(), model.vocab_size(), true),
                     {}, 0};
  int current = model.vocab_size();
  result.log.push_back({0, current, 0});
  int iteration = 0;
  while (current > config.target_per_unit) {
    ++iteration;
    const int next = std::max(
        config.target_per_unit,
        static_cast<int>(std::ceil((1.0 - config.prune_fraction) * current - 1e-9)));
    // ceil can stall at `current` for small counts; always make progress.
    current = std::min(next, current - 1);
    prune_step(result.model, result.mask, current);
    TrainConfig train = config.train;
    train.epochs = config.retrain_epochs_per_iter;
    train.seed = config.train.seed + static_cast<std::uint64_t>(iteration);
    rs_fit(result.model, corpus, train, &result.mask);
    result.total_epochs += train.epochs;
    result.log.push_back({iteration, current, result.total_epochs});
  }
  return result;
}

void write_prune_log(std::ostream& out, const std::vector<PruneIteration>& log) {
  out << "iter\tper_unit_count\tepochs\n";
  for (const auto& it : log)
    out << it.iteration << '\t' << it.per_unit_count << '\t' << it.epochs << '\n';
}

}  // namespace sparsebm
