#pragma once

#include <iosfwd>
#include <vector>

#include "sparsebm/replicated_softmax.hpp"

namespace sparsebm {

struct PruneConfig {
  int target_per_unit = 1;
  /// Fraction of each unit's surviving connections removed per iteration.
  double prune_fraction = 0.2;
  int retrain_epochs_per_iter = 1;
  TrainConfig train;

  void validate(int vocab_size) const;
};

/// Keeps, per hidden unit, the `keep_per_unit` surviving connections with the
/// largest |W| (ties to the lower word index) and zeroes the rest.
void prune_step(RsModel& model, ConnectionMask& mask, int keep_per_unit);

struct PruneIteration {
  int iteration = 0;
  int per_unit_count = 0;
  int epochs = 0;  ///< cumulative retraining epochs
};

struct PruneResult {
  RsModel model;
  ConnectionMask mask;
  std::vector<PruneIteration> log;
  int total_epochs = 0;
};

/// Alternates prune_step and masked retraining until every unit keeps exactly
/// target_per_unit connections.
PruneResult prune_and_retrain(const RsModel& model, const Corpus& corpus,
                              const PruneConfig& config);

/// TSV "iter per_unit_count epochs".
void write_prune_log(std::ostream& out, const std::vector<PruneIteration>& log);

}  // namespace sparsebm
