#pragma once

#include <cstdint>
#include <vector>

#include "sparsebm/replicated_softmax.hpp"
#include "sparsebm/sbm.hpp"

namespace sparsebm {

struct AisSegment {
  double beta_start = 0.0;
  double beta_end = 1.0;
  int count = 1;
};

/// Piecewise-uniform inverse temperatures. Each segment contributes `count`
/// values evenly spaced in (beta_start, beta_end].
struct AisSchedule {
  std::vector<AisSegment> segments;

  void validate() const;
  int total() const;
  std::vector<double> betas() const;
};

/// (0 -> 0.5, 500), (0.5 -> 0.9, 3000), (0.9 -> 1, 6500).
AisSchedule default_schedule();

struct AisEstimate {
  double log_z_mean = 0.0;
  std::vector<double> per_run_log_weights;
  int length = 0;
  double log_z_base = 0.0;
  /// Delta-method standard error of log_z_mean from the spread of run weights.
  double std_error = 0.0;
};

struct AisOptions {
  AisSchedule schedule = default_schedule();
  int runs = 100;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// F ln 2 + D log sum_k exp(b_k): the beta = 0 model keeps only word biases.
double ais_base_log_z(const VectorXd& b, int hidden, int length);

/// Estimates log Z over documents of length D (token-sequence convention).
/// Runs are independent; run r uses its own generator derived from the seed,
/// so results do not depend on `threads`.
AisEstimate ais_log_z(const RsModel& model, int length, const AisOptions& options);
AisEstimate ais_log_z(const SbmModel& model, int length, const AisOptions& options);

}  // namespace sparsebm
