#include "sparsebm/ais.hpp"

#include <algorithm>
#include <cmath>

#include "sparsebm/parallel.hpp"

namespace sparsebm {

void AisSchedule::validate() const {
  if (segments.empty()) throw ArgumentError("AIS schedule has no segments");
  double last = 0.0;
  for (const auto& s : segments) {
    if (s.count < 1) throw ArgumentError("AIS segment count must be positive");
    if (s.beta_start < last - 1e-15 || s.beta_end < s.beta_start || s.beta_end > 1.0)
      throw ArgumentError("AIS inverse temperatures must be non-decreasing within [0, 1]");
    last = s.beta_end;
  }
  if (segments.front().beta_start != 0.0 || segments.back().beta_end != 1.0)
    throw ArgumentError("AIS schedule must run from 0 to 1");
}

int AisSchedule::total() const {
  int n = 0;
  for (const auto& s : segments) n += s.count;
  return n;
}

std::vector<double> AisSchedule::betas() const {
  std::vector<double> out;
  out.reserve(total());
  for (const auto& s : segments) {
    const double step = (s.beta_end - s.beta_start) / s.count;
    for (int i = 1; i < s.count; ++i) out.push_back(s.beta_start + step * i);
    out.push_back(s.beta_end);
  }
  return out;
}

AisSchedule default_schedule() { return {{{0.0, 0.5, 500}, {0.5, 0.9, 3000}, {0.9, 1.0, 6500}}}; }

double ais_base_log_z(const VectorXd& b, int hidden, int length) {
  const std::vector<double> bs(b.data(), b.data() + b.size());
  return hidden * std::log(2.0) + length * log_sum_exp(bs);
}

namespace {

class RsTarget {
 public:
  explicit RsTarget(const RsModel& m) : m_(m) {}
  const MatrixXd& W() const { return m_.W; }
  const VectorXd& b() const { return m_.b; }
  int hidden() const { return m_.hidden_count(); }
  VectorXd drive(const Document& doc) const { return hidden_drive(m_.W, m_.a, doc); }
  double log_hidden(const VectorXd& drive, double beta) const {
    double s = 0.0;
    for (Eigen::Index j = 0; j < drive.size(); ++j) s += softplus(beta * drive[j]);
    return s;
  }
  void init_hidden(HiddenState& h, Rng&) const { h = HiddenState::Zero(hidden()); }
  void sample_hidden(const VectorXd& drive, double beta, HiddenState& h, Rng& rng) const {
    for (Eigen::Index j = 0; j < drive.size(); ++j)
      h[j] = bernoulli(sigmoid(beta * drive[j]), rng) ? 1.0 : 0.0;
  }

 private:
  const RsModel& m_;
};

class SbmTarget {
 public:
  SbmTarget(const SbmModel& m, int length) : m_(m), coupling_(sbm_edge_couplings(m, length)) {}
  const MatrixXd& W() const { return m_.W; }
  const VectorXd& b() const { return m_.b; }
  int hidden() const { return m_.hidden_count(); }
  VectorXd drive(const Document& doc) const { return hidden_drive(m_.W, m_.a, doc); }
  double log_hidden(const VectorXd& drive, double beta) const {
    return tree_log_partition(m_.structure.layout(), m_.structure.tree_edges(), beta * drive,
                              beta * coupling_);
  }
  void init_hidden(HiddenState& h, Rng& rng) const {
    h.resize(hidden());
    for (Eigen::Index j = 0; j < h.size(); ++j) h[j] = bernoulli(0.5, rng) ? 1.0 : 0.0;
  }
  void sample_hidden(const VectorXd& drive, double beta, HiddenState& h, Rng& rng) const {
    sbm_sweep_hidden(m_, beta * drive, beta * coupling_, h, rng);
  }

 private:
  const SbmModel& m_;
  VectorXd coupling_;
};

template <typename Target>
double ais_run(const Target& target, int length, const std::vector<double>& betas, Rng& rng) {
  Document u = sample_tokens(target.b(), length, rng);
  HiddenState h;
  target.init_hidden(h, rng);
  VectorXd drive = target.drive(u);
  double log_w = 0.0, prev = 0.0;
  for (std::size_t k = 0; k < betas.size(); ++k) {
    const double beta = betas[k];
    log_w += target.log_hidden(drive, beta) - target.log_hidden(drive, prev);
    prev = beta;
    if (k + 1 == betas.size()) break;
    target.sample_hidden(drive, beta, h, rng);
    u = sample_tokens(target.b() + beta * (target.W().transpose() * h), length, rng);
    drive = target.drive(u);
  }
  return log_w;
}

double log_weight_std_error(const std::vector<double>& log_w) {
  const std::size_t n = log_w.size();
  if (n < 2) return 0.0;
  const double top = *std::max_element(log_w.begin(), log_w.end());
  double mean = 0.0;
  for (double x : log_w) mean += std::exp(x - top);
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double x : log_w) var += (std::exp(x - top) - mean) * (std::exp(x - top) - mean);
  var /= static_cast<double>(n - 1);
  return std::sqrt(var / static_cast<double>(n)) / mean;
}

template <typename Target>
AisEstimate run_ais(const Target& target, int length, const AisOptions& options) {
  if (length < 1) throw ArgumentError("document length must be >= 1");
  if (options.runs < 1) throw ArgumentError("AIS needs at least one run");
  options.schedule.validate();
  const std::vector<double> betas = options.schedule.betas();
  AisEstimate est;
  est.length = length;
  est.per_run_log_weights.assign(options.runs, 0.0);
  parallel_tasks(options.runs, options.threads, [&](int r) {
    Rng rng = derive_rng(options.seed, 0xA15000000ULL + static_cast<std::uint64_t>(length) * 65536 +
                                           static_cast<std::uint64_t>(r));
    est.per_run_log_weights[r] = ais_run(target, length, betas, rng);
  });
  est.log_z_base = ais_base_log_z(target.b(), target.hidden(), length);
  est.log_z_mean = est.log_z_base + log_mean_exp(est.per_run_log_weights);
  est.std_error = log_weight_std_error(est.per_run_log_weights);
  return est;
}

}  // namespace

AisEstimate ais_log_z(const RsModel& model, int length, const AisOptions& options) {
  model.validate();
  return run_ais(RsTarget(model), length, options);
}

AisEstimate ais_log_z(const SbmModel& model, int length, const AisOptions& options) {
  model.validate();
  return run_ais(SbmTarget(model, length), length, options);
}

}  // namespace sparsebm
