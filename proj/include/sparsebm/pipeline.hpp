#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sparsebm/ais.hpp"
#include "sparsebm/corpus.hpp"
#include "sparsebm/structure.hpp"
#include "sparsebm/synthetic.hpp"
#include "sparsebm/training.hpp"

namespace sparsebm {

/// Declarative end-to-end experiment, read from JSON (see README).
struct PipelineConfig {
  std::string name = "pipeline";
  std::filesystem::path output_dir;

  // Corpus: either a UCI file pair or a generated synthetic corpus.
  std::optional<SyntheticConfig> synthetic;
  std::filesystem::path docword;
  std::filesystem::path vocab;
  int vocab_size = 0;  ///< 0 keeps the whole vocabulary
  VocabMethod vocab_method = VocabMethod::Frequency;
  std::uint64_t split_seed = 0;
  int n_train = 0, n_validation = 0, n_test = 0;

  SkeletonConfig skeleton;
  std::filesystem::path skeleton_path;  ///< load instead of build when set
  ExpansionBudget expansion;
  TrainConfig train;
  double prune_fraction = 0.2;
  int prune_retrain_epochs = 1;

  AisSchedule schedule = default_schedule();
  int ais_runs = 100;
  std::uint64_t eval_seed = 0;
  bool multinomial = false;
  int eval_sample = 0;  ///< evaluate a seeded subsample of this many test docs; 0 = all

  std::filesystem::path embeddings;  ///< optional; enables the interpretability stage
  int top_n = 10;

  std::vector<std::string> methods = {"sbm-sfc", "rs+", "rs+sfc", "rs+pruned"};

  /// Throws ArgumentError naming the first invalid field.
  void validate() const;
};

/// Parses and validates; paths are resolved relative to the config file.
PipelineConfig read_pipeline_config(const std::filesystem::path& path);
PipelineConfig parse_pipeline_config(const std::string& json_text,
                                     const std::filesystem::path& base_dir);

struct MethodResult {
  std::string method;
  int hidden = 0;
  long connections = 0;  ///< nonzero-capable hidden-visible connections
  double perplexity = 0.0;
  std::optional<double> interpretability;
  std::filesystem::path model_path;
};

struct PipelineResult {
  std::vector<MethodResult> methods;
  Skeleton skeleton;
  std::filesystem::path comparison_path;
  int stages_run = 0;
  int stages_cached = 0;
};

/// Thrown when a stage fails; what() names the stage.
class StageError : public std::runtime_error {
 public:
  StageError(const std::string& stage, const std::string& what)
      : std::runtime_error("stage '" + stage + "' failed: " + what), stage_(stage) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Runs every stage, reusing outputs whose content key is unchanged.
PipelineResult run_pipeline(const PipelineConfig& config, int threads, std::ostream& log);

/// TSV "method hidden connections perplexity interpretability".
void write_comparison(std::ostream& out, const std::vector<MethodResult>& methods);

}  // namespace sparsebm
