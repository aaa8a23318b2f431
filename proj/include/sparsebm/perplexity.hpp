#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "sparsebm/ais.hpp"

namespace sparsebm {

struct PerplexityOptions {
  AisOptions ais;
  /// Add log(D! / prod u_k!) so probabilities are over count vectors.
  bool include_multinomial = false;
  /// Use exact_log_z instead of AIS (tiny models only).
  bool exact = false;
};

struct DocumentScore {
  int doc_id = 0;
  int length = 0;
  double log_p = 0.0;
  double per_word_perplexity = 0.0;
};

struct PerplexityReport {
  double perplexity = 0.0;
  std::vector<DocumentScore> docs;
  std::map<int, AisEstimate> log_z;  ///< one entry per distinct length
  bool multinomial = false;
  bool exact = false;
};

/// exp(-(1/N) sum_n log P(u_n) / D_n), with log Z estimated once per distinct length.
PerplexityReport perplexity(const RsModel& model, std::span<const Document> docs,
                            const PerplexityOptions& options);
PerplexityReport perplexity(const SbmModel& model, std::span<const Document> docs,
                            const PerplexityOptions& options);

/// TSV "doc_id D log_p per_word_ppl" followed by a '#'-prefixed summary block.
void write_perplexity_report(std::ostream& out, const PerplexityReport& report);

}  // namespace sparsebm
