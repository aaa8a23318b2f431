#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "sparsebm/replicated_softmax.hpp"
#include "sparsebm/sbm.hpp"

namespace sparsebm {

struct EmbeddingTable {
  int dimension = 0;
  std::unordered_map<std::string, VectorXd> vectors;
  int duplicates = 0;  ///< lines overridden by a later occurrence of the same word

  const VectorXd* find(const std::string& word) const;
};

/// One "word v1 ... vd" line per word. A leading "count dim" header line, as
/// written by word2vec, is skipped. Duplicates: the last occurrence wins.
EmbeddingTable read_embeddings(std::istream& in);
EmbeddingTable load_embeddings(const std::filesystem::path& path);

/// Cosine similarity; 0 when either vector is zero.
double cosine_similarity(const VectorXd& x, const VectorXd& y);

struct UnitInterpretability {
  double score = 0.0;
  std::vector<int> top_words;   ///< ranked candidates before the vocabulary skip
  std::vector<int> used_words;  ///< those found in the embedding table
  bool insufficient = false;    ///< fewer than two words survived; score is 0
};

/// Mean pairwise cosine over the embedded words among `candidates` ranked by
/// |weights[k]| (ties to the lower index), truncated to top_n.
UnitInterpretability interpretability_of_weights(const VectorXd& weights,
                                                 const std::vector<int>& candidates,
                                                 const std::vector<std::string>& vocab,
                                                 const EmbeddingTable& emb, int top_n);

/// Ranks all words, or only unmasked ones when `mask` is given.
UnitInterpretability interpretability_unit(const RsModel& model, int j,
                                           const std::vector<std::string>& vocab,
                                           const EmbeddingTable& emb, int top_n = 10,
                                           const ConnectionMask* mask = nullptr);
/// Ranks connected words only.
UnitInterpretability interpretability_unit(const SbmModel& model, int j,
                                           const std::vector<std::string>& vocab,
                                           const EmbeddingTable& emb, int top_n = 10);

struct ModelInterpretability {
  double score = 0.0;  ///< mean of unit scores
  std::vector<UnitInterpretability> units;
};

ModelInterpretability interpretability_model(const RsModel& model,
                                             const std::vector<std::string>& vocab,
                                             const EmbeddingTable& emb, int top_n = 10,
                                             const ConnectionMask* mask = nullptr);
ModelInterpretability interpretability_model(const SbmModel& model,
                                             const std::vector<std::string>& vocab,
                                             const EmbeddingTable& emb, int top_n = 10);

/// TSV "hidden score n_used flag top_words" plus a summary line.
void write_interpretability_report(std::ostream& out, const ModelInterpretability& result,
                                   const std::vector<std::string>& vocab);

}  // namespace sparsebm
