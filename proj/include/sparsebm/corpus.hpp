#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sparsebm/common.hpp"

namespace sparsebm {

struct WordCount {
  int word = 0;
  int count = 0;
  friend bool operator==(const WordCount&, const WordCount&) = default;
};

/// Bag-of-words document: entries sorted by word index, counts strictly positive.
class Document {
 public:
  Document() = default;
  /// Merges duplicate words and drops zero counts.
  explicit Document(std::vector<WordCount> entries);
  static Document from_dense(std::span<const int> counts);
  /// Builds counts from token word indices already sorted ascending.
  static Document from_sorted_tokens(std::span<const int> tokens);

  const std::vector<WordCount>& entries() const noexcept { return entries_; }
  int length() const noexcept { return length_; }
  bool empty() const noexcept { return length_ == 0; }
  int count(int word) const;
  bool contains(int word) const { return count(word) > 0; }
  std::vector<int> dense(int vocab_size) const;

  friend bool operator==(const Document&, const Document&) = default;

 private:
  std::vector<WordCount> entries_;
  int length_ = 0;
};

struct Corpus {
  std::string name;
  std::vector<std::string> vocab;
  std::vector<Document> docs;

  int vocab_size() const noexcept { return static_cast<int>(vocab.size()); }
  int size() const noexcept { return static_cast<int>(docs.size()); }
  /// Throws StructuralError on duplicate/empty vocab entries or out-of-range words.
  void validate() const;
  /// Corpus-wide count per word.
  std::vector<std::int64_t> word_totals() const;
  /// Number of documents containing each word.
  std::vector<int> document_frequencies() const;
};

struct LoadedCorpus {
  Corpus corpus;
  int dropped_empty = 0;
};

/// UCI bag-of-words: docword (N, K, NNZ header then "doc word count", 1-based)
/// plus a vocab file with K lines.
LoadedCorpus load_uci_bow(const std::filesystem::path& docword_path,
                          const std::filesystem::path& vocab_path);
void write_uci_bow(const Corpus& corpus, const std::filesystem::path& docword_path,
                   const std::filesystem::path& vocab_path);

/// Vocabulary file stored next to a docword file: "<docword>.vocab".
std::filesystem::path default_vocab_path(const std::filesystem::path& docword_path);
/// load_uci_bow with the default vocabulary path.
LoadedCorpus load_corpus(const std::filesystem::path& docword_path);
/// write_uci_bow with the default vocabulary path.
void save_corpus(const Corpus& corpus, const std::filesystem::path& docword_path);

enum class VocabMethod { Frequency, TfIdf };
VocabMethod parse_vocab_method(const std::string& name);

/// Per-word ranking score used by select_vocab.
std::vector<double> vocab_scores(const Corpus& corpus, VocabMethod method);

/// Keeps the top `k` words (ties to the lower original index) and drops
/// documents left empty. Kept words retain their original relative order.
Corpus select_vocab(const Corpus& corpus, int k, VocabMethod method);

struct CorpusSplit {
  Corpus train;
  Corpus validation;
  Corpus test;
  std::uint64_t seed = 0;
  /// Source-corpus document indices for each part.
  std::vector<int> train_ids, validation_ids, test_ids;
};

CorpusSplit split_corpus(const Corpus& corpus, std::uint64_t seed, int n_train, int n_val,
                         int n_test);
void write_index_list(const std::vector<int>& ids, const std::filesystem::path& path);
std::vector<int> read_index_list(const std::filesystem::path& path);

/// Corpus restricted to the given documents, in the given order.
Corpus subset(const Corpus& corpus, std::span<const int> doc_ids);

/// Seeded per-epoch shuffled minibatches of document indices.
class Minibatcher {
 public:
  Minibatcher(int n_docs, int batch_size, std::uint64_t seed);
  /// Batches for `epoch`; depends only on (seed, epoch).
  std::vector<std::vector<int>> epoch(int epoch) const;
  int batches_per_epoch() const noexcept;

 private:
  int n_docs_;
  int batch_size_;
  std::uint64_t seed_;
};

}  // namespace sparsebm
