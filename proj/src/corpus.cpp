#include "sparsebm/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace sparsebm {

Document::Document(std::vector<WordCount> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const WordCount& x, const WordCount& y) { return x.word < y.word; });
  for (const auto& e : entries) {
    if (e.count < 0) throw ArgumentError("negative word count");
    if (e.count == 0) continue;
    if (!entries_.empty() && entries_.back().word == e.word)
      entries_.back().count += e.count;
    else
      entries_.push_back(e);
    length_ += e.count;
  }
}

Document Document::from_dense(std::span<const int> counts) {
  std::vector<WordCount> entries;
  for (std::size_t k = 0; k < counts.size(); ++k)
    if (counts[k] != 0) entries.push_back({static_cast<int>(k), counts[k]});
  return Document(std::move(entries));
}

Document Document::from_sorted_tokens(std::span<const int> tokens) {
  Document d;
  for (int w : tokens) {
    if (!d.entries_.empty() && d.entries_.back().word == w)
      ++d.entries_.back().count;
    else
      d.entries_.push_back({w, 1});
  }
  d.length_ = static_cast<int>(tokens.size());
  return d;
}

int Document::count(int word) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), word,
                             [](const WordCount& e, int w) { return e.word < w; });
  return (it != entries_.end() && it->word == word) ? it->count : 0;
}

std::vector<int> Document::dense(int vocab_size) const {
  std::vector<int> out(vocab_size, 0);
  for (const auto& e : entries_) out.at(e.word) = e.count;
  return out;
}

void Corpus::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& w : vocab) {
    if (w.empty()) throw StructuralError("empty vocabulary entry");
    if (!seen.insert(w).second) throw StructuralError("duplicate vocabulary entry '" + w + "'");
  }
  for (const auto& d : docs)
    for (const auto& e : d.entries())
      if (e.word < 0 || e.word >= vocab_size())
        throw StructuralError("document references word " + std::to_string(e.word) +
                              " outside vocabulary of size " + std::to_string(vocab_size()));
}

std::vector<std::int64_t> Corpus::word_totals() const {
  std::vector<std::int64_t> totals(vocab.size(), 0);
  for (const auto& d : docs)
    for (const auto& e : d.entries()) totals[e.word] += e.count;
  return totals;
}

std::vector<int> Corpus::document_frequencies() const {
  std::vector<int> df(vocab.size(), 0);
  for (const auto& d : docs)
    for (const auto& e : d.entries()) ++df[e.word];
  return df;
}

namespace {

bool next_content_line(std::istream& in, std::string& line, long& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
  }
  return false;
}

long parse_header_value(std::istream& in, long& line_no, const char* what) {
  std::string line;
  if (!next_content_line(in, line, line_no))
    throw ParseError(std::string("missing header value ") + what, line_no);
  std::istringstream ss(line);
  long v = -1;
  std::string rest;
  if (!(ss >> v) || (ss >> rest) || v < 0)
    throw ParseError(std::string("malformed header value ") + what + " at line " +
                         std::to_string(line_no),
                     line_no);
  return v;
}

std::vector<std::string> read_vocab(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open vocab file " + path.string());
  std::vector<std::string> vocab;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
      line.pop_back();
    if (line.empty()) continue;
    vocab.push_back(line);
  }
  return vocab;
}

}  // namespace

std::filesystem::path default_vocab_path(const std::filesystem::path& docword_path) {
  return std::filesystem::path(docword_path.string() + ".vocab");
}

LoadedCorpus load_corpus(const std::filesystem::path& docword_path) {
  return load_uci_bow(docword_path, default_vocab_path(docword_path));
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& docword_path) {
  write_uci_bow(corpus, docword_path, default_vocab_path(docword_path));
}

LoadedCorpus load_uci_bow(const std::filesystem::path& docword_path,
                          const std::filesystem::path& vocab_path) {
  std::ifstream in(docword_path);
  if (!in) throw ParseError("cannot open docword file " + docword_path.string());
  long line_no = 0;
  const long n_docs = parse_header_value(in, line_no, "N");
  const long k_words = parse_header_value(in, line_no, "K");
  const long nnz = parse_header_value(in, line_no, "NNZ");

  std::vector<std::vector<WordCount>> rows(n_docs);
  std::string line;
  long read = 0;
  while (next_content_line(in, line, line_no)) {
    std::istringstream ss(line);
    long doc = 0, word = 0, count = 0;
    std::string rest;
    if (!(ss >> doc >> word >> count) || (ss >> rest))
      throw ParseError("malformed entry at line " + std::to_string(line_no), line_no);
    if (doc < 1 || doc > n_docs)
      throw ParseError("document ID " + std::to_string(doc) + " exceeds N=" +
                           std::to_string(n_docs) + " at line " + std::to_string(line_no),
                       line_no);
    if (word < 1 || word > k_words)
      throw ParseError("word ID " + std::to_string(word) + " exceeds K=" +
                           std::to_string(k_words) + " at line " + std::to_string(line_no),
                       line_no);
    if (count <= 0)
      throw ParseError("non-positive count at line " + std::to_string(line_no), line_no);
    rows[doc - 1].push_back({static_cast<int>(word - 1), static_cast<int>(count)});
    ++read;
  }
  if (read != nnz)
    throw ParseError("header declares NNZ=" + std::to_string(nnz) + " but file has " +
                         std::to_string(read) + " entries",
                     line_no);

  LoadedCorpus out;
  out.corpus.name = docword_path.stem().string();
  out.corpus.vocab = read_vocab(vocab_path);
  if (static_cast<long>(out.corpus.vocab.size()) != k_words)
    throw StructuralError("vocab file has " + std::to_string(out.corpus.vocab.size()) +
                          " words but docword header declares K=" + std::to_string(k_words));
  out.corpus.docs.reserve(n_docs);
  for (auto& r : rows) {
    Document d(std::move(r));
    if (d.empty())
      ++out.dropped_empty;
    else
      out.corpus.docs.push_back(std::move(d));
  }
  out.corpus.validate();
  return out;
}

void write_uci_bow(const Corpus& corpus, const std::filesystem::path& docword_path,
                   const std::filesystem::path& vocab_path) {
  std::size_t nnz = 0;
  for (const auto& d : corpus.docs) nnz += d.entries().size();
  std::ofstream out(docword_path);
  if (!out) throw std::runtime_error("cannot write " + docword_path.string());
  out << corpus.docs.size() << '\n' << corpus.vocab.size() << '\n' << nnz << '\n';
  for (std::size_t n = 0; n < corpus.docs.size(); ++n)
    for (const auto& e : corpus.docs[n].entries())
      out << (n + 1) << ' ' << (e.word + 1) << ' ' << e.count << '\n';
  std::ofstream vout(vocab_path);
  if (!vout) throw std::runtime_error("cannot write " + vocab_path.string());
  for (const auto& w : corpus.vocab) vout << w << '\n';
}

VocabMethod parse_vocab_method(const std::string& name) {
  if (name == "frequency") return VocabMethod::Frequency;
  if (name == "tfidf") return VocabMethod::TfIdf;
  throw ArgumentError("unknown vocabulary selection method '" + name + "'");
}

std::vector<double> vocab_scores(const Corpus& corpus, VocabMethod method) {
  const int k = corpus.vocab_size();
  std::vector<double> score(k, 0.0);
  if (method == VocabMethod::Frequency) {
    const auto totals = corpus.word_totals();
    for (int w = 0; w < k; ++w) score[w] = static_cast<double>(totals[w]);
    return score;
  }
  // Average over all N documents of (c/D) * log(N / df); absent words add 0.
  const auto df = corpus.document_frequencies();
  const double n = corpus.size();
  for (const auto& d : corpus.docs)
    for (const auto& e : d.entries())
      score[e.word] += (static_cast<double>(e.count) / d.length()) * std::log(n / df[e.word]);
  for (auto& s : score) s /= n;
  return score;
}

Corpus select_vocab(const Corpus& corpus, int k, VocabMethod method) {
  if (k <= 0 || k > corpus.vocab_size())
    throw ArgumentError("select_vocab: K=" + std::to_string(k) + " outside 1.." +
                        std::to_string(corpus.vocab_size()));
  const auto score = vocab_scores(corpus, method);
  std::vector<int> order(corpus.vocab_size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return score[x] > score[y]; });
  std::vector<int> kept(order.begin(), order.begin() + k);
  std::sort(kept.begin(), kept.end());

  std::vector<int> remap(corpus.vocab_size(), -1);
  Corpus out;
  out.name = corpus.name;
  for (int i = 0; i < k; ++i) {
    remap[kept[i]] = i;
    out.vocab.push_back(corpus.vocab[kept[i]]);
  }
  for (const auto& d : corpus.docs) {
    std::vector<WordCount> entries;
    for (const auto& e : d.entries())
      if (remap[e.word] >= 0) entries.push_back({remap[e.word], e.count});
    Document nd(std::move(entries));
    if (!nd.empty()) out.docs.push_back(std::move(nd));
  }
  return out;
}

Corpus subset(const Corpus& corpus, std::span<const int> doc_ids) {
  Corpus out;
  out.name = corpus.name;
  out.vocab = corpus.vocab;
  out.docs.reserve(doc_ids.size());
  for (int id : doc_ids) out.docs.push_back(corpus.docs.at(id));
  return out;
}

CorpusSplit split_corpus(const Corpus& corpus, std::uint64_t seed, int n_train, int n_val,
                         int n_test) {
  if (n_train < 0 || n_val < 0 || n_test < 0)
    throw ArgumentError("split sizes must be non-negative");
  if (static_cast<long>(n_train) + n_val + n_test > corpus.size())
    throw ArgumentError("split sizes " + std::to_string(n_train) + "+" + std::to_string(n_val) +
                        "+" + std::to_string(n_test) + " exceed N=" +
                        std::to_string(corpus.size()));
  std::vector<int> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = derive_rng(seed, 0x5911ULL);
  shuffle_in_place(std::span<int>(order), rng);

  CorpusSplit split;
  split.seed = seed;
  split.train_ids.assign(order.begin(), order.begin() + n_train);
  split.validation_ids.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  split.test_ids.assign(order.begin() + n_train + n_val,
                        order.begin() + n_train + n_val + n_test);
  split.train = subset(corpus, split.train_ids);
  split.validation = subset(corpus, split.validation_ids);
  split.test = subset(corpus, split.test_ids);
  split.train.name = corpus.name + ".train";
  split.validation.name = corpus.name + ".validation";
  split.test.name = corpus.name + ".test";
  return split;
}

void write_index_list(const std::vector<int>& ids, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (int id : ids) out << id << '\n';
}

std::vector<int> read_index_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<int> ids;
  std::string line;
  long line_no = 0;
  while (next_content_line(in, line, line_no)) {
    std::istringstream ss(line);
    int id = 0;
    if (!(ss >> id) || id < 0)
      throw ParseError("malformed index at line " + std::to_string(line_no), line_no);
    ids.push_back(id);
  }
  return ids;
}

Minibatcher::Minibatcher(int n_docs, int batch_size, std::uint64_t seed)
    : n_docs_(n_docs), batch_size_(batch_size), seed_(seed) {
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (n_docs < 0) throw ArgumentError("negative document count");
}

int Minibatcher::batches_per_epoch() const noexcept {
  return (n_docs_ + batch_size_ - 1) / batch_size_;
}

std::vector<std::vector<int>> Minibatcher::epoch(int epoch) const {
  std::vector<int> order(n_docs_);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = derive_rng(seed_, 0xBA7C0000ULL + static_cast<std::uint64_t>(epoch));
  shuffle_in_place(std::span<int>(order), rng);
  std::vector<std::vector<int>> batches;
  batches.reserve(batches_per_epoch());
  for (int start = 0; start < n_docs_; start += batch_size_) {
    const int end = std::min(n_docs_, start + batch_size_);
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

}  // namespace sparsebm
