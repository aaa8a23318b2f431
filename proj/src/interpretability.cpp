#include "sparsebm/interpretability.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace sparsebm {

const VectorXd* EmbeddingTable::find(const std::string& word) const {
  const auto it = vectors.find(word);
  return it == vectors.end() ? nullptr : &it->second;
}

namespace {

bool is_integer(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

EmbeddingTable read_embeddings(std::istream& in) {
  EmbeddingTable table;
  std::string line;
  long line_no = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::vector<std::string> fields;
    for (std::string f; ss >> f;) fields.push_back(f);
    if (fields.empty()) continue;
    if (first_content) {
      first_content = false;
      if (fields.size() == 2 && is_integer(fields[0]) && is_integer(fields[1])) continue;
    }
    if (fields.size() < 2)
      throw ParseError("embedding line without values at line " + std::to_string(line_no),
                       line_no);
    const int d = static_cast<int>(fields.size()) - 1;
    if (table.dimension == 0) table.dimension = d;
    if (d != table.dimension)
      throw ParseError("dimension mismatch at line " + std::to_string(line_no), line_no);
    VectorXd v(d);
    for (int i = 0; i < d; ++i) {
      try {
        v[i] = parse_double(fields[i + 1]);
      } catch (const std::exception&) {
        throw ParseError("malformed value '" + fields[i + 1] + "' at line " +
                             std::to_string(line_no),
                         line_no);
      }
      if (!std::isfinite(v[i]))
        throw ParseError("non-finite value at line " + std::to_string(line_no), line_no);
    }
    auto [it, inserted] = table.vectors.insert_or_assign(fields[0], std::move(v));
    if (!inserted) ++table.duplicates;
  }
  if (table.vectors.empty()) throw ParseError("embedding file has no vectors");
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return read_embeddings(in);
}

double cosine_similarity(const VectorXd& x, const VectorXd& y) {
  const double nx = x.norm(), ny = y.norm();
  if (nx == 0.0 || ny == 0.0) return 0.0;
  return x.dot(y) / (nx * ny);
}

UnitInterpretability interpretability_of_weights(const VectorXd& weights,
                                                 const std::vector<int>& candidates,
                                                 const std::vector<std::string>& vocab,
                                                 const EmbeddingTable& emb, int top_n) {
  if (top_n < 1) throw ArgumentError("top_n must be positive");
  UnitInterpretability out;
  out.top_words = candidates;
  std::stable_sort(out.top_words.begin(), out.top_words.end(), [&](int x, int y) {
    return std::abs(weights[x]) > std::abs(weights[y]);
  });
  if (static_cast<int>(out.top_words.size()) > top_n) out.top_words.resize(top_n);
  std::vector<const VectorXd*> vecs;
  for (int w : out.top_words) {
    if (w < 0 || w >= static_cast<int>(vocab.size()))
      throw ArgumentError("vocabulary shorter than model");
    if (const VectorXd* v = emb.find(vocab[w])) {
      out.used_words.push_back(w);
      vecs.push_back(v);
    }
  }
  if (vecs.size() < 2) {
    out.insufficient = true;
    return out;
  }
  double sum = 0.0;
  int pairs = 0;
  for (std::size_t x = 0; x < vecs.size(); ++x)
    for (std::size_t y = x + 1; y < vecs.size(); ++y) {
      sum += cosine_similarity(*vecs[x], *vecs[y]);
      ++pairs;
    }
  out.score = sum / pairs;
  return out;
}

UnitInterpretability interpretability_unit(const RsModel& model, int j,
                                           const std::vector<std::string>& vocab,
                                           const EmbeddingTable& emb, int top_n,
                                           const ConnectionMask* mask) {
  if (j < 0 || j >= model.hidden_count()) throw ArgumentError("hidden index out of range");
  std::vector<int> candidates;
  for (int k = 0; k < model.vocab_size(); ++k)
    if (!mask || (*mask)(j, k)) candidates.push_back(k);
  return interpretability_of_weights(model.W.row(j).transpose(), candidates, vocab, emb, top_n);
}

UnitInterpretability interpretability_unit(const SbmModel& model, int j,
                                           const std::vector<std::string>& vocab,
                                           const EmbeddingTable& emb, int top_n) {
  if (j < 0 || j >= model.hidden_count()) throw ArgumentError("hidden index out of range");
  return interpretability_of_weights(model.W.row(j).transpose(), model.structure.words_of(j),
                                     vocab, emb, top_n);
}

namespace {

ModelInterpretability summarize(std::vector<UnitInterpretability> units) {
  if (units.empty()) throw ArgumentError("model has no hidden units");
  ModelInterpretability out;
  for (const auto& u : units) out.score += u.score;
  out.score /= static_cast<double>(units.size());
  out.units = std::move(units);
  return out;
}

}  // namespace

ModelInterpretability interpretability_model(const RsModel& model,
                                             const std::vector<std::string>& vocab,
                                             const EmbeddingTable& emb, int top_n,
                                             const ConnectionMask* mask) {
  std::vector<UnitInterpretability> units;
  for (int j = 0; j < model.hidden_count(); ++j)
    units.push_back(interpretability_unit(model, j, vocab, emb, top_n, mask));
  return summarize(std::move(units));
}

ModelInterpretability interpretability_model(const SbmModel& model,
                                             const std::vector<std::string>& vocab,
                                             const EmbeddingTable& emb, int top_n) {
  std::vector<UnitInterpretability> units;
  for (int j = 0; j < model.hidden_count(); ++j)
    units.push_back(interpretability_unit(model, j, vocab, emb, top_n));
  return summarize(std::move(units));
}

void write_interpretability_report(std::ostream& out, const ModelInterpretability& result,
                                   const std::vector<std::string>& vocab) {
  out << "hidden\tscore\tn_used\tflag\ttop_words\n";
  for (std::size_t j = 0; j < result.units.size(); ++j) {
    const auto& u = result.units[j];
    out << j << '\t' << format_double(u.score) << '\t' << u.used_words.size() << '\t'
        << (u.insufficient ? "insufficient" : "ok") << '\t';
    for (std::size_t i = 0; i < u.top_words.size(); ++i)
      out << (i ? "," : "") << vocab[u.top_words[i]];
    out << '\n';
  }
  out << "# interpretability\t" << format_double(result.score) << '\n';
}

}  // namespace sparsebm
