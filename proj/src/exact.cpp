#include "sparsebm/exact.hpp"

#include <cmath>
#include <map>
#include <string>

namespace sparsebm {

double exact_enumeration_cost(int vocab_size, int hidden, int length) {
  // C(D+K-1, K-1) computed in floating point; exact well past the refusal limit.
  double c = 1.0;
  for (int i = 1; i < vocab_size; ++i) c = c * (length + i) / i;
  return c * std::ldexp(1.0, hidden);
}

void for_each_document(int vocab_size, int length,
                       const std::function<void(const Document&)>& fn) {
  if (vocab_size < 1 || length < 0) throw ArgumentError("invalid enumeration size");
  std::vector<int> counts(vocab_size, 0);
  auto rec = [&](auto&& self, int k, int remaining) -> void {
    if (k == vocab_size - 1) {
      counts[k] = remaining;
      fn(Document::from_dense(counts));
      counts[k] = 0;
      return;
    }
    for (int c = remaining; c >= 0; --c) {
      counts[k] = c;
      self(self, k + 1, remaining - c);
    }
    counts[k] = 0;
  };
  rec(rec, 0, length);
}

namespace {

void check_feasible(int vocab_size, int hidden, int length) {
  if (length < 1) throw ArgumentError("document length must be >= 1");
  const double cost = exact_enumeration_cost(vocab_size, hidden, length);
  if (cost > kMaxExactTerms)
    throw ArgumentError("exact enumeration refused: " + format_double(cost) +
                        " terms exceeds the limit of 1e7");
}

double log_doc_weight(const Document& doc) {
  std::vector<int> counts;
  counts.reserve(doc.entries().size());
  for (const auto& e : doc.entries()) counts.push_back(e.count);
  return log_multinomial(counts);
}

template <typename Model, typename LogUnnorm>
double exact_log_z_impl(const Model& model, int length, LogUnnorm log_unnorm) {
  model.validate();
  check_feasible(model.vocab_size(), model.hidden_count(), length);
  std::vector<double> terms;
  for_each_document(model.vocab_size(), length, [&](const Document& doc) {
    terms.push_back(log_doc_weight(doc) + log_unnorm(model, doc));
  });
  return log_sum_exp(terms);
}

template <typename Model, typename LogZ, typename LogUnnorm>
double exact_log_likelihood_impl(const Model& model, std::span<const Document> docs, LogZ log_z,
                                 LogUnnorm log_unnorm) {
  std::map<int, double> z;
  double total = 0.0;
  for (const auto& doc : docs) {
    auto it = z.find(doc.length());
    if (it == z.end()) it = z.emplace(doc.length(), log_z(model, doc.length())).first;
    total += log_unnorm(model, doc) - it->second;
  }
  return total;
}

template <typename Model, typename LogZ, typename LogUnnorm, typename Accumulate>
ModelGradient exact_gradient_impl(const Model& model, std::span<const Document> docs,
                                  int tree_edges, LogZ log_z, LogUnnorm log_unnorm,
                                  Accumulate accumulate) {
  ModelGradient g = ModelGradient::zeros(model.hidden_count(), model.vocab_size(), tree_edges);
  std::map<int, int> per_length;
  for (const auto& doc : docs) {
    accumulate(model, doc, 1.0, g);
    ++per_length[doc.length()];
  }
  for (const auto& [length, n] : per_length) {
    const double lz = log_z(model, length);
    for_each_document(model.vocab_size(), length, [&](const Document& doc) {
      const double p = std::exp(log_doc_weight(doc) + log_unnorm(model, doc) - lz);
      accumulate(model, doc, -n * p, g);
    });
  }
  return g;
}

double rs_log_z(const RsModel& m, int d) { return exact_log_z(m, d); }
double sbm_log_z(const SbmModel& m, int d) { return exact_log_z(m, d); }

}  // namespace

double exact_log_z(const RsModel& model, int length) {
  return exact_log_z_impl(model, length, rs_log_unnormalized);
}

double exact_log_z(const SbmModel& model, int length) {
  return exact_log_z_impl(model, length, sbm_log_unnormalized);
}

double exact_log_likelihood(const RsModel& model, std::span<const Document> docs) {
  return exact_log_likelihood_impl(model, docs, rs_log_z, rs_log_unnormalized);
}

double exact_log_likelihood(const SbmModel& model, std::span<const Document> docs) {
  return exact_log_likelihood_impl(model, docs, sbm_log_z, sbm_log_unnormalized);
}

ModelGradient exact_log_likelihood_gradient(const RsModel& model, std::span<const Document> docs) {
  return exact_gradient_impl(model, docs, 0, rs_log_z, rs_log_unnormalized,
                             rs_accumulate_statistics);
}

ModelGradient exact_log_likelihood_gradient(const SbmModel& model,
                                            std::span<const Document> docs) {
  ModelGradient g =
      exact_gradient_impl(model, docs, static_cast<int>(model.structure.tree_edges().size()),
                          sbm_log_z, sbm_log_unnormalized, sbm_accumulate_statistics);
  g.W = model.structure.mask().select(g.W, 0.0);
  return g;
}

}  // namespace sparsebm
