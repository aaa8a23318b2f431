#pragma once

#include <functional>
#include <span>

#include "sparsebm/replicated_softmax.hpp"
#include "sparsebm/sbm.hpp"

namespace sparsebm {

/// Enumeration size refused above this many (count vector, hidden state) terms.
inline constexpr double kMaxExactTerms = 1e7;

/// C(D+K-1, K-1) * 2^F.
double exact_enumeration_cost(int vocab_size, int hidden, int length);

/// Calls fn(doc) for every count vector of the given length over K words.
void for_each_document(int vocab_size, int length, const std::function<void(const Document&)>& fn);

/// log sum over token sequences of length D and hidden states of exp(-E).
/// Count vectors are enumerated once and weighted by their multinomial
/// coefficient. Throws ArgumentError when the enumeration is too large.
double exact_log_z(const RsModel& model, int length);
double exact_log_z(const SbmModel& model, int length);

/// sum_n log P(token sequence of doc n) with exact partition functions.
double exact_log_likelihood(const RsModel& model, std::span<const Document> docs);
double exact_log_likelihood(const SbmModel& model, std::span<const Document> docs);

/// Gradient of exact_log_likelihood: data statistics minus model
/// expectations per document length.
ModelGradient exact_log_likelihood_gradient(const RsModel& model, std::span<const Document> docs);
ModelGradient exact_log_likelihood_gradient(const SbmModel& model,
                                            std::span<const Document> docs);

}  // namespace sparsebm
