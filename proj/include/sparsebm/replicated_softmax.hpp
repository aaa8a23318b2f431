#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "sparsebm/common.hpp"
#include "sparsebm/corpus.hpp"
#include "sparsebm/training.hpp"

namespace sparsebm {

/// Replicated Softmax: F binary hidden units over D shared-weight softmax
/// tokens drawn from a K-word vocabulary.
template <typename Scalar>
struct RsModelT {
  Matrix<Scalar> W;  ///< F x K hidden-to-word weights
  Vector<Scalar> a;  ///< hidden biases, scaled by D in the energy
  Vector<Scalar> b;  ///< word biases

  static RsModelT zeros(int hidden, int visible) {
    return {Matrix<Scalar>::Zero(hidden, visible), Vector<Scalar>::Zero(hidden),
            Vector<Scalar>::Zero(visible)};
  }
  int hidden_count() const { return static_cast<int>(W.rows()); }
  int vocab_size() const { return static_cast<int>(W.cols()); }

  void validate() const {
    if (a.size() != W.rows() || b.size() != W.cols())
      throw ArgumentError("RS model dimensions inconsistent");
    if (!W.allFinite() || !a.allFinite() || !b.allFinite())
      throw ArgumentError("RS model has non-finite parameters");
  }
};

using RsModel = RsModelT<double>;

/// Binary hidden configuration stored as 0/1 reals so it composes with Eigen products.
using HiddenState = VectorXd;

/// Per-hidden-unit input D*a_j + sum_k W_j^k u^k.
template <typename Scalar>
Vector<Scalar> hidden_drive(const Matrix<Scalar>& W, const Vector<Scalar>& a,
                            const Document& doc) {
  Vector<Scalar> drive = a * static_cast<Scalar>(doc.length());
  for (const auto& e : doc.entries()) drive += W.col(e.word) * static_cast<Scalar>(e.count);
  return drive;
}

/// -sum W h u - sum u b - D sum h a. Shared with the SBM energy so a
/// tree-free SBM reproduces this value exactly.
template <typename Scalar>
Scalar bipartite_energy(const Matrix<Scalar>& W, const Vector<Scalar>& a,
                        const Vector<Scalar>& b, const Document& doc,
                        const Vector<Scalar>& h) {
  if (h.size() != W.rows()) throw ArgumentError("hidden state size mismatch");
  for (const auto& e : doc.entries())
    if (e.word >= W.cols()) throw ArgumentError("document word outside model vocabulary");
  Scalar interaction = 0, visible = 0;
  for (const auto& e : doc.entries()) {
    interaction += h.dot(W.col(e.word)) * static_cast<Scalar>(e.count);
    visible += b[e.word] * static_cast<Scalar>(e.count);
  }
  const Scalar hidden = static_cast<Scalar>(doc.length()) * h.dot(a);
  return -interaction - visible - hidden;
}

template <typename Scalar>
Scalar rs_energy(const RsModelT<Scalar>& model, const Document& doc, const Vector<Scalar>& h) {
  return bipartite_energy(model.W, model.a, model.b, doc, h);
}

/// P(h_j = 1 | doc) for every j; exact because the RS posterior factorizes.
template <typename Scalar>
Vector<Scalar> rs_hidden_conditional(const RsModelT<Scalar>& model, const Document& doc) {
  return hidden_drive(model.W, model.a, doc).unaryExpr([](Scalar x) { return sigmoid(x); });
}

/// Word distribution of a single token given h.
VectorXd rs_visible_distribution(const RsModel& model, const HiddenState& h);

Document rs_sample_visible(const RsModel& model, const HiddenState& h, int length, Rng& rng);

/// log sum_h exp(-E(doc, h)): the unnormalized log probability of the document.
double rs_log_unnormalized(const RsModel& model, const Document& doc);

/// Expected sufficient statistics under P(h | doc), added with `weight`.
void rs_accumulate_statistics(const RsModel& model, const Document& doc, double weight,
                              ModelGradient& stats);

/// Batch-averaged CD-T estimate of d log P / d theta.
ModelGradient rs_cd_gradient(const RsModel& model, const DocumentBatch& batch, int cd_steps,
                             Rng& rng, bool mean_field_final = false);

/// Connection mask (true = connection kept). Used by the pruning baseline.
using ConnectionMask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

void apply_connection_mask(RsModel& model, const ConnectionMask& mask);

/// One CD-T update on a minibatch.
void rs_cd_step(RsModel& model, const DocumentBatch& batch, int cd_steps, double learning_rate,
                Rng& rng);

RsModel rs_initialize(const Corpus& corpus, int hidden, const TrainConfig& config);

/// Runs `config.epochs` epochs of CD starting from `model`. When `mask` is
/// given it is enforced after every update.
void rs_fit(RsModel& model, const Corpus& corpus, const TrainConfig& config,
            const ConnectionMask* mask = nullptr, const EpochCallback& on_epoch = {});

RsModel rs_train(const Corpus& corpus, int hidden, const TrainConfig& config,
                 const EpochCallback& on_epoch = {});

void write_rs_model(std::ostream& out, const RsModel& model,
                    const ConnectionMask* mask = nullptr);
void save_rs_model(const std::filesystem::path& path, const RsModel& model,
                   const ConnectionMask* mask = nullptr);

struct LoadedRsModel {
  RsModel model;
  std::optional<ConnectionMask> mask;
};
LoadedRsModel read_rs_model(std::istream& in);
LoadedRsModel load_rs_model(const std::filesystem::path& path);

}  // namespace sparsebm
