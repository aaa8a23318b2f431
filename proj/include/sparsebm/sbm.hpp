#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "sparsebm/common.hpp"
#include "sparsebm/corpus.hpp"
#include "sparsebm/replicated_softmax.hpp"
#include "sparsebm/training.hpp"
#include "sparsebm/tree_inference.hpp"

namespace sparsebm {

struct VisibleEdge {
  int hidden = 0;
  int visible = 0;
  friend auto operator<=>(const VisibleEdge&, const VisibleEdge&) = default;
};

/// Connectivity of a Sparse Boltzmann Machine: a bipartite hidden-word edge
/// set plus a forest over the hidden units. Immutable once built.
class SbmStructure {
 public:
  SbmStructure() = default;
  /// Validates: indices in range, no duplicates, every hidden unit has a
  /// visible edge, hidden edges form a forest.
  SbmStructure(int hidden, int visible, std::vector<VisibleEdge> visible_edges,
               std::vector<TreeEdge> tree_edges);
  /// Every hidden unit connected to every word, no hidden edges.
  static SbmStructure dense(int hidden, int visible);

  int hidden_count() const noexcept { return hidden_; }
  int vocab_size() const noexcept { return visible_; }
  /// Sorted by (hidden, visible).
  const std::vector<VisibleEdge>& visible_edges() const noexcept { return visible_edges_; }
  const std::vector<TreeEdge>& tree_edges() const noexcept { return tree_edges_; }
  const std::vector<int>& words_of(int j) const { return words_of_[j]; }
  /// (neighbor, tree-edge index) pairs for hidden unit j.
  const std::vector<std::pair<int, int>>& neighbors(int j) const { return neighbors_[j]; }
  bool connected(int j, int k) const { return mask_(j, k); }
  const ConnectionMask& mask() const noexcept { return mask_; }
  const TreeLayout& layout() const noexcept { return layout_; }
  /// Same visible edges with the hidden forest removed.
  SbmStructure without_tree() const;

  friend bool operator==(const SbmStructure& x, const SbmStructure& y) {
    return x.hidden_ == y.hidden_ && x.visible_ == y.visible_ &&
           x.visible_edges_ == y.visible_edges_ && x.tree_edges_ == y.tree_edges_;
  }

 private:
  int hidden_ = 0;
  int visible_ = 0;
  std::vector<VisibleEdge> visible_edges_;
  std::vector<TreeEdge> tree_edges_;
  std::vector<std::vector<int>> words_of_;
  std::vector<std::vector<std::pair<int, int>>> neighbors_;
  ConnectionMask mask_;
  TreeLayout layout_;
};

/// SBM parameters. W is stored densely (F x K) with every off-structure
/// entry held at exactly zero.
template <typename Scalar>
struct SbmModelT {
  SbmStructure structure;
  Matrix<Scalar> W;
  Vector<Scalar> tree_weights;  ///< one per structure.tree_edges()
  Vector<Scalar> a;
  Vector<Scalar> b;

  static SbmModelT zeros(SbmStructure s) {
    const int f = s.hidden_count(), k = s.vocab_size();
    const auto e = static_cast<Eigen::Index>(s.tree_edges().size());
    return {std::move(s), Matrix<Scalar>::Zero(f, k), Vector<Scalar>::Zero(e),
            Vector<Scalar>::Zero(f), Vector<Scalar>::Zero(k)};
  }
  int hidden_count() const { return structure.hidden_count(); }
  int vocab_size() const { return structure.vocab_size(); }

  void validate() const {
    if (W.rows() != hidden_count() || W.cols() != vocab_size() || a.size() != W.rows() ||
        b.size() != W.cols() ||
        tree_weights.size() != static_cast<Eigen::Index>(structure.tree_edges().size()))
      throw ArgumentError("SBM dimensions inconsistent with structure");
    if (!W.allFinite() || !a.allFinite() || !b.allFinite() || !tree_weights.allFinite())
      throw ArgumentError("SBM has non-finite parameters");
  }
};

using SbmModel = SbmModelT<double>;

template <typename Scalar>
Scalar sbm_energy(const SbmModelT<Scalar>& model, const Document& doc, const Vector<Scalar>& h) {
  const Scalar bipartite = bipartite_energy(model.W, model.a, model.b, doc, h);
  const auto& edges = model.structure.tree_edges();
  Scalar pair = 0;
  for (std::size_t e = 0; e < edges.size(); ++e)
    pair += model.tree_weights[e] * h[edges[e].j] * h[edges[e].l];
  return bipartite - static_cast<Scalar>(doc.length()) * pair;
}

/// P(h_j = 1 | doc, h_{-j}).
double sbm_gibbs_hidden_conditional(const SbmModel& model, const Document& doc,
                                    const HiddenState& h, int j);

/// Hidden-pair log potentials D * W_jl for a document of the given length.
VectorXd sbm_edge_couplings(const SbmModel& model, int length);

/// Exact P(h | doc) marginals by sum-product on the hidden forest.
TreePosterior sbm_tree_marginals(const SbmModel& model, const Document& doc);

/// log sum_h exp(-E(doc, h)).
double sbm_log_unnormalized(const SbmModel& model, const Document& doc);

/// One ascending-index Gibbs sweep over the hidden units given `drive`
/// (hidden_drive for the current document) and couplings D * W_jl.
void sbm_sweep_hidden(const SbmModel& model, const VectorXd& drive, const VectorXd& coupling,
                      HiddenState& h, Rng& rng);

Document sbm_sample_visible(const SbmModel& model, const HiddenState& h, int length, Rng& rng);

/// Expected sufficient statistics under P(h | doc), added with `weight`.
void sbm_accumulate_statistics(const SbmModel& model, const Document& doc, double weight,
                               ModelGradient& stats);

ModelGradient sbm_cd_gradient(const SbmModel& model, const DocumentBatch& batch, int cd_steps,
                              Rng& rng, bool mean_field_final = false);

/// Zeroes every W entry outside the structure's visible edges.
void apply_mask(SbmModel& model);
/// Builds a model from a dense weight matrix, keeping on-structure entries only.
SbmModel apply_mask(const SbmStructure& structure, const MatrixXd& dense_W,
                    const VectorXd& tree_weights, const VectorXd& a, const VectorXd& b);

void sbm_cd_step(SbmModel& model, const DocumentBatch& batch, int cd_steps, double learning_rate,
                 Rng& rng);

SbmModel sbm_initialize(const Corpus& corpus, const SbmStructure& structure,
                        const TrainConfig& config);
void sbm_fit(SbmModel& model, const Corpus& corpus, const TrainConfig& config,
             const EpochCallback& on_epoch = {});
SbmModel sbm_train(const Corpus& corpus, const SbmStructure& structure, const TrainConfig& config,
                   const EpochCallback& on_epoch = {});

/// Same parameters viewed as an RS model (tree weights dropped).
RsModel as_rs_model(const SbmModel& model);

void write_sbm_structure(std::ostream& out, const SbmStructure& structure);
void save_sbm_structure(const std::filesystem::path& path, const SbmStructure& structure);
SbmStructure read_sbm_structure(std::istream& in);
SbmStructure load_sbm_structure(const std::filesystem::path& path);

void write_sbm_model(std::ostream& out, const SbmModel& model);
void save_sbm_model(const std::filesystem::path& path, const SbmModel& model);
SbmModel read_sbm_model(std::istream& in);
SbmModel load_sbm_model(const std::filesystem::path& path);

}  // namespace sparsebm
