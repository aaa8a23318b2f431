#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sparsebm/corpus.hpp"
#include "sparsebm/sbm.hpp"

namespace sparsebm {

enum class SkeletonProvenance { Built, Loaded };

/// Top-layer latent grouping: each hidden unit owns a disjoint set of words
/// (together covering the vocabulary) and hidden units are linked by a forest.
struct Skeleton {
  std::vector<std::vector<int>> groups;
  std::vector<TreeEdge> tree_edges;
  SkeletonProvenance provenance = SkeletonProvenance::Built;

  int hidden_count() const { return static_cast<int>(groups.size()); }
  /// Throws StructuralError on overlap, gap, out-of-range index, or a cycle.
  void validate(int vocab_size) const;
  /// word -> owning hidden unit.
  std::vector<int> owners(int vocab_size) const;
  SbmStructure to_structure(int vocab_size) const;
};

struct SkeletonConfig {
  int island_max = 7;
  int supergroup_max = 5;
  /// Minimum mutual information (nats) for growing islands and supergroups.
  /// Negative selects the 0.1% chi-square significance level 10.83 / (2N).
  double mi_floor = -1.0;
  /// Growth also requires MI above this fraction of the strongest pairwise
  /// MI at the same level, so weak but significant links do not merge groups.
  double relative_floor = 0.2;
};

/// Mutual information (nats) between two binary indicators from counts:
/// n11 joint occurrences, n1x / nx1 marginal occurrences, n total.
double binary_mutual_information(double n11, double n1x, double nx1, double n);

/// Two-level greedy MI grouping of word-occurrence indicators with a
/// maximum-spanning-tree over the resulting groups. Deterministic.
Skeleton build_skeleton(const Corpus& corpus, const SkeletonConfig& config = {});

/// Format: one "j: v v ..." line per hidden unit, then "[tree]" and "j l" rows.
Skeleton read_skeleton(std::istream& in, int vocab_size);
Skeleton load_skeleton(const std::filesystem::path& path, int vocab_size);
void write_skeleton(std::ostream& out, const Skeleton& skeleton);
void save_skeleton(const std::filesystem::path& path, const Skeleton& skeleton);

/// Joint table p[z][z'][v] over three binary variables.
using TripleTable = std::array<std::array<std::array<double, 2>, 2>, 2>;

/// I(Z; V | Z') in nats from a (not necessarily normalized) joint table.
double conditional_mutual_information(const TripleTable& joint);

/// Empirical p(Z_j, Z', v') for Z' the hidden unit owning v', accumulated as
/// the mean over documents of p(Z_j, Z' | doc) times the occurrence indicator.
TripleTable estimate_cmi_joint(const SbmModel& tree_model, const Corpus& corpus, int j, int word);

double estimate_cmi(const SbmModel& tree_model, const Corpus& corpus, int j, int word);

/// Posterior P(Z_j = x, Z_u = y | doc) for every hidden pair (j, u),
/// indexed [j * F + u]; adjacent pairs come from the edge marginals and
/// others from two clamped passes on Z_u.
std::vector<Eigen::Matrix2d> pairwise_hidden_posteriors(const SbmModel& model,
                                                        const Document& doc);

struct CmiEntry {
  int word = 0;
  double score = 0.0;
};

/// Per hidden unit, every unconnected word with its score sorted by
/// descending score (ties by ascending word).
struct CmiTable {
  std::vector<std::vector<CmiEntry>> per_hidden;
};

CmiTable compute_cmi_table(const SbmModel& tree_model, const Corpus& corpus, int threads = 1);
void write_cmi_tsv(std::ostream& out, const CmiTable& table);

/// How many new connections each hidden unit gets.
struct ExpansionBudget {
  /// Target per-unit degree as a fraction of K (ceil); used unless
  /// `per_unit` is set.
  double fraction = 0.2;
  std::optional<int> per_unit;
  std::map<int, int> overrides;

  int resolve(int hidden, int group_size, int vocab_size) const;
};

struct Expansion {
  SbmStructure structure;
  CmiTable cmi;
  std::vector<int> added;  ///< connections added per hidden unit
  std::vector<std::string> warnings;
};

/// Adds to each hidden unit its top-M_j unconnected words by conditional
/// mutual information; tree edges are copied from the skeleton.
Expansion sbm_sfc(const Skeleton& skeleton, const SbmModel& tree_model, const Corpus& corpus,
                  const ExpansionBudget& budget, int threads = 1);
/// Reuses a precomputed CMI table.
Expansion expand_with_table(const Skeleton& skeleton, const CmiTable& cmi, int vocab_size,
                            const ExpansionBudget& budget);

}  // namespace sparsebm
