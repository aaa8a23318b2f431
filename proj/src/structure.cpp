#include "sparsebm/structure.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "sparsebm/parallel.hpp"

namespace sparsebm {

// ---------------------------------------------------------------------------
// Skeleton

void Skeleton::validate(int vocab_size) const {
  if (groups.empty()) throw StructuralError("skeleton has no hidden units");
  std::vector<int> owner(vocab_size, -1);
  for (std::size_t j = 0; j < groups.size(); ++j) {
    if (groups[j].empty())
      throw StructuralError("hidden " + std::to_string(j) + " has an empty group");
    for (int v : groups[j]) {
      if (v < 0 || v >= vocab_size)
        throw StructuralError("visible " + std::to_string(v) + " out of range (K=" +
                              std::to_string(vocab_size) + ")");
      if (owner[v] >= 0) throw StructuralError("visible " + std::to_string(v) + " assigned twice");
      owner[v] = static_cast<int>(j);
    }
  }
  for (int v = 0; v < vocab_size; ++v)
    if (owner[v] < 0) throw StructuralError("visible " + std::to_string(v) + " not assigned");
  TreeLayout(hidden_count(), tree_edges);
}

std::vector<int> Skeleton::owners(int vocab_size) const {
  std::vector<int> owner(vocab_size, -1);
  for (std::size_t j = 0; j < groups.size(); ++j)
    for (int v : groups[j]) owner.at(v) = static_cast<int>(j);
  return owner;
}

SbmStructure Skeleton::to_structure(int vocab_size) const {
  validate(vocab_size);
  std::vector<VisibleEdge> edges;
  for (std::size_t j = 0; j < groups.size(); ++j)
    for (int v : groups[j]) edges.push_back({static_cast<int>(j), v});
  return SbmStructure(hidden_count(), vocab_size, std::move(edges), tree_edges);
}

double binary_mutual_information(double n11, double n1x, double nx1, double n) {
  if (n <= 0) return 0.0;
  const double cells[2][2] = {{n - n1x - nx1 + n11, nx1 - n11}, {n1x - n11, n11}};
  const double row[2] = {n - n1x, n1x};
  const double col[2] = {n - nx1, nx1};
  double mi = 0.0;
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      const double c = cells[x][y];
      if (c <= 0) continue;
      mi += (c / n) * std::log(c * n / (row[x] * col[y]));
    }
  return mi;
}

namespace {

/// Pairwise MI between binary indicator variables given per-document lists
/// of the variables that are on.
MatrixXd indicator_mutual_information(const std::vector<std::vector<int>>& present, int n_vars) {
  MatrixXd co = MatrixXd::Zero(n_vars, n_vars);
  for (const auto& on : present)
    for (std::size_t x = 0; x < on.size(); ++x)
      for (std::size_t y = x; y < on.size(); ++y) co(on[x], on[y]) += 1.0;
  const double n = static_cast<double>(present.size());
  MatrixXd mi = MatrixXd::Zero(n_vars, n_vars);
  for (int x = 0; x < n_vars; ++x)
    for (int y = x + 1; y < n_vars; ++y)
      mi(x, y) = mi(y, x) = binary_mutual_information(co(x, y), co(x, x), co(y, y), n);
  return mi;
}

/// Greedy agglomeration: seed with the best unassigned pair, grow by the
/// candidate with the highest average MI to the members. Eligible items that
/// never join a group come back as singletons.
std::vector<std::vector<int>> greedy_groups(const MatrixXd& mi, const std::vector<char>& eligible,
                                            int max_size, double floor, double relative_floor) {
  const int n = static_cast<int>(mi.rows());
  double strongest = 0.0;
  for (int x = 0; x < n; ++x)
    for (int y = x + 1; y < n; ++y)
      if (eligible[x] && eligible[y]) strongest = std::max(strongest, mi(x, y));
  floor = std::max(floor, relative_floor * strongest);
  std::vector<char> assigned(n, 0);
  std::vector<std::vector<int>> groups;
  if (max_size >= 2) {
    struct Pair {
      double mi;
      int x, y;
    };
    std::vector<Pair> pairs;
    for (int x = 0; x < n; ++x)
      for (int y = x + 1; y < n; ++y)
        if (eligible[x] && eligible[y] && mi(x, y) > floor) pairs.push_back({mi(x, y), x, y});
    std::sort(pairs.begin(), pairs.end(), [](const Pair& p, const Pair& q) {
      if (p.mi != q.mi) return p.mi > q.mi;
      return std::tie(p.x, p.y) < std::tie(q.x, q.y);
    });
    std::vector<double> sum(n);
    for (const auto& seed : pairs) {
      if (assigned[seed.x] || assigned[seed.y]) continue;
      std::vector<int> group = {seed.x, seed.y};
      assigned[seed.x] = assigned[seed.y] = 1;
      for (int c = 0; c < n; ++c) sum[c] = mi(c, seed.x) + mi(c, seed.y);
      while (static_cast<int>(group.size()) < max_size) {
        int best = -1;
        double best_avg = floor;
        for (int c = 0; c < n; ++c) {
          if (!eligible[c] || assigned[c]) continue;
          const double avg = sum[c] / static_cast<double>(group.size());
          if (avg > best_avg) {
            best_avg = avg;
            best = c;
          }
        }
        if (best < 0) break;
        group.push_back(best);
        assigned[best] = 1;
        for (int c = 0; c < n; ++c) sum[c] += mi(c, best);
      }
      std::sort(group.begin(), group.end());
      groups.push_back(std::move(group));
    }
  }
  for (int x = 0; x < n; ++x)
    if (eligible[x] && !assigned[x]) groups.push_back({x});
  return groups;
}

}  // namespace

Skeleton build_skeleton(const Corpus& corpus, const SkeletonConfig& config) {
  const int k = corpus.vocab_size();
  if (k < 2) throw ArgumentError("build_skeleton needs K >= 2");
  if (config.island_max < 1 || config.supergroup_max < 1)
    throw ArgumentError("island_max and supergroup_max must be positive");
  if (config.relative_floor < 0 || config.relative_floor >= 1)
    throw ArgumentError("relative_floor must be in [0, 1)");
  const int n = corpus.size();
  const double floor =
      config.mi_floor >= 0 ? config.mi_floor : 10.828 / (2.0 * std::max(1, n));

  std::vector<std::vector<int>> word_present(n);
  for (int d = 0; d < n; ++d)
    for (const auto& e : corpus.docs[d].entries()) word_present[d].push_back(e.word);
  const auto df = corpus.document_frequencies();
  std::vector<char> usable(k);
  for (int w = 0; w < k; ++w) usable[w] = df[w] > 0 && df[w] < n;

  // Level 1: word islands.
  const MatrixXd word_mi = indicator_mutual_information(word_present, k);
  const auto islands = greedy_groups(word_mi, usable, config.island_max, floor, config.relative_floor);

  // Level 2: islands grouped by their "any member present" indicators.
  std::vector<int> island_of(k, -1);
  for (std::size_t i = 0; i < islands.size(); ++i)
    for (int w : islands[i]) island_of[w] = static_cast<int>(i);
  const int n_islands = static_cast<int>(islands.size());
  std::vector<std::vector<int>> island_present(n);
  for (int d = 0; d < n; ++d) {
    for (int w : word_present[d])
      if (island_of[w] >= 0) island_present[d].push_back(island_of[w]);
    auto& v = island_present[d];
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  std::vector<std::vector<int>> supergroups;
  if (n_islands > 0) {
    const MatrixXd island_mi = indicator_mutual_information(island_present, n_islands);
    supergroups = greedy_groups(island_mi, std::vector<char>(n_islands, 1),
                                config.supergroup_max, floor, config.relative_floor);
  }

  Skeleton sk;
  sk.provenance = SkeletonProvenance::Built;
  for (const auto& sg : supergroups) {
    std::vector<int> words;
    for (int i : sg) words.insert(words.end(), islands[i].begin(), islands[i].end());
    std::sort(words.begin(), words.end());
    sk.groups.push_back(std::move(words));
  }
  std::sort(sk.groups.begin(), sk.groups.end());

  // Hidden forest: maximum spanning tree over group indicators.
  const int f = static_cast<int>(sk.groups.size());
  if (f > 1) {
    std::vector<int> group_of(k, -1);
    for (int j = 0; j < f; ++j)
      for (int w : sk.groups[j]) group_of[w] = j;
    std::vector<std::vector<int>> group_present(n);
    for (int d = 0; d < n; ++d) {
      for (int w : word_present[d])
        if (group_of[w] >= 0) group_present[d].push_back(group_of[w]);
      auto& v = group_present[d];
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    const MatrixXd group_mi = indicator_mutual_information(group_present, f);
    struct Cand {
      double mi;
      int x, y;
    };
    std::vector<Cand> cands;
    for (int x = 0; x < f; ++x)
      for (int y = x + 1; y < f; ++y) cands.push_back({group_mi(x, y), x, y});
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Cand& p, const Cand& q) { return p.mi > q.mi; });
    std::vector<int> uf(f);
    std::iota(uf.begin(), uf.end(), 0);
    auto find = [&](int x) {
      while (uf[x] != x) x = uf[x] = uf[uf[x]];
      return x;
    };
    for (const auto& c : cands) {
      const int rx = find(c.x), ry = find(c.y);
      if (rx == ry) continue;
      uf[rx] = ry;
      sk.tree_edges.push_back({c.x, c.y});
    }
  }

  // Words occurring in no document or in every document carry no MI; they
  // join the smallest group (lowest index on ties).
  std::vector<int> degenerate;
  for (int w = 0; w < k; ++w)
    if (!usable[w]) degenerate.push_back(w);
  if (!degenerate.empty()) {
    if (sk.groups.empty()) {
      sk.groups.push_back(degenerate);
    } else {
      for (int w : degenerate) {
        std::size_t smallest = 0;
        for (std::size_t j = 1; j < sk.groups.size(); ++j)
          if (sk.groups[j].size() < sk.groups[smallest].size()) smallest = j;
        auto& g = sk.groups[smallest];
        g.insert(std::upper_bound(g.begin(), g.end(), w), w);
      }
    }
  }
  sk.validate(k);
  return sk;
}

Skeleton read_skeleton(std::istream& in, int vocab_size) {
  Skeleton sk;
  sk.provenance = SkeletonProvenance::Loaded;
  std::map<int, std::vector<int>> groups;
  std::string line;
  long line_no = 0;
  bool in_tree = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::string t = line.substr(first);
    while (!t.empty() && (t.back() == '\r' || t.back() == ' ' || t.back() == '\t')) t.pop_back();
    if (t == "[tree]") {
      in_tree = true;
      continue;
    }
    if (in_tree) {
      std::istringstream ss(t);
      int j = 0, l = 0;
      std::string rest;
      if (!(ss >> j >> l) || (ss >> rest))
        throw ParseError("malformed tree edge at line " + std::to_string(line_no), line_no);
      sk.tree_edges.push_back({j, l});
      continue;
    }
    const auto colon = t.find(':');
    if (colon == std::string::npos)
      throw ParseError("expected 'j: v v ...' at line " + std::to_string(line_no), line_no);
    int j = 0;
    try {
      std::size_t used = 0;
      j = std::stoi(t.substr(0, colon), &used);
      if (used != colon) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError("malformed hidden index at line " + std::to_string(line_no), line_no);
    }
    if (groups.count(j)) throw StructuralError("hidden " + std::to_string(j) + " listed twice");
    std::istringstream ss(t.substr(colon + 1));
    std::vector<int> words;
    std::string tok;
    while (ss >> tok) {
      try {
        std::size_t used = 0;
        words.push_back(std::stoi(tok, &used));
        if (used != tok.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ParseError("malformed visible index '" + tok + "' at line " +
                             std::to_string(line_no),
                         line_no);
      }
    }
    std::sort(words.begin(), words.end());
    groups[j] = std::move(words);
  }
  int expected = 0;
  for (auto& [j, words] : groups) {
    if (j != expected)
      throw StructuralError("hidden " + std::to_string(expected) + " missing from skeleton");
    sk.groups.push_back(std::move(words));
    ++expected;
  }
  for (const auto& e : sk.tree_edges)
    if (e.j < 0 || e.j >= sk.hidden_count() || e.l < 0 || e.l >= sk.hidden_count())
      throw StructuralError("tree edge " + std::to_string(e.j) + " " + std::to_string(e.l) +
                            " out of range");
  sk.validate(vocab_size);
  return sk;
}

Skeleton load_skeleton(const std::filesystem::path& path, int vocab_size) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return read_skeleton(in, vocab_size);
}

void write_skeleton(std::ostream& out, const Skeleton& sk) {
  for (int j = 0; j < sk.hidden_count(); ++j) {
    out << j << ':';
    for (int v : sk.groups[j]) out << ' ' << v;
    out << '\n';
  }
  out << "[tree]\n";
  for (const auto& e : sk.tree_edges) out << e.j << ' ' << e.l << '\n';
}

void save_skeleton(const std::filesystem::path& path, const Skeleton& sk) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_skeleton(out, sk);
}

// ---------------------------------------------------------------------------
// Conditional mutual information

double conditional_mutual_information(const TripleTable& p) {
  double total = 0.0;
  for (const auto& a : p)
    for (const auto& b : a)
      for (double c : b) total += c;
  if (total <= 0) return 0.0;
  double cmi = 0.0;
  for (int zp = 0; zp < 2; ++zp) {
    double p_zp = 0.0, p_z_zp[2] = {0, 0}, p_zp_v[2] = {0, 0};
    for (int z = 0; z < 2; ++z)
      for (int v = 0; v < 2; ++v) {
        const double c = p[z][zp][v] / total;
        p_zp += c;
        p_z_zp[z] += c;
        p_zp_v[v] += c;
      }
    for (int z = 0; z < 2; ++z)
      for (int v = 0; v < 2; ++v) {
        const double c = p[z][zp][v] / total;
        if (c <= 0) continue;
        cmi += c * std::log(c * p_zp / (p_z_zp[z] * p_zp_v[v]));
      }
  }
  return cmi;
}

namespace {

std::vector<int> skeleton_owners(const SbmStructure& s) {
  std::vector<int> owner(s.vocab_size(), -1);
  for (const auto& [j, k] : s.visible_edges()) {
    if (owner[k] >= 0)
      throw ArgumentError("tree model is not skeleton-structured: word " + std::to_string(k) +
                          " has several hidden parents");
    owner[k] = j;
  }
  for (int k = 0; k < s.vocab_size(); ++k)
    if (owner[k] < 0)
      throw ArgumentError("tree model is not skeleton-structured: word " + std::to_string(k) +
                          " unconnected");
  return owner;
}

std::vector<char> adjacency(const SbmStructure& s) {
  const int f = s.hidden_count();
  std::vector<char> adj(static_cast<std::size_t>(f) * f, 0);
  for (const auto& e : s.tree_edges()) adj[e.j * f + e.l] = adj[e.l * f + e.j] = 1;
  return adj;
}

}  // namespace

std::vector<Eigen::Matrix2d> pairwise_hidden_posteriors(const SbmModel& model,
                                                        const Document& doc) {
  const auto& s = model.structure;
  const int f = s.hidden_count();
  const VectorXd drive = hidden_drive(model.W, model.a, doc);
  const VectorXd coupling = sbm_edge_couplings(model, doc.length());
  const TreePosterior base = tree_posterior(s.layout(), s.tree_edges(), drive, coupling);
  std::vector<Eigen::Matrix2d> out(static_cast<std::size_t>(f) * f, Eigen::Matrix2d::Zero());
  for (int j = 0; j < f; ++j) {
    out[j * f + j](0, 0) = 1.0 - base.singleton[j];
    out[j * f + j](1, 1) = base.singleton[j];
  }
  for (std::size_t e = 0; e < s.tree_edges().size(); ++e) {
    const auto [j, l] = s.tree_edges()[e];
    out[j * f + l] = base.pairwise[e];
    out[l * f + j] = base.pairwise[e].transpose();
  }
  const auto adj = adjacency(s);
  std::vector<signed char> clamp(f, kFree);
  for (int u = 0; u < f; ++u) {
    bool needed = false;
    for (int j = 0; j < f && !needed; ++j) needed = j != u && !adj[j * f + u];
    if (!needed) continue;
    for (int zu = 0; zu < 2; ++zu) {
      clamp[u] = static_cast<signed char>(zu);
      const TreePosterior cond = tree_posterior(s.layout(), s.tree_edges(), drive, coupling, clamp);
      const double p_u = zu ? base.singleton[u] : 1.0 - base.singleton[u];
      for (int j = 0; j < f; ++j) {
        if (j == u || adj[j * f + u]) continue;
        out[j * f + u](1, zu) = p_u * cond.singleton[j];
        out[j * f + u](0, zu) = p_u * (1.0 - cond.singleton[j]);
      }
    }
    clamp[u] = kFree;
  }
  return out;
}

TripleTable estimate_cmi_joint(const SbmModel& tree_model, const Corpus& corpus, int j, int word) {
  const auto& s = tree_model.structure;
  if (j < 0 || j >= s.hidden_count()) throw ArgumentError("hidden index out of range");
  if (word < 0 || word >= s.vocab_size()) throw ArgumentError("visible index out of range");
  const auto owner = skeleton_owners(s);
  const int u = owner[word];
  if (u == j)
    throw ArgumentError("visible " + std::to_string(word) + " belongs to hidden " +
                        std::to_string(j) + "'s own group");
  const int f = s.hidden_count();
  const bool adjacent = adjacency(s)[j * f + u];
  int edge = -1;
  for (std::size_t e = 0; e < s.tree_edges().size(); ++e) {
    const auto& te = s.tree_edges()[e];
    if ((te.j == j && te.l == u) || (te.j == u && te.l == j)) edge = static_cast<int>(e);
  }

  Eigen::Matrix2d total = Eigen::Matrix2d::Zero(), occ = Eigen::Matrix2d::Zero();
  std::vector<signed char> clamp(f, kFree);
  for (const auto& doc : corpus.docs) {
    const VectorXd drive = hidden_drive(tree_model.W, tree_model.a, doc);
    const VectorXd coupling = sbm_edge_couplings(tree_model, doc.length());
    const TreePosterior base = tree_posterior(s.layout(), s.tree_edges(), drive, coupling);
    Eigen::Matrix2d joint;  // (z_j, z_u)
    if (adjacent) {
      joint = s.tree_edges()[edge].j == j ? base.pairwise[edge]
                                           : Eigen::Matrix2d(base.pairwise[edge].transpose());
    } else {
      for (int zu = 0; zu < 2; ++zu) {
        clamp[u] = static_cast<signed char>(zu);
        const TreePosterior cond =
            tree_posterior(s.layout(), s.tree_edges(), drive, coupling, clamp);
        const double p_u = zu ? base.singleton[u] : 1.0 - base.singleton[u];
        joint(1, zu) = p_u * cond.singleton[j];
        joint(0, zu) = p_u * (1.0 - cond.singleton[j]);
      }
    }
    total += joint;
    if (doc.contains(word)) occ += joint;
  }
  const double n = std::max(1, corpus.size());
  TripleTable p{};
  for (int z = 0; z < 2; ++z)
    for (int zu = 0; zu < 2; ++zu) {
      p[z][zu][1] = occ(z, zu) / n;
      p[z][zu][0] = std::max(0.0, total(z, zu) - occ(z, zu)) / n;
    }
  return p;
}

double estimate_cmi(const SbmModel& tree_model, const Corpus& corpus, int j, int word) {
  return conditional_mutual_information(estimate_cmi_joint(tree_model, corpus, j, word));
}

namespace {

constexpr int kDocsPerChunk = 256;

struct CmiAccumulator {
  std::vector<Eigen::Matrix2d> total;  // [j * F + u]
  std::vector<Eigen::Matrix2d> occ;    // [j * K + word]

  CmiAccumulator(int f, int k)
      : total(static_cast<std::size_t>(f) * f, Eigen::Matrix2d::Zero()),
        occ(static_cast<std::size_t>(f) * k, Eigen::Matrix2d::Zero()) {}

  void add(const CmiAccumulator& o) {
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += o.total[i];
    for (std::size_t i = 0; i < occ.size(); ++i) occ[i] += o.occ[i];
  }
};

}  // namespace

CmiTable compute_cmi_table(const SbmModel& tree_model, const Corpus& corpus, int threads) {
  const auto& s = tree_model.structure;
  const int f = s.hidden_count(), k = s.vocab_size();
  if (corpus.vocab_size() != k) throw ArgumentError("corpus K does not match tree model");
  const auto owner = skeleton_owners(s);
  const int n = corpus.size();
  const int n_chunks = (n + kDocsPerChunk - 1) / kDocsPerChunk;
  threads = std::max(1, threads);

  // Chunks are reduced in index order so the sum is independent of `threads`.
  CmiAccumulator acc(f, k);
  for (int first = 0; first < n_chunks; first += threads) {
    const int count = std::min(threads, n_chunks - first);
    std::vector<CmiAccumulator> partial(count, CmiAccumulator(f, k));
    parallel_tasks(count, threads, [&](int t) {
      CmiAccumulator& a = partial[t];
      const int begin = (first + t) * kDocsPerChunk;
      const int end = std::min(n, begin + kDocsPerChunk);
      for (int d = begin; d < end; ++d) {
        const auto& doc = corpus.docs[d];
        const auto pair = pairwise_hidden_posteriors(tree_model, doc);
        for (std::size_t i = 0; i < pair.size(); ++i) a.total[i] += pair[i];
        for (const auto& e : doc.entries()) {
          const int u = owner[e.word];
          for (int j = 0; j < f; ++j)
            if (j != u) a.occ[static_cast<std::size_t>(j) * k + e.word] += pair[j * f + u];
        }
      }
    });
    for (const auto& p : partial) acc.add(p);
  }

  CmiTable table;
  table.per_hidden.resize(f);
  const double nd = std::max(1, n);
  for (int j = 0; j < f; ++j) {
    auto& row = table.per_hidden[j];
    for (int w = 0; w < k; ++w) {
      const int u = owner[w];
      if (u == j) continue;
      const auto& o = acc.occ[static_cast<std::size_t>(j) * k + w];
      const auto& t = acc.total[j * f + u];
      TripleTable p{};
      for (int z = 0; z < 2; ++z)
        for (int zu = 0; zu < 2; ++zu) {
          p[z][zu][1] = o(z, zu) / nd;
          p[z][zu][0] = std::max(0.0, t(z, zu) - o(z, zu)) / nd;
        }
      row.push_back({w, conditional_mutual_information(p)});
    }
    std::stable_sort(row.begin(), row.end(),
                     [](const CmiEntry& x, const CmiEntry& y) { return x.score > y.score; });
  }
  return table;
}

void write_cmi_tsv(std::ostream& out, const CmiTable& table) {
  out << "hidden\tvisible\tscore\n";
  for (std::size_t j = 0; j < table.per_hidden.size(); ++j)
    for (const auto& e : table.per_hidden[j])
      out << j << '\t' << e.word << '\t' << format_double(e.score) << '\n';
}

// ---------------------------------------------------------------------------
// Expansion

int ExpansionBudget::resolve(int hidden, int group_size, int vocab_size) const {
  if (auto it = overrides.find(hidden); it != overrides.end()) return it->second;
  if (per_unit) return *per_unit;
  if (fraction < 0 || fraction > 1) throw ArgumentError("expansion fraction must be in [0, 1]");
  const int target = static_cast<int>(std::ceil(fraction * vocab_size - 1e-9));
  return std::max(0, target - group_size);
}

Expansion expand_with_table(const Skeleton& skeleton, const CmiTable& cmi, int vocab_size,
                            const ExpansionBudget& budget) {
  skeleton.validate(vocab_size);
  const int f = skeleton.hidden_count();
  if (static_cast<int>(cmi.per_hidden.size()) != f)
    throw ArgumentError("CMI table does not match skeleton");
  Expansion out{SbmStructure{}, cmi, std::vector<int>(f, 0), {}};
  std::vector<VisibleEdge> edges;
  for (int j = 0; j < f; ++j) {
    const int group = static_cast<int>(skeleton.groups[j].size());
    for (int v : skeleton.groups[j]) edges.push_back({j, v});
    int m = budget.resolve(j, group, vocab_size);
    if (m < 0) throw ArgumentError("negative connection budget for hidden " + std::to_string(j));
    if (m > vocab_size - group) {
      out.warnings.push_back("hidden " + std::to_string(j) + ": requested " + std::to_string(m) +
                             " new connections, clamped to " + std::to_string(vocab_size - group));
      m = vocab_size - group;
    }
    const auto& row = cmi.per_hidden[j];
    for (int i = 0; i < m && i < static_cast<int>(row.size()); ++i)
      edges.push_back({j, row[i].word});
    out.added[j] = std::min<int>(m, static_cast<int>(row.size()));
  }
  out.structure = SbmStructure(f, vocab_size, std::move(edges), skeleton.tree_edges);
  return out;
}

Expansion sbm_sfc(const Skeleton& skeleton, const SbmModel& tree_model, const Corpus& corpus,
                  const ExpansionBudget& budget, int threads) {
  if (!(tree_model.structure == skeleton.to_structure(corpus.vocab_size())))
    throw ArgumentError("tree model structure does not match the skeleton");
  return expand_with_table(skeleton, compute_cmi_table(tree_model, corpus, threads),
                           corpus.vocab_size(), budget);
}

}  // namespace sparsebm
