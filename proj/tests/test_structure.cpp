#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "oracles.hpp"
#include "sparsebm/structure.hpp"
#include "sparsebm/synthetic.hpp"

using namespace sparsebm;

namespace {

Corpus vocab_corpus(int k) {
  Corpus c;
  for (int w = 0; w < k; ++w) c.vocab.push_back("w" + std::to_string(w));
  return c;
}

/// Blocks {0,1,2} and {3,4,5}; each block switches on independently and an
/// active block emits all three of its words. All-off documents are redrawn;
/// the high activation rate keeps the coupling this induces below the MI floor.
Corpus two_block_corpus(int n, std::uint64_t seed) {
  Corpus c = vocab_corpus(6);
  Rng rng(seed);
  while (c.size() < n) {
    const bool a = uniform01(rng) < 0.97, b = uniform01(rng) < 0.97;
    if (!a && !b) continue;
    std::vector<int> counts(6, 0);
    for (int w = 0; w < 3; ++w) {
      if (a) counts[w] = 1 + static_cast<int>(uniform_index(rng, 2));
      if (b) counts[w + 3] = 1 + static_cast<int>(uniform_index(rng, 2));
    }
    c.docs.push_back(Document::from_dense(counts));
  }
  return c;
}

/// Topic A = {0,1,2}, topic B = {3,4,5}, each active with probability 1/2;
/// every token of word 2 brings a token of word 3 with it. Word 6 appears
/// once in every document so that documents with neither topic are kept.
Corpus cross_pair_corpus(int n, std::uint64_t seed) {
  Corpus c = vocab_corpus(7);
  Rng rng(seed);
  while (c.size() < n) {
    const bool a = uniform01(rng) < 0.5, b = uniform01(rng) < 0.5;
    std::vector<int> counts(7, 0);
    counts[6] = 1;
    for (int t = 0; t < 6 && (a || b); ++t) {
      const int base = a && b ? (uniform01(rng) < 0.5 ? 0 : 3) : a ? 0 : 3;
      const int w = base + static_cast<int>(uniform_index(rng, 3));
      ++counts[w];
      if (w == 2) ++counts[3];
    }
    c.docs.push_back(Document::from_dense(counts));
  }
  return c;
}

TrainConfig tree_config() {
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.learning_rate = 0.01;
  cfg.seed = 4;
  cfg.init_visible_bias_from_data = true;
  cfg.mean_field_final = true;
  return cfg;
}

}  // namespace

TEST_CASE("binary_mutual_information") {
  CHECK(binary_mutual_information(50, 50, 50, 100) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(binary_mutual_information(25, 50, 50, 100) == doctest::Approx(0.0));
  // 2x2 table {{30, 10}, {20, 40}}: direct sum of p log(p / (px py)).
  const double expected = 0.3 * std::log(0.3 / (0.4 * 0.5)) + 0.1 * std::log(0.1 / (0.4 * 0.5)) +
                          0.2 * std::log(0.2 / (0.6 * 0.5)) + 0.4 * std::log(0.4 / (0.6 * 0.5));
  CHECK(binary_mutual_information(40, 60, 50, 100) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("build_skeleton recovers two independent blocks") {
  const Corpus c = two_block_corpus(2000, 3);
  const Skeleton sk = build_skeleton(c);
  REQUIRE(sk.hidden_count() == 2);
  CHECK(sk.groups[0] == std::vector<int>{0, 1, 2});
  CHECK(sk.groups[1] == std::vector<int>{3, 4, 5});
  CHECK(sk.tree_edges.size() == 1);
  CHECK(sk.provenance == SkeletonProvenance::Built);
  const Skeleton again = build_skeleton(c);
  CHECK(again.groups == sk.groups);
  CHECK(again.tree_edges == sk.tree_edges);
}

TEST_CASE("build_skeleton on K=2 and on degenerate words") {
  Corpus c = vocab_corpus(2);
  for (int i = 0; i < 10; ++i) c.docs.push_back(Document::from_dense(std::vector<int>{1, i % 2}));
  const Skeleton sk = build_skeleton(c);
  CHECK(sk.hidden_count() == 1);
  CHECK(sk.groups[0] == std::vector<int>{0, 1});
  CHECK(sk.tree_edges.empty());

  // Word 6 appears everywhere and word 7 nowhere: both join the smallest group.
  Corpus d = two_block_corpus(500, 1);
  d.vocab.push_back("always");
  d.vocab.push_back("never");
  for (auto& doc : d.docs) {
    auto e = doc.entries();
    e.push_back({6, 1});
    doc = Document(e);
  }
  const Skeleton sd = build_skeleton(d);
  CHECK_NOTHROW(sd.validate(8));
  const auto owners = sd.owners(8);
  CHECK(owners[6] >= 0);
  CHECK(owners[7] >= 0);
  CHECK_THROWS_AS(build_skeleton(vocab_corpus(1)), ArgumentError);
}

TEST_CASE("build_skeleton respects island and supergroup limits") {
  SyntheticConfig sc;
  sc.n_train = 800;
  const SyntheticCorpus syn = generate_synthetic(sc);
  SkeletonConfig cfg;
  cfg.island_max = 3;
  cfg.supergroup_max = 1;
  const Skeleton sk = build_skeleton(syn.train, cfg);
  for (const auto& g : sk.groups) CHECK(g.size() <= 3 + 2);  // degenerate words may be appended
  CHECK_NOTHROW(sk.validate(60));
  CHECK(sk.tree_edges.size() == static_cast<std::size_t>(sk.hidden_count() - 1));
}

TEST_CASE("read_skeleton: the two-unit example of the method description") {
  std::istringstream in("0: 0 1 2\n1: 3 4 5 6\n[tree]\n0 1\n");
  const Skeleton sk = read_skeleton(in, 7);
  CHECK(sk.provenance == SkeletonProvenance::Loaded);
  CHECK(sk.groups[1] == std::vector<int>{3, 4, 5, 6});
  CHECK(sk.tree_edges == std::vector<TreeEdge>{{0, 1}});
  std::ostringstream out;
  write_skeleton(out, sk);
  std::istringstream back(out.str());
  CHECK(read_skeleton(back, 7).groups == sk.groups);
}

TEST_CASE("read_skeleton errors") {
  auto error_of = [](const std::string& text, int k) -> std::string {
    std::istringstream in(text);
    try {
      read_skeleton(in, k);
    } catch (const std::exception& e) {
      return e.what();
    }
    return "";
  };
  CHECK(error_of("0: 0 1 4\n1: 2 3 4\n", 5) == "visible 4 assigned twice");
  CHECK(error_of("0: 0 1\n1: 2\n2: 3\n[tree]\n0 1\n1 2\n2 0\n", 4) == "hidden graph is not a forest");
  CHECK(error_of("0: 0 1\n", 3) == "visible 2 not assigned");
  CHECK(error_of("0: 0 1 7\n", 3) == "visible 7 out of range (K=3)");
  CHECK(error_of("0: 0\n2: 1\n", 2) == "hidden 1 missing from skeleton");
  CHECK(error_of("0: 0\n0: 1\n", 2) == "hidden 0 listed twice");
  CHECK(error_of("zero: 0 1\n", 2).find("line 1") != std::string::npos);
}

TEST_CASE("conditional_mutual_information closed forms") {
  TripleTable copy{};
  for (int z = 0; z < 2; ++z)
    for (int zp = 0; zp < 2; ++zp) copy[z][zp][z] = 0.25;
  CHECK(conditional_mutual_information(copy) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

  TripleTable indep{};
  const double pz[2] = {0.3, 0.7}, pzp[2] = {0.6, 0.4}, pv[2][2] = {{0.2, 0.8}, {0.9, 0.1}};
  for (int z = 0; z < 2; ++z)
    for (int zp = 0; zp < 2; ++zp)
      for (int v = 0; v < 2; ++v) indep[z][zp][v] = pz[z] * pzp[zp] * pv[zp][v];
  CHECK(std::abs(conditional_mutual_information(indep)) < 1e-15);

  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    TripleTable t{};
    for (auto& a : t)
      for (auto& b : a)
        for (double& c : b) c = uniform01(rng) < 0.2 ? 0.0 : uniform01(rng);
    CHECK(conditional_mutual_information(t) >= -1e-12);
  }
}

TEST_CASE("estimate_cmi argument checks and pairwise posteriors") {
  Rng rng(6);
  std::istringstream in("0: 0 1\n1: 2 3\n2: 4 5\n[tree]\n0 1\n1 2\n");
  const Skeleton sk = read_skeleton(in, 6);
  const SbmModel m = oracle::random_sbm(sk.to_structure(6), rng);
  Corpus c = vocab_corpus(6);
  for (int i = 0; i < 20; ++i) c.docs.push_back(Document::from_dense(oracle::random_counts(6, 4, rng)));
  CHECK_THROWS_AS(estimate_cmi(m, c, 0, 1), ArgumentError);
  CHECK(estimate_cmi(m, c, 0, 4) >= -1e-9);

  const std::vector<int> counts = {1, 0, 2, 0, 1, 1};
  const auto pw = pairwise_hidden_posteriors(m, Document::from_dense(counts));
  const auto ex = oracle::posterior(m, counts);
  for (int j = 0; j < 3; ++j)
    for (int l = 0; l < 3; ++l)
      if (j != l) CHECK((pw[j * 3 + l] - ex.pairwise[j * 3 + l]).cwiseAbs().maxCoeff() < 1e-12);

  // A model whose structure is not a skeleton is rejected.
  const SbmModel dense = SbmModel::zeros(SbmStructure::dense(2, 6));
  CHECK_THROWS_AS(compute_cmi_table(dense, c), ArgumentError);
}

TEST_CASE("CMI table is sorted, non-negative and invariant to document order") {
  const Corpus c = cross_pair_corpus(600, 2);
  std::istringstream in("0: 0 1 2\n1: 3 4 5 6\n[tree]\n0 1\n");
  const Skeleton sk = read_skeleton(in, 7);
  const SbmModel tree = sbm_train(c, sk.to_structure(7), tree_config());
  const CmiTable t = compute_cmi_table(tree, c);
  for (int j = 0; j < 2; ++j) {
    const auto& row = t.per_hidden[j];
    CHECK(row.size() == (j == 0 ? 4u : 3u));
    for (std::size_t i = 0; i < row.size(); ++i) {
      CHECK(row[i].score >= -1e-9);
      CHECK(std::find(sk.groups[j].begin(), sk.groups[j].end(), row[i].word) == sk.groups[j].end());
      if (i > 0) CHECK(row[i - 1].score >= row[i].score);
      CHECK(row[i].score == doctest::Approx(estimate_cmi(tree, c, j, row[i].word)).epsilon(1e-12));
    }
  }
  Corpus shuffled = c;
  Rng rng(8);
  shuffle_in_place(std::span<Document>(shuffled.docs), rng);
  const CmiTable ts = compute_cmi_table(tree, shuffled, 2);
  for (int j = 0; j < 2; ++j)
    for (const auto& e : t.per_hidden[j]) {
      const auto it = std::find_if(ts.per_hidden[j].begin(), ts.per_hidden[j].end(),
                                   [&](const CmiEntry& x) { return x.word == e.word; });
      REQUIRE(it != ts.per_hidden[j].end());
      CHECK(std::abs(it->score - e.score) <= 1e-12);
    }
}

TEST_CASE("sbm_sfc connects the planted cross-block word first") {
  const Corpus c = cross_pair_corpus(2000, 5);
  std::istringstream in("0: 0 1 2\n1: 3 4 5 6\n[tree]\n0 1\n");
  const Skeleton sk = read_skeleton(in, 7);
  const SbmModel tree = sbm_train(c, sk.to_structure(7), tree_config());
  ExpansionBudget one;
  one.per_unit = 1;
  const Expansion ex = sbm_sfc(sk, tree, c, one);
  CHECK(ex.structure.words_of(0) == std::vector<int>{0, 1, 2, 3});
  CHECK(ex.cmi.per_hidden[0][0].word == 3);
  CHECK(ex.added == std::vector<int>{1, 1});
  CHECK(ex.structure.tree_edges() == sk.tree_edges);

  ExpansionBudget zero;
  zero.per_unit = 0;
  CHECK(sbm_sfc(sk, tree, c, zero).structure == sk.to_structure(7));

  // Prefix property: M -> M+1 adds exactly one edge per unit and keeps the rest.
  ExpansionBudget two;
  two.per_unit = 2;
  const Expansion ex2 = expand_with_table(sk, ex.cmi, 7, two);
  for (int j = 0; j < 2; ++j) {
    const auto& w1 = ex.structure.words_of(j);
    const auto& w2 = ex2.structure.words_of(j);
    CHECK(w2.size() == w1.size() + 1);
    CHECK(std::includes(w2.begin(), w2.end(), w1.begin(), w1.end()));
  }

  // Requests beyond the unconnected words are clamped with a warning.
  ExpansionBudget many;
  many.per_unit = 5;
  const Expansion clamped = expand_with_table(sk, ex.cmi, 7, many);
  CHECK(clamped.warnings.size() == 2);
  CHECK(clamped.structure.words_of(0).size() == 7);

  // A tree model over a different structure is rejected.
  std::istringstream other("0: 0 1\n1: 2 3 4 5 6\n[tree]\n0 1\n");
  CHECK_THROWS_AS(sbm_sfc(read_skeleton(other, 7), tree, c, one), ArgumentError);
}

TEST_CASE("ExpansionBudget resolution") {
  ExpansionBudget b;  // default: per-unit degree ceil(0.2 K)
  CHECK(b.resolve(0, 3, 60) == 9);
  CHECK(b.resolve(0, 15, 60) == 0);
  CHECK(b.resolve(0, 3, 61) == 10);
  b.overrides[2] = 4;
  CHECK(b.resolve(2, 3, 60) == 4);
  b.per_unit = 1;
  CHECK(b.resolve(0, 3, 60) == 1);
  CHECK(b.resolve(2, 3, 60) == 4);
}

TEST_CASE("degree after expansion equals group size plus budget") {
  SyntheticConfig sc;
  sc.n_train = 600;
  const SyntheticCorpus syn = generate_synthetic(sc);
  const Skeleton sk = build_skeleton(syn.train);
  TrainConfig cfg = tree_config();
  cfg.epochs = 2;
  const SbmModel tree = sbm_train(syn.train, sk.to_structure(60), cfg);
  const Expansion ex = sbm_sfc(sk, tree, syn.train, ExpansionBudget{}, 2);
  for (int j = 0; j < sk.hidden_count(); ++j) {
    const int g = static_cast<int>(sk.groups[j].size());
    CHECK(static_cast<int>(ex.structure.words_of(j).size()) == std::max(g, 12));
  }
  std::ostringstream tsv;
  write_cmi_tsv(tsv, ex.cmi);
  CHECK(tsv.str().rfind("hidden\tvisible\tscore\n", 0) == 0);
}

TEST_CASE("rand_index") {
  CHECK(rand_index({0, 0, 1, 1}, {5, 5, 7, 7}) == 1.0);
  CHECK(rand_index({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(2.0 / 6.0));
}

TEST_CASE("synthetic generator") {
  SyntheticConfig sc;
  const SyntheticCorpus a = generate_synthetic(sc), b = generate_synthetic(sc);
  CHECK(a.train.docs == b.train.docs);
  CHECK(a.train.size() == 3000);
  CHECK(a.test.size() == 300);
  CHECK(a.groups.size() == 8);
  CHECK(a.cross.size() == 2);
  for (const auto& d : a.train.docs) {
    CHECK(d.length() >= 20);
    CHECK(d.length() <= 50);
  }
  for (const auto& cp : a.cross) CHECK(a.group_of[cp.word] != cp.source_group);
  sc.seed = 2;
  CHECK(generate_synthetic(sc).train.docs != a.train.docs);
}
