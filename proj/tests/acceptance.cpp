// Acceptance suite: one PASS/FAIL line per criterion. Exit status is 0 only
// when every criterion passes. argv[1] is a scratch directory for pipeline runs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "sparsebm/ais.hpp"
#include "sparsebm/exact.hpp"
#include "sparsebm/interpretability.hpp"
#include "sparsebm/pipeline.hpp"
#include "sparsebm/pruning.hpp"
#include "sparsebm/structure.hpp"
#include "sparsebm/synthetic.hpp"

using namespace sparsebm;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int threads() { return std::max(1u, std::thread::hardware_concurrency()); }

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o, double secs) {
  std::printf("criterion %d %-28s %s  (%s; %.1f s)\n", id, name.c_str(), o.pass ? "PASS" : "FAIL",
              o.detail.c_str(), secs);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

void run(int id, const std::string& name, const std::function<Outcome()>& fn, double time_limit = 0) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = seconds_since(t0);
  if (time_limit > 0 && secs >= time_limit) {
    o.pass = false;
    o.detail += "; over the " + std::to_string(static_cast<int>(time_limit)) + " s limit";
  }
  report(id, name, o, secs);
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

// 1 ------------------------------------------------------------------------

Outcome bp_exactness() {
  Rng rng(101);
  double worst = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int f = 2 + static_cast<int>(uniform_index(rng, 9));
    const int k = 2 + static_cast<int>(uniform_index(rng, 5));
    const SbmStructure s = oracle::random_structure(f, k, rng, 0.5, trial % 2 ? 1.0 : 0.7);
    const SbmModel m = oracle::random_sbm(s, rng);
    const auto counts = oracle::random_counts(k, 1 + static_cast<int>(uniform_index(rng, 5)), rng);
    const Document doc = Document::from_dense(counts);
    const TreePosterior bp = sbm_tree_marginals(m, doc);
    const auto ex = oracle::posterior(m, counts);
    worst = std::max(worst, std::abs(bp.log_hidden_partition - ex.log_hidden_partition));
    for (int j = 0; j < f; ++j) worst = std::max(worst, std::abs(bp.singleton[j] - ex.singleton[j]));
    const auto& edges = s.tree_edges();
    for (std::size_t e = 0; e < edges.size(); ++e)
      worst = std::max(worst, (bp.pairwise[e] - ex.pairwise[edges[e].j * f + edges[e].l]).cwiseAbs().maxCoeff());
    const auto all = pairwise_hidden_posteriors(m, doc);
    for (int j = 0; j < f; ++j)
      for (int l = 0; l < f; ++l)
        if (j != l) worst = std::max(worst, (all[j * f + l] - ex.pairwise[j * f + l]).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-10, "max abs error " + fmt("%.2e", worst)};
}

// 2 ------------------------------------------------------------------------

template <typename Model>
double max_gradient_error(const Model& m, const std::vector<std::vector<int>>& dense, bool sbm) {
  std::vector<Document> docs;
  for (const auto& c : dense) docs.push_back(Document::from_dense(c));
  const ModelGradient g = exact_log_likelihood_gradient(m, docs);
  const double h = 1e-5;
  auto fd = [&](const std::function<void(Model&, double)>& mutate) {
    Model p = m, q = m;
    mutate(p, h);
    mutate(q, -h);
    return (oracle::log_likelihood(p, dense) - oracle::log_likelihood(q, dense)) / (2 * h);
  };
  auto rel = [](double x, double y) { return std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1e-2}); };
  double worst = 0;
  const int f = static_cast<int>(m.W.rows()), k = static_cast<int>(m.W.cols());
  for (int j = 0; j < f; ++j)
    for (int w = 0; w < k; ++w) {
      if (sbm && m.W(j, w) == 0.0) continue;  // off-structure entries are not parameters
      worst = std::max(worst, rel(g.W(j, w), fd([&](Model& x, double d) { x.W(j, w) += d; })));
    }
  for (int j = 0; j < f; ++j) worst = std::max(worst, rel(g.a[j], fd([&](Model& x, double d) { x.a[j] += d; })));
  for (int w = 0; w < k; ++w) worst = std::max(worst, rel(g.b[w], fd([&](Model& x, double d) { x.b[w] += d; })));
  if constexpr (std::is_same_v<Model, SbmModel>)
    for (Eigen::Index e = 0; e < m.tree_weights.size(); ++e)
      worst = std::max(worst, rel(g.tree[e], fd([&](Model& x, double d) { x.tree_weights[e] += d; })));
  return worst;
}

Outcome gradient_correctness() {
  Rng rng(202);
  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int f = 1 + static_cast<int>(uniform_index(rng, 3));
    const int k = 2 + static_cast<int>(uniform_index(rng, 3));
    std::vector<std::vector<int>> dense;
    for (int n = 0; n < 3; ++n) dense.push_back(oracle::random_counts(k, 1 + static_cast<int>(uniform_index(rng, 3)), rng));
    if (trial % 2 == 0) {
      worst = std::max(worst, max_gradient_error(oracle::random_rs(f, k, rng), dense, false));
    } else {
      const SbmStructure s = oracle::random_structure(f, k, rng, 0.6);
      worst = std::max(worst, max_gradient_error(oracle::random_sbm(s, rng), dense, true));
    }
  }
  return {worst < 1e-5, "max relative error " + fmt("%.2e", worst)};
}

// 3 ------------------------------------------------------------------------

Outcome ais_calibration() {
  Rng rng(303);
  const SbmStructure s = oracle::random_structure(4, 5, rng, 0.6);
  const SbmModel m = oracle::random_sbm(s, rng);
  const double exact = exact_log_z(m, 3);
  int ok = 0;
  double worst_z = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    AisOptions opt;
    opt.runs = 100;
    opt.seed = seed;
    opt.threads = threads();
    const AisEstimate est = ais_log_z(m, 3, opt);
    const double z = std::abs(est.log_z_mean - exact) / est.std_error;
    worst_z = std::max(worst_z, z);
    if (std::abs(est.log_z_mean - exact) <= 2 * est.std_error) ++ok;
  }
  return {ok >= 9, std::to_string(ok) + "/10 seeds within 2 se, worst " + fmt("%.2f", worst_z) + " se"};
}

// 4, 5 ---------------------------------------------------------------------

struct SyntheticRun {
  std::uint64_t seed;
  double sbm_sfc = 0, rs_plus = 0;
  double rand = 0;
  int cross_found = 0, cross_total = 0;
  double min_cmi = 0;
};

PipelineConfig synthetic_config(std::uint64_t seed, const fs::path& out) {
  PipelineConfig c;
  c.name = "synthetic-" + std::to_string(seed);
  c.output_dir = out;
  SyntheticConfig sc;
  sc.seed = seed;
  c.synthetic = sc;
  c.train.epochs = 50;
  c.train.cd_steps = 10;
  c.train.learning_rate = 0.003;
  c.train.batch_size = 10;
  c.train.seed = seed;
  c.train.init_visible_bias_from_data = true;
  c.train.mean_field_final = true;
  c.ais_runs = 50;
  c.eval_seed = seed;
  c.methods = {"sbm-sfc", "rs+"};
  return c;
}

fs::path stage_dir(const fs::path& out, const std::string& name) {
  for (const auto& e : fs::directory_iterator(out)) {
    const std::string n = e.path().filename().string();
    if (e.is_directory() && n.rfind(name + "-", 0) == 0 && n.find(".tmp") == std::string::npos) return e.path();
  }
  throw std::runtime_error("no stage directory for " + name);
}

std::vector<SyntheticRun> synthetic_runs;
double synthetic_seconds = 0;

void run_synthetic(const fs::path& root) {
  const auto t0 = Clock::now();
  fs::remove_all(root);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SyntheticRun r{seed};
    const fs::path out = root / ("seed-" + std::to_string(seed));
    std::ostringstream log;
    const PipelineResult res = run_pipeline(synthetic_config(seed, out), threads(), log);
    for (const auto& m : res.methods) (m.method == "sbm-sfc" ? r.sbm_sfc : r.rs_plus) = m.perplexity;

    SyntheticConfig sc;
    sc.seed = seed;
    const SyntheticCorpus syn = generate_synthetic(sc);
    r.rand = rand_index(res.skeleton.owners(sc.vocab_size), syn.group_of);

    const SbmModel tree = load_sbm_model(stage_dir(out, "tree-model") / "model.sbm");
    ExpansionBudget two;
    two.per_unit = 2;
    const Expansion ex = sbm_sfc(res.skeleton, tree, syn.train, two, threads());
    r.min_cmi = INFINITY;
    for (const auto& row : ex.cmi.per_hidden)
      for (const auto& e : row) r.min_cmi = std::min(r.min_cmi, e.score);
    for (const CrossPair& cp : syn.cross) {
      // The skeleton unit holding most of the source group's words.
      std::map<int, int> votes;
      const auto owners = res.skeleton.owners(sc.vocab_size);
      for (int w : syn.groups[cp.source_group]) ++votes[owners[w]];
      const int unit = std::max_element(votes.begin(), votes.end(),
                                        [](auto& x, auto& y) { return x.second < y.second; })->first;
      const auto& group = res.skeleton.groups[unit];
      const auto& words = ex.structure.words_of(unit);
      const bool in_group = std::find(group.begin(), group.end(), cp.word) != group.end();
      const bool added = std::find(words.begin(), words.end(), cp.word) != words.end();
      ++r.cross_total;
      if (!in_group && added) ++r.cross_found;
    }
    std::printf("  seed %llu: sbm-sfc %.3f  rs+ %.3f  rand %.3f  cross %d/%d\n",
                static_cast<unsigned long long>(seed), r.sbm_sfc, r.rs_plus, r.rand, r.cross_found,
                r.cross_total);
    std::fflush(stdout);
    synthetic_runs.push_back(r);
  }
  synthetic_seconds = seconds_since(t0);
}

Outcome directional_replication() {
  int ok = 0;
  for (const auto& r : synthetic_runs) ok += r.sbm_sfc < r.rs_plus;
  Outcome o{ok >= 4, std::to_string(ok) + "/5 seeds with SBM-SFC < RS+, pipelines " + fmt("%.0f s", synthetic_seconds)};
  if (synthetic_seconds >= 1800) {
    o.pass = false;
    o.detail += "; over the 1800 s limit";
  }
  return o;
}

Outcome structure_recovery() {
  int ok = 0;
  double min_rand = 1;
  for (const auto& r : synthetic_runs) {
    min_rand = std::min(min_rand, r.rand);
    ok += r.rand >= 0.9 && r.cross_found == r.cross_total;
  }
  return {ok >= 4, std::to_string(ok) + "/5 seeds recover groups and cross words, min Rand " + fmt("%.3f", min_rand)};
}

// 6 ------------------------------------------------------------------------

Outcome mask_and_pruning() {
  SyntheticConfig sc;
  sc.n_train = 500;
  sc.n_test = 10;
  sc.seed = 9;
  const Corpus train = generate_synthetic(sc).train;
  const int k = train.vocab_size();
  Rng rng(606);
  const SbmStructure s = oracle::random_structure(8, k, rng, 0.2);
  TrainConfig tc;
  tc.epochs = 3;
  tc.seed = 6;
  tc.init_visible_bias_from_data = true;
  const SbmModel m = sbm_train(train, s, tc);
  const double off = (!s.mask().array()).select(m.W.array().abs(), 0.0).sum();

  const RsModel rs = rs_train(train, 8, tc);
  PruneConfig pc;
  pc.target_per_unit = static_cast<int>(std::ceil(0.2 * k));
  pc.prune_fraction = 0.2;
  pc.retrain_epochs_per_iter = 1;
  pc.train = tc;
  const PruneResult pr = prune_and_retrain(rs, train, pc);
  bool exact = true;
  for (int j = 0; j < 8; ++j) {
    exact &= pr.mask.row(j).count() == pc.target_per_unit;
    exact &= (pr.model.W.row(j).array() != 0.0).count() == pc.target_per_unit;
  }
  return {off == 0.0 && exact, "off-structure |W| sum " + fmt("%g", off) + ", " +
                                   std::to_string(pc.target_per_unit) + " connections per unit " +
                                   (exact ? "everywhere" : "violated")};
}

// 7 ------------------------------------------------------------------------

Outcome cmi_properties() {
  double min_score = INFINITY;
  for (const auto& r : synthetic_runs) min_score = std::min(min_score, r.min_cmi);

  // Two units on a tree edge. Unit 0's weights on words 0 and 1 keep
  // sum_k exp(b_k + W_0k h_0) independent of h_0, so word 4 (owned by unit 1)
  // is conditionally independent of Z_0 given Z_1.
  const SbmStructure s(2, 6, {{0, 0}, {0, 1}, {1, 2}, {1, 3}, {1, 4}, {1, 5}}, {{0, 1}});
  SbmModel m = SbmModel::zeros(s);
  m.W(0, 0) = 0.5;
  m.W(0, 1) = std::log(2.0 - std::exp(0.5));
  m.W(1, 2) = 0.8;
  m.W(1, 3) = -0.4;
  m.W(1, 4) = 1.2;
  m.W(1, 5) = -0.7;
  m.a << -0.1, 0.05;
  m.tree_weights[0] = 0.3;
  const oracle::AncestralSampler sampler(m, 10);
  Rng rng(707);
  Corpus c;
  for (int w = 0; w < 6; ++w) c.vocab.push_back("v" + std::to_string(w));
  for (int n = 0; n < 5000; ++n) c.docs.push_back(sampler.sample(rng));
  const double planted = estimate_cmi(m, c, 0, 4);

  TripleTable copy{};
  for (int n = 0; n < 5000; ++n) {
    const int z = uniform01(rng) < 0.5, zp = uniform01(rng) < 0.5;
    copy[z][zp][z] += 1.0;
  }
  const double copy_cmi = conditional_mutual_information(copy);
  const bool pass = min_score >= -1e-9 && planted <= 0.005 && std::abs(copy_cmi - std::log(2.0)) <= 0.01;
  return {pass, "min score " + fmt("%.2e", min_score) + ", planted " + fmt("%.5f", planted) + " nats, copy " +
                    fmt("%.5f", copy_cmi)};
}

// 8 ------------------------------------------------------------------------

Outcome interpretability_arithmetic() {
  // "eps" and "zeta" have no embedding.
  const std::vector<std::string> vocab = {"alpha", "eps", "beta", "zeta", "gamma", "delta"};
  std::istringstream text("alpha 1 0 0\nbeta 1 1 0\ngamma 0 1 0\ndelta 0 0 2\n");
  const EmbeddingTable emb = read_embeddings(text);
  RsModel m = RsModel::zeros(2, 6);
  m.W.row(0) << 0.9, -0.8, 0.7, 0.6, 0.1, 0.05;
  m.W.row(1) << 0.1, 0.0, -0.5, 0.0, 0.4, 0.3;
  const double r = std::sqrt(0.5);
  const double want0 = r;          // top 4 = alpha eps beta zeta -> {alpha, beta}
  const double want1 = 2 * r / 6;  // top 4 = beta gamma delta alpha
  const auto u0 = interpretability_unit(m, 0, vocab, emb, 4);
  const auto u1 = interpretability_unit(m, 1, vocab, emb, 4);
  const auto q = interpretability_model(m, vocab, emb, 4);
  const double err = std::max({std::abs(u0.score - want0), std::abs(u1.score - want1),
                               std::abs(q.score - (want0 + want1) / 2)});
  const bool skip = u0.used_words == std::vector<int>{0, 2} && u0.top_words.size() == 4;
  return {err <= 1e-12 && skip, "max error " + fmt("%.2e", err) + ", skip rule " + (skip ? "ok" : "wrong")};
}

// 9 ------------------------------------------------------------------------

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
    std::ifstream in(e.path(), std::ios::binary);
    files[fs::relative(e.path(), root).generic_string()] =
        std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  return files;
}

Outcome determinism(const fs::path& root) {
  fs::remove_all(root);
  fs::create_directories(root);
  {
    std::ofstream emb(root / "embeddings.txt");
    for (int w = 0; w < 60; ++w) emb << 'w' << w << ' ' << (w % 4) << ' ' << (w % 7) << " 1\n";
  }
  std::map<std::string, std::string> runs[2];
  const int thread_counts[2] = {1, threads()};
  for (int i = 0; i < 2; ++i) {
    PipelineConfig c;
    c.name = "determinism";
    c.output_dir = root / (i == 0 ? "a" : "b");
    SyntheticConfig sc;
    sc.n_train = 400;
    sc.n_test = 40;
    sc.seed = 5;
    c.synthetic = sc;
    c.train.epochs = 2;
    c.train.seed = 3;
    c.train.learning_rate = 0.003;
    c.train.mean_field_final = true;
    c.prune_fraction = 0.5;
    c.ais_runs = 4;
    c.eval_seed = 2;
    c.schedule.segments = {{0.0, 1.0, 200}};
    c.embeddings = root / "embeddings.txt";
    std::ostringstream log;
    run_pipeline(c, thread_counts[i], log);
    runs[i] = snapshot(c.output_dir);
  }
  int differ = 0;
  for (const auto& [name, bytes] : runs[0]) {
    const auto it = runs[1].find(name);
    if (it == runs[1].end() || it->second != bytes) ++differ;
  }
  const bool same = differ == 0 && runs[0].size() == runs[1].size() && !runs[0].empty();
  return {same, std::to_string(runs[0].size()) + " files compared, " + std::to_string(differ) + " differ"};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path scratch = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "sparsebm_acceptance";
  run(1, "bp-exactness", bp_exactness, 10);
  run(2, "gradient-correctness", gradient_correctness, 60);
  run(3, "ais-calibration", ais_calibration, 300);
  std::printf("synthetic pipeline, 5 seeds:\n");
  try {
    run_synthetic(scratch / "synthetic");
  } catch (const std::exception& e) {
    std::printf("  synthetic pipeline failed: %s\n", e.what());
  }
  run(4, "directional-replication", directional_replication);
  run(5, "structure-recovery", structure_recovery);
  run(6, "mask-and-pruning", mask_and_pruning);
  run(7, "cmi-properties", cmi_properties);
  run(8, "interpretability", interpretability_arithmetic);
  run(9, "determinism", [&] { return determinism(scratch / "determinism"); });
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
