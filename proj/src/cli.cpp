#include "sparsebm/cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <variant>

#include <CLI11.hpp>
#include <json.hpp>

#include "sparsebm/interpretability.hpp"
#include "sparsebm/perplexity.hpp"
#include "sparsebm/pipeline.hpp"
#include "sparsebm/pruning.hpp"
#include "sparsebm/structure.hpp"
#include "sparsebm/synthetic.hpp"

namespace sparsebm {

namespace fs = std::filesystem;

fs::path manifest_path(const fs::path& output) { return fs::path(output.string() + ".manifest.json"); }

void write_manifest(const fs::path& path, const RunManifest& m) {
  const nlohmann::ordered_json j = {{"command", m.command},
                                    {"config_hash", m.config_hash},
                                    {"seed", m.seed},
                                    {"inputs", m.inputs},
                                    {"outputs", m.outputs},
                                    {"wall_time_seconds", m.wall_time_seconds}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

namespace {

/// Usage problems detected after CLI11 parsing (exit code 1).
class UsageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainFlags {
  TrainConfig config;
  void add(CLI::App* app) {
    app->add_option("--epochs", config.epochs, "Training epochs")->capture_default_str();
    app->add_option("--cd-steps", config.cd_steps, "Gibbs steps T per CD update")->capture_default_str();
    app->add_option("--lr", config.learning_rate, "Learning rate")->capture_default_str();
    app->add_option("--batch-size", config.batch_size, "Documents per minibatch")->capture_default_str();
    app->add_option("--seed", config.seed, "Random seed")->capture_default_str();
    app->add_option("--init-std", config.weight_init_std, "Std of the initial weights")
        ->capture_default_str();
    app->add_flag("--init-bias-from-data", config.init_visible_bias_from_data,
                  "Initialize word biases to log word frequencies");
    app->add_option("--momentum", config.momentum, "Momentum")->capture_default_str();
    app->add_option("--weight-decay", config.weight_decay, "L2 weight decay on W")
        ->capture_default_str();
    app->add_flag("--mean-field-final", config.mean_field_final,
                  "Use probabilities for the final negative-phase hidden update");
  }
};

using AnyModel = std::variant<SbmModel, LoadedRsModel>;

std::string sniff_kind(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("# sparsebm ", 0) != 0) return {};
  std::istringstream ss(line.substr(11));
  std::string kind;
  ss >> kind;
  return kind;
}

AnyModel load_any_model(const fs::path& path) {
  const std::string kind = sniff_kind(path);
  if (kind == "sbm-model") return load_sbm_model(path);
  if (kind == "rs-model" || kind == "rs-masked-model") return load_rs_model(path);
  throw ParseError(path.string() + " is not a model file");
}

/// Accepts an sbm-structure file or a skeleton file.
SbmStructure load_any_structure(const fs::path& path, int vocab_size) {
  const std::string kind = sniff_kind(path);
  if (kind == "sbm-structure" || kind == "sbm-model") {
    SbmStructure s = load_sbm_structure(path);
    if (s.vocab_size() != vocab_size)
      throw StructuralError("structure has K=" + std::to_string(s.vocab_size()) +
                            " but the corpus has K=" + std::to_string(vocab_size));
    return s;
  }
  return load_skeleton(path, vocab_size).to_structure(vocab_size);
}

Corpus require_corpus(const fs::path& path) {
  const LoadedCorpus lc = load_corpus(path);
  if (lc.dropped_empty > 0)
    std::cerr << "warning: dropped " << lc.dropped_empty << " empty documents from " << path << '\n';
  return lc.corpus;
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string config_hash(const CLI::App* sub) { return hex64(fnv1a(sub->get_name() + "\n" + sub->config_to_str(true, false))); }

}  // namespace

int run_cli(const std::vector<std::string>& argv_in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse Boltzmann Machines for bag-of-words corpora", "sparsebm"};
  app.require_subcommand(1);
  int threads = default_thread_count();
  app.add_option("--threads", threads, "Worker threads (default: $SPARSEBM_THREADS or 1)");
  std::function<void()> action;
  std::string output;

  // prepare
  auto* prepare = app.add_subcommand("prepare", "Load, filter and split a UCI corpus or generate a synthetic one");
  std::string p_docword, p_vocab, p_method = "frequency";
  int p_k = 0, p_train = 0, p_val = 0, p_test = 0;
  std::uint64_t p_seed = 0;
  bool p_synth = false;
  SyntheticConfig p_sc;
  prepare->add_option("--docword", p_docword, "UCI docword file");
  prepare->add_option("--vocab", p_vocab, "UCI vocab file (default: <docword>.vocab)");
  prepare->add_option("--vocab-size", p_k, "Keep the top K words (0 = all)");
  prepare->add_option("--vocab-method", p_method, "frequency or tfidf")->capture_default_str();
  prepare->add_option("--split-seed", p_seed, "Seed for the document shuffle");
  prepare->add_option("--train", p_train, "Training documents");
  prepare->add_option("--validation", p_val, "Validation documents");
  prepare->add_option("--test", p_test, "Test documents");
  prepare->add_flag("--synthetic", p_synth, "Generate the synthetic sparse-topic corpus instead");
  prepare->add_option("--synthetic-seed", p_sc.seed, "Synthetic generator seed")->capture_default_str();
  prepare->add_option("--synthetic-train", p_sc.n_train, "Synthetic training documents")->capture_default_str();
  prepare->add_option("--synthetic-test", p_sc.n_test, "Synthetic test documents")->capture_default_str();
  prepare->add_option("-o,--output", output, "Output prefix")->required();
  prepare->callback([&] {
    action = [&] {
      Timer timer;
      RunManifest m{"prepare", config_hash(prepare), p_synth ? p_sc.seed : p_seed, {}, {}, 0};
      auto emit = [&](const Corpus& c, const std::string& suffix) {
        const fs::path path = output + suffix;
        save_corpus(c, path);
        m.outputs.push_back(path.string());
        m.outputs.push_back(default_vocab_path(path).string());
        out << path.string() << '\t' << c.size() << " documents\tK=" << c.vocab_size() << '\n';
      };
      if (p_synth) {
        if (!p_docword.empty()) throw UsageError("--synthetic and --docword are exclusive");
        const SyntheticCorpus syn = generate_synthetic(p_sc);
        emit(syn.train, ".train.bow");
        emit(syn.test, ".test.bow");
        const fs::path groups = output + ".groups.tsv";
        std::ofstream g(groups);
        g << "word\tgroup\n";
        for (std::size_t w = 0; w < syn.group_of.size(); ++w) g << w << '\t' << syn.group_of[w] << '\n';
        m.outputs.push_back(groups.string());
      } else {
        if (p_docword.empty()) throw UsageError("prepare needs --docword or --synthetic");
        const fs::path vocab = p_vocab.empty() ? default_vocab_path(p_docword) : fs::path(p_vocab);
        LoadedCorpus lc = load_uci_bow(p_docword, vocab);
        if (lc.dropped_empty > 0) err << "warning: dropped " << lc.dropped_empty << " empty documents\n";
        m.inputs = {p_docword, vocab.string()};
        Corpus c = lc.corpus;
        if (p_k > 0) c = select_vocab(c, p_k, parse_vocab_method(p_method));
        if (p_train + p_val + p_test == 0) {
          emit(c, ".bow");
        } else {
          const CorpusSplit s = split_corpus(c, p_seed, p_train, p_val, p_test);
          emit(s.train, ".train.bow");
          emit(s.validation, ".validation.bow");
          emit(s.test, ".test.bow");
          for (const auto& [ids, name] : {std::pair{&s.train_ids, ".train.ids"},
                                          std::pair{&s.validation_ids, ".validation.ids"},
                                          std::pair{&s.test_ids, ".test.ids"}}) {
            write_index_list(*ids, output + name);
            m.outputs.push_back(output + name);
          }
        }
      }
      m.wall_time_seconds = timer.seconds();
      write_manifest(manifest_path(output), m);
    };
  });

  // skeleton
  auto* skeleton = app.add_subcommand("skeleton", "Build a two-level skeleton from word co-occurrence");
  std::string s_corpus;
  SkeletonConfig s_cfg;
  skeleton->add_option("--corpus", s_corpus, "Training corpus (docword)")->required();
  skeleton->add_option("--island-max", s_cfg.island_max, "Maximum words per island")->capture_default_str();
  skeleton->add_option("--supergroup-max", s_cfg.supergroup_max, "Maximum islands per hidden unit")
      ->capture_default_str();
  skeleton->add_option("--mi-floor", s_cfg.mi_floor, "Absolute MI floor in nats (negative: 10.83/(2N))")
      ->capture_default_str();
  skeleton->add_option("--relative-floor", s_cfg.relative_floor,
                       "MI floor as a fraction of the strongest pairwise MI")
      ->capture_default_str();
  skeleton->add_option("-o,--output", output, "Skeleton file")->required();
  skeleton->callback([&] {
    action = [&] {
      Timer timer;
      const Corpus c = require_corpus(s_corpus);
      const Skeleton sk = build_skeleton(c, s_cfg);
      save_skeleton(output, sk);
      out << "hidden units\t" << sk.hidden_count() << "\ntree edges\t" << sk.tree_edges.size() << '\n';
      write_manifest(manifest_path(output),
                     {"skeleton", config_hash(skeleton), 0, {s_corpus}, {output}, timer.seconds()});
    };
  });

  // expand
  auto* expand = app.add_subcommand("expand", "Add connections by conditional mutual information");
  std::string e_skeleton, e_tree, e_corpus, e_cmi;
  double e_fraction = 0.2;
  std::optional<int> e_per_unit;
  std::vector<std::string> e_overrides;
  expand->add_option("--skeleton", e_skeleton, "Skeleton file")->required();
  expand->add_option("--tree-model", e_tree, "Trained skeleton-structured SBM")->required();
  expand->add_option("--corpus", e_corpus, "Training corpus (docword)")->required();
  expand->add_option("--fraction", e_fraction, "Target per-unit degree as a fraction of K")
      ->capture_default_str();
  expand->add_option("--per-unit", e_per_unit, "New connections per hidden unit (overrides --fraction)");
  expand->add_option("--override", e_overrides, "Per-unit budget j=M (repeatable)");
  expand->add_option("--cmi-out", e_cmi, "Write the CMI table as TSV");
  expand->add_option("-o,--output", output, "Expanded structure file")->required();
  expand->callback([&] {
    action = [&] {
      Timer timer;
      if (!(e_fraction >= 0 && e_fraction <= 1)) throw UsageError("--fraction must be in [0, 1]");
      ExpansionBudget budget;
      budget.fraction = e_fraction;
      budget.per_unit = e_per_unit;
      for (const auto& o : e_overrides) {
        const auto eq = o.find('=');
        try {
          if (eq == std::string::npos) throw std::invalid_argument(o);
          budget.overrides[std::stoi(o.substr(0, eq))] = std::stoi(o.substr(eq + 1));
        } catch (const std::exception&) {
          throw UsageError("--override expects j=M, got '" + o + "'");
        }
      }
      const Corpus c = require_corpus(e_corpus);
      const Skeleton sk = load_skeleton(e_skeleton, c.vocab_size());
      const SbmModel tree = load_sbm_model(e_tree);
      const Expansion ex = sbm_sfc(sk, tree, c, budget, threads);
      for (const auto& w : ex.warnings) err << "warning: " << w << '\n';
      save_sbm_structure(output, ex.structure);
      RunManifest m{"expand", config_hash(expand), 0, {e_skeleton, e_tree, e_corpus}, {output}, 0};
      if (!e_cmi.empty()) {
        std::ofstream t(e_cmi);
        write_cmi_tsv(t, ex.cmi);
        m.outputs.push_back(e_cmi);
      }
      out << "visible edges\t" << ex.structure.visible_edges().size() << '\n';
      m.wall_time_seconds = timer.seconds();
      write_manifest(manifest_path(output), m);
    };
  });

  // train-rs
  auto* train_rs = app.add_subcommand("train-rs", "Train a Replicated Softmax model");
  std::string r_corpus, r_structure;
  int r_hidden = 0;
  TrainFlags r_flags;
  train_rs->add_option("--corpus", r_corpus, "Training corpus (docword)")->required();
  train_rs->add_option("--hidden", r_hidden, "Hidden units F");
  train_rs->add_option("--structure", r_structure,
                       "Restrict connections to a structure or skeleton file (F taken from it)");
  r_flags.add(train_rs);
  train_rs->add_option("-o,--output", output, "Model file")->required();
  train_rs->callback([&] {
    action = [&] {
      Timer timer;
      const Corpus c = require_corpus(r_corpus);
      std::vector<std::string> inputs = {r_corpus};
      if (!r_structure.empty()) {
        const SbmStructure s = load_any_structure(r_structure, c.vocab_size());
        if (r_hidden != 0 && r_hidden != s.hidden_count())
          throw UsageError("--hidden disagrees with the structure's hidden count");
        const ConnectionMask mask = s.mask();
        RsModel m = rs_initialize(c, s.hidden_count(), r_flags.config);
        rs_fit(m, c, r_flags.config, &mask);
        save_rs_model(output, m, &mask);
        inputs.push_back(r_structure);
      } else {
        if (r_hidden < 1) throw UsageError("train-rs needs --hidden or --structure");
        save_rs_model(output, rs_train(c, r_hidden, r_flags.config));
      }
      write_manifest(manifest_path(output), {"train-rs", config_hash(train_rs), r_flags.config.seed,
                                             inputs, {output}, timer.seconds()});
    };
  });

  // train-sbm
  auto* train_sbm = app.add_subcommand("train-sbm", "Train a Sparse Boltzmann Machine");
  std::string b_corpus, b_structure;
  TrainFlags b_flags;
  train_sbm->add_option("--corpus", b_corpus, "Training corpus (docword)")->required();
  train_sbm->add_option("--structure", b_structure, "Structure or skeleton file")->required();
  b_flags.add(train_sbm);
  train_sbm->add_option("-o,--output", output, "Model file")->required();
  train_sbm->callback([&] {
    action = [&] {
      Timer timer;
      const Corpus c = require_corpus(b_corpus);
      const SbmStructure s = load_any_structure(b_structure, c.vocab_size());
      save_sbm_model(output, sbm_train(c, s, b_flags.config));
      write_manifest(manifest_path(output), {"train-sbm", config_hash(train_sbm), b_flags.config.seed,
                                             {b_corpus, b_structure}, {output}, timer.seconds()});
    };
  });

  // prune
  auto* prune = app.add_subcommand("prune", "Magnitude-prune and retrain an RS model");
  std::string q_model, q_corpus, q_log;
  std::optional<int> q_target;
  double q_target_fraction = 0.2;
  PruneConfig q_cfg;
  TrainFlags q_flags;
  q_flags.config.epochs = 1;
  prune->add_option("--model", q_model, "Trained RS model")->required();
  prune->add_option("--corpus", q_corpus, "Training corpus (docword)")->required();
  prune->add_option("--target", q_target, "Connections kept per hidden unit");
  prune->add_option("--target-fraction", q_target_fraction, "Target as a fraction of K (ceil)")
      ->capture_default_str();
  prune->add_option("--prune-fraction", q_cfg.prune_fraction, "Fraction removed per iteration")
      ->capture_default_str();
  prune->add_option("--retrain-epochs", q_cfg.retrain_epochs_per_iter, "Retraining epochs per iteration")
      ->capture_default_str();
  q_flags.add(prune);
  prune->add_option("--log", q_log, "Iteration log TSV (default: <output>.prune_log.tsv)");
  prune->add_option("-o,--output", output, "Pruned model file")->required();
  prune->callback([&] {
    action = [&] {
      Timer timer;
      const Corpus c = require_corpus(q_corpus);
      const LoadedRsModel lm = load_rs_model(q_model);
      q_cfg.target_per_unit =
          q_target ? *q_target
                   : std::max(1, static_cast<int>(std::ceil(q_target_fraction * c.vocab_size() - 1e-9)));
      q_cfg.train = q_flags.config;
      const PruneResult r = prune_and_retrain(lm.model, c, q_cfg);
      save_rs_model(output, r.model, &r.mask);
      const std::string log_path = q_log.empty() ? output + ".prune_log.tsv" : q_log;
      std::ofstream l(log_path);
      write_prune_log(l, r.log);
      out << "per-unit connections\t" << q_cfg.target_per_unit << "\ntotal epochs\t" << r.total_epochs << '\n';
      write_manifest(manifest_path(output), {"prune", config_hash(prune), q_flags.config.seed,
                                             {q_model, q_corpus}, {output, log_path}, timer.seconds()});
    };
  });

  // eval
  auto* eval = app.add_subcommand("eval", "Per-word perplexity with AIS partition estimates");
  std::string v_model, v_docs, v_out;
  PerplexityOptions v_opts;
  int v_sample = 0;
  eval->add_option("--model", v_model, "Model file")->required();
  eval->add_option("--docs", v_docs, "Evaluation documents (docword)")->required();
  eval->add_option("--ais-runs", v_opts.ais.runs, "AIS runs per document length")->capture_default_str();
  eval->add_option("--seed", v_opts.ais.seed, "AIS seed")->capture_default_str();
  eval->add_flag("--multinomial", v_opts.include_multinomial, "Include the multinomial coefficient");
  eval->add_flag("--exact", v_opts.exact, "Exact partition functions (tiny models only)");
  eval->add_option("--sample", v_sample, "Evaluate a seeded subsample of this many documents");
  eval->add_option("-o,--output", v_out, "Report TSV (default: stdout)");
  eval->callback([&] {
    action = [&] {
      Timer timer;
      const Corpus c = require_corpus(v_docs);
      std::vector<Document> docs = c.docs;
      if (v_sample > 0 && v_sample < c.size()) {
        std::vector<int> ids(c.size());
        std::iota(ids.begin(), ids.end(), 0);
        Rng rng = derive_rng(v_opts.ais.seed, 0x5A3);
        shuffle_in_place(std::span<int>(ids), rng);
        ids.resize(v_sample);
        std::sort(ids.begin(), ids.end());
        docs.clear();
        for (int i : ids) docs.push_back(c.docs[i]);
      }
      v_opts.ais.threads = threads;
      const AnyModel m = load_any_model(v_model);
      const PerplexityReport rep = std::holds_alternative<SbmModel>(m)
                                       ? perplexity(std::get<SbmModel>(m), docs, v_opts)
                                       : perplexity(std::get<LoadedRsModel>(m).model, docs, v_opts);
      if (v_out.empty()) {
        write_perplexity_report(out, rep);
      } else {
        std::ofstream f(v_out);
        write_perplexity_report(f, rep);
        out << "perplexity\t" << format_double(rep.perplexity) << '\n';
        write_manifest(manifest_path(v_out), {"eval", config_hash(eval), v_opts.ais.seed,
                                              {v_model, v_docs}, {v_out}, timer.seconds()});
      }
    };
  });

  // interpret
  auto* interpret = app.add_subcommand("interpret", "Embedding-based interpretability score");
  std::string i_model, i_emb, i_corpus, i_out;
  int i_top = 10;
  interpret->add_option("--model", i_model, "Model file")->required();
  interpret->add_option("--embeddings", i_emb, "Word vectors, one 'word v1 ... vd' per line")->required();
  interpret->add_option("--corpus", i_corpus, "Corpus whose vocabulary the model uses (docword)")->required();
  interpret->add_option("--top-n", i_top, "Words per hidden unit")->capture_default_str();
  interpret->add_option("-o,--output", i_out, "Report TSV (default: stdout)");
  interpret->callback([&] {
    action = [&] {
      Timer timer;
      const Corpus c = require_corpus(i_corpus);
      const EmbeddingTable emb = load_embeddings(i_emb);
      if (emb.duplicates > 0)
        err << "warning: " << emb.duplicates << " duplicate embedding rows; last occurrence kept\n";
      const AnyModel m = load_any_model(i_model);
      ModelInterpretability r;
      if (const auto* s = std::get_if<SbmModel>(&m)) {
        r = interpretability_model(*s, c.vocab, emb, i_top);
      } else {
        const auto& lm = std::get<LoadedRsModel>(m);
        r = interpretability_model(lm.model, c.vocab, emb, i_top, lm.mask ? &*lm.mask : nullptr);
      }
      if (i_out.empty()) {
        write_interpretability_report(out, r, c.vocab);
      } else {
        std::ofstream f(i_out);
        write_interpretability_report(f, r, c.vocab);
        out << "interpretability\t" << format_double(r.score) << '\n';
        write_manifest(manifest_path(i_out), {"interpret", config_hash(interpret), 0,
                                              {i_model, i_emb, i_corpus}, {i_out}, timer.seconds()});
      }
    };
  });

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "Run the full experiment from a JSON config");
  std::string l_config;
  pipeline->add_option("config", l_config, "Pipeline config (JSON)")->required();
  pipeline->callback([&] {
    action = [&] {
      const PipelineConfig cfg = read_pipeline_config(l_config);
      const PipelineResult r = run_pipeline(cfg, threads, err);
      write_comparison(out, r.methods);
      err << "stages run " << r.stages_run << ", cached " << r.stages_cached << '\n';
    };
  });

  std::vector<std::string> args(argv_in.rbegin(), argv_in.rend());
  if (!args.empty()) args.pop_back();  // program name
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }
  if (threads < 1) {
    err << "error: --threads must be positive\n";
    return kExitUsage;
  }
  try {
    if (action) action();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const StageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace sparsebm
