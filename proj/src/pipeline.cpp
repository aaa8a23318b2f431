#include "sparsebm/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sparsebm/interpretability.hpp"
#include "sparsebm/perplexity.hpp"
#include "sparsebm/pruning.hpp"

namespace sparsebm {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// JSON helpers

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ArgumentError(where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!ok.count(key)) throw ArgumentError("unknown key '" + key + "' in " + where);
}

template <typename T>
void read_field(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ArgumentError("invalid value for '" + std::string(key) + "' in " + where);
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

json train_json(const TrainConfig& t) {
  return {{"epochs", t.epochs},
          {"cd_steps", t.cd_steps},
          {"learning_rate", t.learning_rate},
          {"batch_size", t.batch_size},
          {"seed", t.seed},
          {"weight_init_std", t.weight_init_std},
          {"init_visible_bias_from_data", t.init_visible_bias_from_data},
          {"momentum", t.momentum},
          {"weight_decay", t.weight_decay},
          {"mean_field_final", t.mean_field_final}};
}

json synthetic_json(const SyntheticConfig& s) {
  return {{"vocab_size", s.vocab_size},   {"groups", s.groups},
          {"n_train", s.n_train},         {"n_test", s.n_test},
          {"min_length", s.min_length},   {"max_length", s.max_length},
          {"topic_prob", s.topic_prob},   {"background", s.background},
          {"cross_pairs", s.cross_pairs}, {"cross_weight", s.cross_weight},
          {"seed", s.seed}};
}

json schedule_json(const AisSchedule& s) {
  json out = json::array();
  for (const auto& seg : s.segments) out.push_back({seg.beta_start, seg.beta_end, seg.count});
  return out;
}

std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex64(fnv1a(ss.str()));
}

}  // namespace

void PipelineConfig::validate() const {
  if (output_dir.empty()) throw ArgumentError("config is missing 'output_dir'");
  if (!synthetic && docword.empty()) throw ArgumentError("config is missing the corpus");
  if (synthetic) synthetic->validate();
  if (!synthetic) {
    if (n_train < 1) throw ArgumentError("corpus.split.train must be positive");
    if (n_test < 1) throw ArgumentError("corpus.split.test must be positive");
    if (vocab_size < 0) throw ArgumentError("corpus.vocab_size must be non-negative");
  }
  train.validate();
  if (!(prune_fraction > 0 && prune_fraction < 1))
    throw ArgumentError("prune.prune_fraction must be in (0, 1)");
  if (prune_retrain_epochs < 1) throw ArgumentError("prune.retrain_epochs must be positive");
  schedule.validate();
  if (ais_runs < 1) throw ArgumentError("eval.ais_runs must be positive");
  if (eval_sample < 0) throw ArgumentError("eval.sample must be non-negative");
  if (top_n < 1) throw ArgumentError("interpret.top_n must be positive");
  if (methods.empty()) throw ArgumentError("config lists no methods");
  for (const auto& m : methods)
    if (m != "sbm-sfc" && m != "rs+" && m != "rs+sfc" && m != "rs+pruned")
      throw ArgumentError("unknown method '" + m + "'");
}

PipelineConfig parse_pipeline_config(const std::string& json_text, const fs::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ArgumentError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root, "config",
             {"name", "output_dir", "corpus", "skeleton", "expansion", "train", "prune", "eval",
              "interpret", "methods"});
  PipelineConfig c;
  read_field(root, "name", c.name, "config");
  std::string out_dir;
  read_field(root, "output_dir", out_dir, "config");
  if (!out_dir.empty()) c.output_dir = resolve(base_dir, out_dir);

  if (root.contains("corpus")) {
    const json& cj = root["corpus"];
    check_keys(cj, "corpus", {"synthetic", "docword", "vocab", "vocab_size", "vocab_method", "split"});
    if (cj.contains("synthetic")) {
      const json& sj = cj["synthetic"];
      check_keys(sj, "corpus.synthetic",
                 {"vocab_size", "groups", "n_train", "n_test", "min_length", "max_length",
                  "topic_prob", "background", "cross_pairs", "cross_weight", "seed"});
      SyntheticConfig s;
      const std::string w = "corpus.synthetic";
      read_field(sj, "vocab_size", s.vocab_size, w);
      read_field(sj, "groups", s.groups, w);
      read_field(sj, "n_train", s.n_train, w);
      read_field(sj, "n_test", s.n_test, w);
      read_field(sj, "min_length", s.min_length, w);
      read_field(sj, "max_length", s.max_length, w);
      read_field(sj, "topic_prob", s.topic_prob, w);
      read_field(sj, "background", s.background, w);
      read_field(sj, "cross_pairs", s.cross_pairs, w);
      read_field(sj, "cross_weight", s.cross_weight, w);
      read_field(sj, "seed", s.seed, w);
      c.synthetic = s;
    }
    std::string docword, vocab, method = "frequency";
    read_field(cj, "docword", docword, "corpus");
    read_field(cj, "vocab", vocab, "corpus");
    read_field(cj, "vocab_size", c.vocab_size, "corpus");
    read_field(cj, "vocab_method", method, "corpus");
    if (!docword.empty()) {
      c.docword = resolve(base_dir, docword);
      c.vocab = vocab.empty() ? default_vocab_path(c.docword) : resolve(base_dir, vocab);
    }
    c.vocab_method = parse_vocab_method(method);
    if (cj.contains("split")) {
      const json& sp = cj["split"];
      check_keys(sp, "corpus.split", {"seed", "train", "validation", "test"});
      read_field(sp, "seed", c.split_seed, "corpus.split");
      read_field(sp, "train", c.n_train, "corpus.split");
      read_field(sp, "validation", c.n_validation, "corpus.split");
      read_field(sp, "test", c.n_test, "corpus.split");
    }
    if (c.synthetic && !c.docword.empty())
      throw ArgumentError("corpus must be either synthetic or a docword file, not both");
  }

  if (root.contains("skeleton")) {
    const json& sj = root["skeleton"];
    check_keys(sj, "skeleton", {"island_max", "supergroup_max", "mi_floor", "relative_floor", "path"});
    read_field(sj, "island_max", c.skeleton.island_max, "skeleton");
    read_field(sj, "supergroup_max", c.skeleton.supergroup_max, "skeleton");
    read_field(sj, "mi_floor", c.skeleton.mi_floor, "skeleton");
    read_field(sj, "relative_floor", c.skeleton.relative_floor, "skeleton");
    std::string p;
    read_field(sj, "path", p, "skeleton");
    if (!p.empty()) c.skeleton_path = resolve(base_dir, p);
  }
  if (root.contains("expansion")) {
    const json& ej = root["expansion"];
    check_keys(ej, "expansion", {"fraction", "per_unit", "overrides"});
    read_field(ej, "fraction", c.expansion.fraction, "expansion");
    if (ej.contains("per_unit")) {
      int m = 0;
      read_field(ej, "per_unit", m, "expansion");
      c.expansion.per_unit = m;
    }
    if (ej.contains("overrides")) {
      if (!ej["overrides"].is_object()) throw ArgumentError("expansion.overrides must be an object");
      for (const auto& [key, value] : ej["overrides"].items()) {
        try {
          c.expansion.overrides[std::stoi(key)] = value.get<int>();
        } catch (const std::exception&) {
          throw ArgumentError("invalid expansion override '" + key + "'");
        }
      }
    }
  }
  if (root.contains("train")) {
    const json& tj = root["train"];
    check_keys(tj, "train",
               {"epochs", "cd_steps", "learning_rate", "batch_size", "seed", "weight_init_std",
                "init_visible_bias_from_data", "momentum", "weight_decay", "mean_field_final"});
    auto& t = c.train;
    read_field(tj, "epochs", t.epochs, "train");
    read_field(tj, "cd_steps", t.cd_steps, "train");
    read_field(tj, "learning_rate", t.learning_rate, "train");
    read_field(tj, "batch_size", t.batch_size, "train");
    read_field(tj, "seed", t.seed, "train");
    read_field(tj, "weight_init_std", t.weight_init_std, "train");
    read_field(tj, "init_visible_bias_from_data", t.init_visible_bias_from_data, "train");
    read_field(tj, "momentum", t.momentum, "train");
    read_field(tj, "weight_decay", t.weight_decay, "train");
    read_field(tj, "mean_field_final", t.mean_field_final, "train");
  }
  if (root.contains("prune")) {
    const json& pj = root["prune"];
    check_keys(pj, "prune", {"prune_fraction", "retrain_epochs"});
    read_field(pj, "prune_fraction", c.prune_fraction, "prune");
    read_field(pj, "retrain_epochs", c.prune_retrain_epochs, "prune");
  }
  if (root.contains("eval")) {
    const json& ej = root["eval"];
    check_keys(ej, "eval", {"ais_runs", "seed", "multinomial", "sample", "schedule"});
    read_field(ej, "ais_runs", c.ais_runs, "eval");
    read_field(ej, "seed", c.eval_seed, "eval");
    read_field(ej, "multinomial", c.multinomial, "eval");
    read_field(ej, "sample", c.eval_sample, "eval");
    if (ej.contains("schedule")) {
      AisSchedule s;
      try {
        for (const auto& seg : ej["schedule"])
          s.segments.push_back({seg.at(0).get<double>(), seg.at(1).get<double>(), seg.at(2).get<int>()});
      } catch (const json::exception&) {
        throw ArgumentError("eval.schedule must be a list of [beta_start, beta_end, count]");
      }
      c.schedule = s;
    }
  }
  if (root.contains("interpret")) {
    const json& ij = root["interpret"];
    check_keys(ij, "interpret", {"embeddings", "top_n"});
    std::string p;
    read_field(ij, "embeddings", p, "interpret");
    if (!p.empty()) c.embeddings = resolve(base_dir, p);
    read_field(ij, "top_n", c.top_n, "interpret");
  }
  if (root.contains("methods")) read_field(root, "methods", c.methods, "config");
  c.validate();
  return c;
}

PipelineConfig read_pipeline_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_pipeline_config(ss.str(), path.parent_path());
}

void write_comparison(std::ostream& out, const std::vector<MethodResult>& methods) {
  out << "method\thidden\tconnections\tperplexity\tinterpretability\n";
  for (const auto& m : methods)
    out << m.method << '\t' << m.hidden << '\t' << m.connections << '\t'
        << format_double(m.perplexity) << '\t'
        << (m.interpretability ? format_double(*m.interpretability) : "-") << '\n';
}

namespace {

// ---------------------------------------------------------------------------
// Stage runner

struct Stage {
  std::string name;
  std::string key;
  fs::path dir;
};

double read_summary_value(const fs::path& report, const std::string& label) {
  std::ifstream in(report);
  std::string line;
  const std::string prefix = "# " + label + "\t";
  while (std::getline(in, line))
    if (line.rfind(prefix, 0) == 0) return parse_double(line.substr(prefix.size()));
  throw ArgumentError("report " + report.string() + " has no '" + label + "' line");
}

class Runner {
 public:
  Runner(const PipelineConfig& config, int threads, std::ostream& log, PipelineResult& result)
      : config_(config), threads_(threads), log_(log), result_(result) {}

  Stage stage(const std::string& name, const json& material) const {
    Stage s;
    s.name = name;
    s.key = hex64(fnv1a(name + "\n" + material.dump()));
    s.dir = config_.output_dir / (name + "-" + s.key);
    return s;
  }

  /// Runs `body(dir)` unless the stage directory already holds a manifest.
  template <typename Body>
  void run(const Stage& s, const json& inputs, Body&& body) {
    if (fs::exists(s.dir / "manifest.json")) {
      log_ << "[cached] " << s.name << '\n';
      ++result_.stages_cached;
      return;
    }
    log_ << "[run]    " << s.name << '\n';
    const auto start = std::chrono::steady_clock::now();
    const fs::path tmp = s.dir.string() + ".tmp";
    try {
      fs::remove_all(tmp);
      fs::create_directories(tmp);
      body(tmp);
      json manifest = {{"command", "pipeline " + s.name},
                       {"config_hash", s.key},
                       {"seed", config_.train.seed},
                       {"inputs", inputs},
                       {"outputs", json::array()},
                       {"wall_time_seconds", 0.0}};
      std::vector<std::string> outputs;
      for (const auto& entry : fs::directory_iterator(tmp))
        outputs.push_back((s.dir / entry.path().filename()).string());
      std::sort(outputs.begin(), outputs.end());
      manifest["outputs"] = outputs;
      manifest["wall_time_seconds"] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::ofstream(tmp / "manifest.json") << manifest.dump(2) << '\n';
      fs::remove_all(s.dir);
      fs::rename(tmp, s.dir);
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(s.name, e.what());
    }
    ++result_.stages_run;
  }

  int threads() const { return threads_; }

 private:
  const PipelineConfig& config_;
  int threads_;
  std::ostream& log_;
  PipelineResult& result_;
};

Corpus load(const fs::path& docword) { return load_corpus(docword).corpus; }

std::vector<Document> eval_docs(const PipelineConfig& c, const Corpus& test) {
  if (c.eval_sample <= 0 || c.eval_sample >= test.size()) return test.docs;
  std::vector<int> ids(test.size());
  std::iota(ids.begin(), ids.end(), 0);
  Rng rng = derive_rng(c.eval_seed, 0x5A3);
  shuffle_in_place(std::span<int>(ids), rng);
  ids.resize(c.eval_sample);
  std::sort(ids.begin(), ids.end());
  std::vector<Document> out;
  for (int i : ids) out.push_back(test.docs[i]);
  return out;
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config, int threads, std::ostream& log) {
  config.validate();
  PipelineResult result;
  Runner runner(config, threads, log, result);
  fs::create_directories(config.output_dir);

  // Corpus.
  json corpus_key;
  if (config.synthetic) {
    corpus_key = {{"synthetic", synthetic_json(*config.synthetic)}};
  } else {
    corpus_key = {{"docword", file_digest(config.docword)},
                  {"vocab", file_digest(config.vocab)},
                  {"vocab_size", config.vocab_size},
                  {"vocab_method", config.vocab_method == VocabMethod::TfIdf ? "tfidf" : "frequency"},
                  {"split", {config.split_seed, config.n_train, config.n_validation, config.n_test}}};
  }
  const Stage corpus_stage = runner.stage("corpus", corpus_key);
  runner.run(corpus_stage, corpus_key, [&](const fs::path& dir) {
    if (config.synthetic) {
      const SyntheticCorpus syn = generate_synthetic(*config.synthetic);
      save_corpus(syn.train, dir / "train.bow");
      save_corpus(syn.test, dir / "test.bow");
      std::ofstream groups(dir / "groups.tsv");
      groups << "word\tgroup\n";
      for (std::size_t w = 0; w < syn.group_of.size(); ++w) groups << w << '\t' << syn.group_of[w] << '\n';
      std::ofstream cross(dir / "cross.tsv");
      cross << "source_group\tword\n";
      for (const auto& c : syn.cross) cross << c.source_group << '\t' << c.word << '\n';
    } else {
      const LoadedCorpus loaded = load_uci_bow(config.docword, config.vocab);
      Corpus full = loaded.corpus;
      if (config.vocab_size > 0) full = select_vocab(full, config.vocab_size, config.vocab_method);
      const CorpusSplit split = split_corpus(full, config.split_seed, config.n_train,
                                             config.n_validation, config.n_test);
      save_corpus(split.train, dir / "train.bow");
      save_corpus(split.validation, dir / "validation.bow");
      save_corpus(split.test, dir / "test.bow");
      write_index_list(split.train_ids, dir / "train.ids");
      write_index_list(split.validation_ids, dir / "validation.ids");
      write_index_list(split.test_ids, dir / "test.ids");
    }
  });
  const Corpus train = load(corpus_stage.dir / "train.bow");
  const Corpus test = load(corpus_stage.dir / "test.bow");
  const int k = train.vocab_size();

  // Skeleton.
  json skeleton_key = {{"corpus", corpus_stage.key}};
  if (!config.skeleton_path.empty()) {
    try {
      skeleton_key["loaded"] = file_digest(config.skeleton_path);
    } catch (const std::exception& e) {
      throw StageError("skeleton", e.what());
    }
  } else {
    skeleton_key["island_max"] = config.skeleton.island_max;
    skeleton_key["supergroup_max"] = config.skeleton.supergroup_max;
    skeleton_key["mi_floor"] = config.skeleton.mi_floor;
    skeleton_key["relative_floor"] = config.skeleton.relative_floor;
  }
  const Stage skeleton_stage = runner.stage("skeleton", skeleton_key);
  runner.run(skeleton_stage, skeleton_key, [&](const fs::path& dir) {
    const Skeleton sk = config.skeleton_path.empty() ? build_skeleton(train, config.skeleton)
                                                     : load_skeleton(config.skeleton_path, k);
    save_skeleton(dir / "skeleton.txt", sk);
  });
  result.skeleton = load_skeleton(skeleton_stage.dir / "skeleton.txt", k);
  const int f = result.skeleton.hidden_count();
  const json train_key = train_json(config.train);

  // Skeleton-structured model used for CMI inference.
  const json tree_key = {{"skeleton", skeleton_stage.key}, {"train", train_key}};
  const Stage tree_stage = runner.stage("tree-model", tree_key);
  runner.run(tree_stage, tree_key, [&](const fs::path& dir) {
    save_sbm_model(dir / "model.sbm",
                   sbm_train(train, result.skeleton.to_structure(k), config.train));
  });

  // Expansion.
  json expansion_key = {{"tree", tree_stage.key}, {"fraction", config.expansion.fraction}};
  if (config.expansion.per_unit) expansion_key["per_unit"] = *config.expansion.per_unit;
  for (const auto& [j, m] : config.expansion.overrides)
    expansion_key["overrides"][std::to_string(j)] = m;
  const Stage expand_stage = runner.stage("expand", expansion_key);
  runner.run(expand_stage, expansion_key, [&](const fs::path& dir) {
    const SbmModel tree = load_sbm_model(tree_stage.dir / "model.sbm");
    const Expansion ex = sbm_sfc(result.skeleton, tree, train, config.expansion, runner.threads());
    save_sbm_structure(dir / "structure.sbm", ex.structure);
    std::ofstream cmi(dir / "cmi.tsv");
    write_cmi_tsv(cmi, ex.cmi);
    std::ofstream warn(dir / "warnings.txt");
    for (const auto& w : ex.warnings) {
      warn << w << '\n';
      log << "warning: " << w << '\n';
    }
  });
  const SbmStructure sfc_structure = load_sbm_structure(expand_stage.dir / "structure.sbm");

  // Models.
  struct Trained {
    std::string method;
    Stage stage;
    fs::path file;
  };
  std::vector<Trained> trained;
  auto wants = [&](const std::string& m) {
    return std::find(config.methods.begin(), config.methods.end(), m) != config.methods.end();
  };

  const json rs_key = {{"corpus", corpus_stage.key}, {"hidden", f}, {"train", train_key}};
  const Stage rs_stage = runner.stage("train-rs+", rs_key);
  if (wants("rs+") || wants("rs+pruned")) {
    runner.run(rs_stage, rs_key, [&](const fs::path& dir) {
      save_rs_model(dir / "model.rs", rs_train(train, f, config.train));
    });
  }
  if (wants("sbm-sfc")) {
    const json key = {{"structure", expand_stage.key}, {"train", train_key}};
    const Stage s = runner.stage("train-sbm-sfc", key);
    runner.run(s, key, [&](const fs::path& dir) {
      save_sbm_model(dir / "model.sbm", sbm_train(train, sfc_structure, config.train));
    });
    trained.push_back({"sbm-sfc", s, s.dir / "model.sbm"});
  }
  if (wants("rs+")) trained.push_back({"rs+", rs_stage, rs_stage.dir / "model.rs"});
  if (wants("rs+sfc")) {
    const json key = {{"structure", expand_stage.key}, {"train", train_key}};
    const Stage s = runner.stage("train-rs+sfc", key);
    runner.run(s, key, [&](const fs::path& dir) {
      const ConnectionMask mask = sfc_structure.mask();
      RsModel m = rs_initialize(train, f, config.train);
      rs_fit(m, train, config.train, &mask);
      save_rs_model(dir / "model.rs", m, &mask);
    });
    trained.push_back({"rs+sfc", s, s.dir / "model.rs"});
  }
  if (wants("rs+pruned")) {
    const json key = {{"model", rs_stage.key},
                      {"target_fraction", config.expansion.fraction},
                      {"prune_fraction", config.prune_fraction},
                      {"retrain_epochs", config.prune_retrain_epochs},
                      {"train", train_key}};
    const Stage s = runner.stage("prune", key);
    runner.run(s, key, [&](const fs::path& dir) {
      PruneConfig pc;
      pc.target_per_unit = static_cast<int>(std::ceil(config.expansion.fraction * k - 1e-9));
      pc.target_per_unit = std::max(1, pc.target_per_unit);
      pc.prune_fraction = config.prune_fraction;
      pc.retrain_epochs_per_iter = config.prune_retrain_epochs;
      pc.train = config.train;
      const PruneResult pr =
          prune_and_retrain(load_rs_model(rs_stage.dir / "model.rs").model, train, pc);
      save_rs_model(dir / "model.rs", pr.model, &pr.mask);
      std::ofstream plog(dir / "prune_log.tsv");
      write_prune_log(plog, pr.log);
    });
    trained.push_back({"rs+pruned", s, s.dir / "model.rs"});
  }

  // Evaluation and interpretability.
  const std::vector<Document> docs = eval_docs(config, test);
  const json eval_key_base = {{"test", corpus_stage.key},
                              {"runs", config.ais_runs},
                              {"seed", config.eval_seed},
                              {"multinomial", config.multinomial},
                              {"sample", config.eval_sample},
                              {"schedule", schedule_json(config.schedule)}};
  std::optional<EmbeddingTable> emb;
  std::string emb_digest;
  if (!config.embeddings.empty()) emb_digest = file_digest(config.embeddings);

  for (const auto& t : trained) {
    MethodResult r;
    r.method = t.method;
    r.model_path = t.file;
    const bool is_sbm = t.file.extension() == ".sbm";
    std::optional<SbmModel> sbm;
    std::optional<LoadedRsModel> rs;
    if (is_sbm) {
      sbm = load_sbm_model(t.file);
      r.hidden = sbm->hidden_count();
      r.connections = static_cast<long>(sbm->structure.visible_edges().size());
    } else {
      rs = load_rs_model(t.file);
      r.hidden = rs->model.hidden_count();
      r.connections = rs->mask ? static_cast<long>(rs->mask->count())
                               : static_cast<long>(rs->model.W.size());
    }

    json eval_key = eval_key_base;
    eval_key["model"] = t.stage.key;
    const Stage es = runner.stage("eval-" + t.method, eval_key);
    runner.run(es, eval_key, [&](const fs::path& dir) {
      PerplexityOptions po;
      po.ais.schedule = config.schedule;
      po.ais.runs = config.ais_runs;
      po.ais.seed = config.eval_seed;
      po.ais.threads = runner.threads();
      po.include_multinomial = config.multinomial;
      const PerplexityReport rep = sbm ? perplexity(*sbm, docs, po) : perplexity(rs->model, docs, po);
      std::ofstream out(dir / "report.tsv");
      write_perplexity_report(out, rep);
    });
    r.perplexity = read_summary_value(es.dir / "report.tsv", "perplexity");

    if (!config.embeddings.empty()) {
      const json ikey = {{"model", t.stage.key}, {"embeddings", emb_digest}, {"top_n", config.top_n}};
      const Stage is = runner.stage("interpret-" + t.method, ikey);
      runner.run(is, ikey, [&](const fs::path& dir) {
        if (!emb) emb = load_embeddings(config.embeddings);
        const ModelInterpretability mi =
            sbm ? interpretability_model(*sbm, train.vocab, *emb, config.top_n)
                : interpretability_model(rs->model, train.vocab, *emb, config.top_n,
                                         rs->mask ? &*rs->mask : nullptr);
        std::ofstream out(dir / "interpret.tsv");
        write_interpretability_report(out, mi, train.vocab);
      });
      r.interpretability = read_summary_value(is.dir / "interpret.tsv", "interpretability");
    }
    result.methods.push_back(r);
  }

  result.comparison_path = config.output_dir / "comparison.tsv";
  std::ofstream cmp(result.comparison_path);
  write_comparison(cmp, result.methods);
  return result;
}

}  // namespace sparsebm
