#include "sparsebm/sbm.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <set>

#include "sparsebm/text_format.hpp"

namespace sparsebm {

SbmStructure::SbmStructure(int hidden, int visible, std::vector<VisibleEdge> visible_edges,
                           std::vector<TreeEdge> tree_edges)
    : hidden_(hidden),
      visible_(visible),
      visible_edges_(std::move(visible_edges)),
      tree_edges_(std::move(tree_edges)) {
  if (hidden < 1 || visible < 1) throw StructuralError("structure dimensions must be positive");
  std::sort(visible_edges_.begin(), visible_edges_.end());
  mask_ = ConnectionMask::Constant(hidden, visible, false);
  words_of_.assign(hidden, {});
  for (std::size_t i = 0; i < visible_edges_.size(); ++i) {
    const auto [j, k] = visible_edges_[i];
    if (j < 0 || j >= hidden || k < 0 || k >= visible)
      throw StructuralError("visible edge " + std::to_string(j) + "-" + std::to_string(k) +
                            " out of range");
    if (i > 0 && visible_edges_[i - 1] == visible_edges_[i])
      throw StructuralError("duplicate visible edge " + std::to_string(j) + "-" +
                            std::to_string(k));
    mask_(j, k) = true;
    words_of_[j].push_back(k);
  }
  for (int j = 0; j < hidden; ++j)
    if (words_of_[j].empty())
      throw StructuralError("hidden unit " + std::to_string(j) + " has no visible edge");
  layout_ = TreeLayout(hidden, tree_edges_);
  neighbors_.assign(hidden, {});
  for (std::size_t e = 0; e < tree_edges_.size(); ++e) {
    neighbors_[tree_edges_[e].j].push_back({tree_edges_[e].l, static_cast<int>(e)});
    neighbors_[tree_edges_[e].l].push_back({tree_edges_[e].j, static_cast<int>(e)});
  }
}

SbmStructure SbmStructure::dense(int hidden, int visible) {
  std::vector<VisibleEdge> edges;
  edges.reserve(static_cast<std::size_t>(hidden) * visible);
  for (int j = 0; j < hidden; ++j)
    for (int k = 0; k < visible; ++k) edges.push_back({j, k});
  return SbmStructure(hidden, visible, std::move(edges), {});
}

SbmStructure SbmStructure::without_tree() const {
  return SbmStructure(hidden_, visible_, visible_edges_, {});
}

VectorXd sbm_edge_couplings(const SbmModel& model, int length) {
  return model.tree_weights * static_cast<double>(length);
}

double sbm_gibbs_hidden_conditional(const SbmModel& model, const Document& doc,
                                    const HiddenState& h, int j) {
  if (j < 0 || j >= model.hidden_count())
    throw ArgumentError("hidden index " + std::to_string(j) + " out of range");
  if (h.size() != model.hidden_count()) throw ArgumentError("hidden state size mismatch");
  // Same accumulation order as hidden_drive so tree-free models match RS exactly.
  const double d = doc.length();
  double x = model.a[j] * d;
  for (const auto& e : doc.entries()) x += model.W(j, e.word) * static_cast<double>(e.count);
  for (const auto& [l, edge] : model.structure.neighbors(j))
    x += d * model.tree_weights[edge] * h[l];
  return sigmoid(x);
}

TreePosterior sbm_tree_marginals(const SbmModel& model, const Document& doc) {
  const VectorXd drive = hidden_drive(model.W, model.a, doc);
  return tree_posterior(model.structure.layout(), model.structure.tree_edges(), drive,
                        sbm_edge_couplings(model, doc.length()));
}

double sbm_log_unnormalized(const SbmModel& model, const Document& doc) {
  double visible = 0.0;
  for (const auto& e : doc.entries()) visible += model.b[e.word] * e.count;
  const VectorXd drive = hidden_drive(model.W, model.a, doc);
  return visible + tree_log_partition(model.structure.layout(), model.structure.tree_edges(),
                                      drive, sbm_edge_couplings(model, doc.length()));
}

void sbm_sweep_hidden(const SbmModel& model, const VectorXd& drive, const VectorXd& coupling,
                      HiddenState& h, Rng& rng) {
  for (int j = 0; j < model.hidden_count(); ++j) {
    double x = drive[j];
    for (const auto& [l, edge] : model.structure.neighbors(j)) x += coupling[edge] * h[l];
    h[j] = bernoulli(sigmoid(x), rng) ? 1.0 : 0.0;
  }
}

Document sbm_sample_visible(const SbmModel& model, const HiddenState& h, int length, Rng& rng) {
  if (length < 1) throw ArgumentError("document length must be >= 1");
  return sample_tokens(model.b + model.W.transpose() * h, length, rng);
}

void sbm_accumulate_statistics(const SbmModel& model, const Document& doc, double weight,
                               ModelGradient& stats) {
  const TreePosterior post = sbm_tree_marginals(model, doc);
  for (const auto& e : doc.entries()) {
    stats.W.col(e.word) += (weight * e.count) * post.singleton;
    stats.b[e.word] += weight * e.count;
  }
  const double d = doc.length();
  stats.a += (weight * d) * post.singleton;
  for (std::size_t e = 0; e < post.pairwise.size(); ++e)
    stats.tree[e] += weight * d * post.pairwise[e](1, 1);
}

namespace {

void add_sampled_statistics(const SbmModel& model, const Document& doc, const HiddenState& h,
                            ModelGradient& stats) {
  for (const auto& e : doc.entries()) {
    stats.W.col(e.word) += static_cast<double>(e.count) * h;
    stats.b[e.word] += e.count;
  }
  const double d = doc.length();
  stats.a += d * h;
  const auto& edges = model.structure.tree_edges();
  for (std::size_t e = 0; e < edges.size(); ++e) stats.tree[e] += d * h[edges[e].j] * h[edges[e].l];
}

}  // namespace

ModelGradient sbm_cd_gradient(const SbmModel& model, const DocumentBatch& batch, int cd_steps,
                              Rng& rng, bool mean_field_final) {
  if (cd_steps < 1) throw ArgumentError("cd_steps must be >= 1");
  const int f = model.hidden_count(), k = model.vocab_size();
  const int n_edges = static_cast<int>(model.structure.tree_edges().size());
  ModelGradient positive = ModelGradient::zeros(f, k, n_edges);
  ModelGradient negative = ModelGradient::zeros(f, k, n_edges);
  for (const Document* doc : batch) {
    const VectorXd drive0 = hidden_drive(model.W, model.a, *doc);
    const VectorXd coupling = sbm_edge_couplings(model, doc->length());
    const TreePosterior post =
        tree_posterior(model.structure.layout(), model.structure.tree_edges(), drive0, coupling);
    for (const auto& e : doc->entries()) {
      positive.W.col(e.word) += static_cast<double>(e.count) * post.singleton;
      positive.b[e.word] += e.count;
    }
    const double d = doc->length();
    positive.a += d * post.singleton;
    for (int e = 0; e < n_edges; ++e) positive.tree[e] += d * post.pairwise[e](1, 1);

    // Chain starts at the data: h from the exact singleton marginals, then one sweep.
    HiddenState h(f);
    for (int j = 0; j < f; ++j) h[j] = bernoulli(post.singleton[j], rng) ? 1.0 : 0.0;
    sbm_sweep_hidden(model, drive0, coupling, h, rng);
    Document v;
    for (int t = 0; t < cd_steps; ++t) {
      v = sbm_sample_visible(model, h, doc->length(), rng);
      if (t + 1 < cd_steps || !mean_field_final)
        sbm_sweep_hidden(model, hidden_drive(model.W, model.a, v), coupling, h, rng);
    }
    if (mean_field_final)
      sbm_accumulate_statistics(model, v, 1.0, negative);
    else
      add_sampled_statistics(model, v, h, negative);
  }
  positive -= negative;
  if (!batch.empty()) positive *= 1.0 / static_cast<double>(batch.size());
  return positive;
}

void apply_mask(SbmModel& model) { model.W = model.structure.mask().select(model.W, 0.0); }

SbmModel apply_mask(const SbmStructure& structure, const MatrixXd& dense_W,
                    const VectorXd& tree_weights, const VectorXd& a, const VectorXd& b) {
  SbmModel m{structure, dense_W, tree_weights, a, b};
  m.validate();
  apply_mask(m);
  return m;
}

void sbm_cd_step(SbmModel& model, const DocumentBatch& batch, int cd_steps, double learning_rate,
                 Rng& rng) {
  const ModelGradient g = sbm_cd_gradient(model, batch, cd_steps, rng);
  model.W += learning_rate * g.W;
  model.a += learning_rate * g.a;
  model.b += learning_rate * g.b;
  model.tree_weights += learning_rate * g.tree;
  apply_mask(model);
}

SbmModel sbm_initialize(const Corpus& corpus, const SbmStructure& structure,
                        const TrainConfig& config) {
  if (structure.vocab_size() != corpus.vocab_size())
    throw ArgumentError("structure K=" + std::to_string(structure.vocab_size()) +
                        " does not match corpus K=" + std::to_string(corpus.vocab_size()));
  SbmModel model = SbmModel::zeros(structure);
  Rng rng = derive_rng(config.seed, 0x1417);
  for (const auto& [j, k] : model.structure.visible_edges())
    model.W(j, k) = config.weight_init_std * standard_normal(rng);
  if (config.init_visible_bias_from_data) {
    const auto totals = corpus.word_totals();
    double sum = 0.0;
    for (auto t : totals) sum += static_cast<double>(t) + 1.0;
    for (int w = 0; w < corpus.vocab_size(); ++w) model.b[w] = std::log((totals[w] + 1.0) / sum);
  }
  return model;
}

void sbm_fit(SbmModel& model, const Corpus& corpus, const TrainConfig& config,
             const EpochCallback& on_epoch) {
  config.validate();
  if (corpus.docs.empty()) throw ArgumentError("cannot train on an empty corpus");
  if (corpus.vocab_size() != model.vocab_size())
    throw ArgumentError("corpus vocabulary size does not match model");
  Minibatcher batcher(corpus.size(), config.batch_size, config.seed);
  Rng rng = derive_rng(config.seed, 0xCD);
  ModelGradient velocity = ModelGradient::zeros(
      model.hidden_count(), model.vocab_size(), static_cast<int>(model.tree_weights.size()));
  apply_mask(model);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto& ids : batcher.epoch(epoch)) {
      ModelGradient g = sbm_cd_gradient(model, make_batch(corpus, ids), config.cd_steps, rng,
                                        config.mean_field_final);
      if (config.weight_decay > 0) g.W -= config.weight_decay * model.W;
      velocity *= config.momentum;
      g *= config.learning_rate;
      velocity += g;
      model.W += velocity.W;
      model.a += velocity.a;
      model.b += velocity.b;
      model.tree_weights += velocity.tree;
      apply_mask(model);
    }
    if (on_epoch) on_epoch(epoch);
  }
}

SbmModel sbm_train(const Corpus& corpus, const SbmStructure& structure, const TrainConfig& config,
                   const EpochCallback& on_epoch) {
  config.validate();
  if (corpus.docs.empty()) throw ArgumentError("cannot train on an empty corpus");
  SbmModel model = sbm_initialize(corpus, structure, config);
  sbm_fit(model, corpus, config, on_epoch);
  return model;
}

RsModel as_rs_model(const SbmModel& model) { return {model.W, model.a, model.b}; }

namespace {

void write_dims(std::ostream& out, const SbmStructure& s) {
  out << "[dims]\n" << s.hidden_count() << ' ' << s.vocab_size() << '\n';
}

std::pair<int, int> read_dims(const SectionedText& t) {
  const auto& dims = t.section("dims");
  if (dims.size() != 1 || dims[0].fields.size() != 2) throw ParseError("malformed [dims]");
  return {parse_int(dims[0].fields[0], dims[0].line), parse_int(dims[0].fields[1], dims[0].line)};
}

struct ParsedEdges {
  std::vector<VisibleEdge> visible;
  std::vector<double> visible_w;
  std::vector<TreeEdge> tree;
  std::vector<double> tree_w;
};

ParsedEdges read_edges(const SectionedText& t, bool weighted) {
  ParsedEdges p;
  const std::size_t width = weighted ? 3 : 2;
  for (const auto& r : t.section("visible_edges")) {
    if (r.fields.size() != width)
      throw ParseError("[visible_edges] row at line " + std::to_string(r.line) + " must have " +
                           std::to_string(width) + " fields",
                       r.line);
    p.visible.push_back({parse_int(r.fields[0], r.line), parse_int(r.fields[1], r.line)});
    if (weighted) p.visible_w.push_back(parse_real(r.fields[2], r.line));
  }
  if (t.has("tree_edges")) {
    for (const auto& r : t.section("tree_edges")) {
      if (r.fields.size() != width)
        throw ParseError("[tree_edges] row at line " + std::to_string(r.line) + " must have " +
                             std::to_string(width) + " fields",
                         r.line);
      p.tree.push_back({parse_int(r.fields[0], r.line), parse_int(r.fields[1], r.line)});
      if (weighted) p.tree_w.push_back(parse_real(r.fields[2], r.line));
    }
  }
  return p;
}

}  // namespace

void write_sbm_structure(std::ostream& out, const SbmStructure& s) {
  write_header(out, "sbm-structure", 1);
  write_dims(out, s);
  out << "[visible_edges]\n";
  for (const auto& [j, k] : s.visible_edges()) out << j << ' ' << k << '\n';
  out << "[tree_edges]\n";
  for (const auto& [j, l] : s.tree_edges()) out << j << ' ' << l << '\n';
}

void save_sbm_structure(const std::filesystem::path& path, const SbmStructure& s) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_sbm_structure(out, s);
}

SbmStructure read_sbm_structure(std::istream& in) {
  const SectionedText t = read_sectioned_text(in);
  if (t.kind != "sbm-structure" && t.kind != "sbm-model")
    throw ParseError("expected an sbm-structure file, found '" + t.kind + "'");
  if (t.version != 1) throw ParseError("unsupported version " + std::to_string(t.version));
  const auto [f, k] = read_dims(t);
  ParsedEdges p = read_edges(t, t.kind == "sbm-model");
  return SbmStructure(f, k, std::move(p.visible), std::move(p.tree));
}

SbmStructure load_sbm_structure(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return read_sbm_structure(in);
}

void write_sbm_model(std::ostream& out, const SbmModel& model) {
  const auto& s = model.structure;
  write_header(out, "sbm-model", 1);
  write_dims(out, s);
  out << "[visible_edges]\n";
  for (const auto& [j, k] : s.visible_edges())
    out << j << ' ' << k << ' ' << format_double(model.W(j, k)) << '\n';
  out << "[tree_edges]\n";
  for (std::size_t e = 0; e < s.tree_edges().size(); ++e)
    out << s.tree_edges()[e].j << ' ' << s.tree_edges()[e].l << ' '
        << format_double(model.tree_weights[e]) << '\n';
  write_vector_section(out, "a", model.a);
  write_vector_section(out, "b", model.b);
}

void save_sbm_model(const std::filesystem::path& path, const SbmModel& model) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_sbm_model(out, model);
}

SbmModel read_sbm_model(std::istream& in) {
  const SectionedText t = read_sectioned_text(in);
  if (t.kind != "sbm-model") throw ParseError("expected an sbm-model file, found '" + t.kind + "'");
  if (t.version != 1) throw ParseError("unsupported version " + std::to_string(t.version));
  const auto [f, k] = read_dims(t);
  ParsedEdges p = read_edges(t, true);
  const auto visible = p.visible;
  const auto tree = p.tree;
  SbmModel model = SbmModel::zeros(SbmStructure(f, k, p.visible, p.tree));
  for (std::size_t i = 0; i < visible.size(); ++i)
    model.W(visible[i].hidden, visible[i].visible) = p.visible_w[i];
  // Tree weights follow the structure's edge order, which preserves file order.
  for (std::size_t e = 0; e < tree.size(); ++e) model.tree_weights[e] = p.tree_w[e];
  model.a = parse_vector_section(t.section("a"), f, "a");
  model.b = parse_vector_section(t.section("b"), k, "b");
  model.validate();
  return model;
}

SbmModel load_sbm_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return read_sbm_model(in);
}

}  // namespace sparsebm
