#include "sparsebm/replicated_softmax.hpp"

#include <fstream>
#include <ostream>

#include "sparsebm/text_format.hpp"

namespace sparsebm {

VectorXd rs_visible_distribution(const RsModel& model, const HiddenState& h) {
  return softmax(model.b + model.W.transpose() * h);
}

Document rs_sample_visible(const RsModel& model, const HiddenState& h, int length, Rng& rng) {
  if (length < 1) throw ArgumentError("document length must be >= 1");
  if (h.size() != model.W.rows()) throw ArgumentError("hidden state size mismatch");
  return sample_tokens(model.b + model.W.transpose() * h, length, rng);
}

double rs_log_unnormalized(const RsModel& model, const Document& doc) {
  double visible = 0.0;
  for (const auto& e : doc.entries()) visible += model.b[e.word] * e.count;
  const VectorXd drive = hidden_drive(model.W, model.a, doc);
  double hidden = 0.0;
  for (Eigen::Index j = 0; j < drive.size(); ++j) hidden += softplus(drive[j]);
  return visible + hidden;
}

void rs_accumulate_statistics(const RsModel& model, const Document& doc, double weight,
                              ModelGradient& stats) {
  const VectorXd p = rs_hidden_conditional(model, doc);
  for (const auto& e : doc.entries()) {
    stats.W.col(e.word) += (weight * e.count) * p;
    stats.b[e.word] += weight * e.count;
  }
  stats.a += (weight * doc.length()) * p;
}

namespace {

HiddenState sample_hidden(const VectorXd& p, Rng& rng) {
  HiddenState h(p.size());
  for (Eigen::Index j = 0; j < p.size(); ++j) h[j] = bernoulli(p[j], rng) ? 1.0 : 0.0;
  return h;
}

void add_sampled_statistics(const Document& doc, const VectorXd& h, double weight,
                            ModelGradient& stats) {
  for (const auto& e : doc.entries()) {
    stats.W.col(e.word) += (weight * e.count) * h;
    stats.b[e.word] += weight * e.count;
  }
  stats.a += (weight * doc.length()) * h;
}

}  // namespace

ModelGradient rs_cd_gradient(const RsModel& model, const DocumentBatch& batch, int cd_steps,
                             Rng& rng, bool mean_field_final) {
  if (cd_steps < 1) throw ArgumentError("cd_steps must be >= 1");
  const int f = model.hidden_count(), k = model.vocab_size();
  ModelGradient positive = ModelGradient::zeros(f, k);
  ModelGradient negative = ModelGradient::zeros(f, k);
  for (const Document* doc : batch) {
    const VectorXd p0 = rs_hidden_conditional(model, *doc);
    rs_accumulate_statistics(model, *doc, 1.0, positive);

    HiddenState h = sample_hidden(p0, rng);
    Document v;
    VectorXd p;
    for (int t = 0; t < cd_steps; ++t) {
      v = rs_sample_visible(model, h, doc->length(), rng);
      p = rs_hidden_conditional(model, v);
      if (t + 1 < cd_steps || !mean_field_final) h = sample_hidden(p, rng);
    }
    add_sampled_statistics(v, mean_field_final ? p : h, 1.0, negative);
  }
  positive -= negative;
  if (!batch.empty()) positive *= 1.0 / static_cast<double>(batch.size());
  return positive;
}

void apply_connection_mask(RsModel& model, const ConnectionMask& mask) {
  if (mask.rows() != model.W.rows() || mask.cols() != model.W.cols())
    throw ArgumentError("connection mask shape mismatch");
  model.W = mask.select(model.W, 0.0);
}

void rs_cd_step(RsModel& model, const DocumentBatch& batch, int cd_steps, double learning_rate,
                Rng& rng) {
  const ModelGradient g = rs_cd_gradient(model, batch, cd_steps, rng);
  model.W += learning_rate * g.W;
  model.a += learning_rate * g.a;
  model.b += learning_rate * g.b;
}

RsModel rs_initialize(const Corpus& corpus, int hidden, const TrainConfig& config) {
  if (hidden < 1) throw ArgumentError("hidden unit count must be >= 1");
  const int k = corpus.vocab_size();
  RsModel model = RsModel::zeros(hidden, k);
  Rng rng = derive_rng(config.seed, 0x1417);
  for (Eigen::Index c = 0; c < model.W.cols(); ++c)
    for (Eigen::Index r = 0; r < model.W.rows(); ++r)
      model.W(r, c) = config.weight_init_std * standard_normal(rng);
  if (config.init_visible_bias_from_data) {
    const auto totals = corpus.word_totals();
    double sum = 0.0;
    for (auto t : totals) sum += static_cast<double>(t) + 1.0;
    for (int w = 0; w < k; ++w) model.b[w] = std::log((totals[w] + 1.0) / sum);
  }
  return model;
}

void rs_fit(RsModel& model, const Corpus& corpus, const TrainConfig& config,
            const ConnectionMask* mask, const EpochCallback& on_epoch) {
  config.validate();
  if (corpus.docs.empty()) throw ArgumentError("cannot train on an empty corpus");
  if (corpus.vocab_size() != model.vocab_size())
    throw ArgumentError("corpus vocabulary size does not match model");
  Minibatcher batcher(corpus.size(), config.batch_size, config.seed);
  Rng rng = derive_rng(config.seed, 0xCD);
  ModelGradient velocity = ModelGradient::zeros(model.hidden_count(), model.vocab_size());
  if (mask) apply_connection_mask(model, *mask);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto& ids : batcher.epoch(epoch)) {
      ModelGradient g =
          rs_cd_gradient(model, make_batch(corpus, ids), config.cd_steps, rng,
                         config.mean_field_final);
      if (config.weight_decay > 0) g.W -= config.weight_decay * model.W;
      velocity *= config.momentum;
      g *= config.learning_rate;
      velocity += g;
      model.W += velocity.W;
      model.a += velocity.a;
      model.b += velocity.b;
      if (mask) apply_connection_mask(model, *mask);
    }
    if (on_epoch) on_epoch(epoch);
  }
}

RsModel rs_train(const Corpus& corpus, int hidden, const TrainConfig& config,
                 const EpochCallback& on_epoch) {
  config.validate();
  if (corpus.docs.empty()) throw ArgumentError("cannot train on an empty corpus");
  RsModel model = rs_initialize(corpus, hidden, config);
  rs_fit(model, corpus, config, nullptr, on_epoch);
  return model;
}

void write_rs_model(std::ostream& out, const RsModel& model, const ConnectionMask* mask) {
  write_header(out, mask ? "rs-masked-model" : "rs-model", 1);
  out << "[dims]\n" << model.hidden_count() << ' ' << model.vocab_size() << '\n';
  out << "[W]\n";
  for (Eigen::Index j = 0; j < model.W.rows(); ++j) {
    for (Eigen::Index k = 0; k < model.W.cols(); ++k)
      out << (k ? " " : "") << format_double(model.W(j, k));
    out << '\n';
  }
  write_vector_section(out, "a", model.a);
  write_vector_section(out, "b", model.b);
  if (mask) {
    out << "[mask]\n";
    for (Eigen::Index j = 0; j < mask->rows(); ++j)
      for (Eigen::Index k = 0; k < mask->cols(); ++k)
        if ((*mask)(j, k)) out << j << ' ' << k << '\n';
  }
}

void save_rs_model(const std::filesystem::path& path, const RsModel& model,
                   const ConnectionMask* mask) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_rs_model(out, model, mask);
}

LoadedRsModel read_rs_model(std::istream& in) {
  const SectionedText t = read_sectioned_text(in);
  if (t.kind != "rs-model" && t.kind != "rs-masked-model")
    throw ParseError("expected an rs-model file, found '" + t.kind + "'");
  if (t.version != 1) throw ParseError("unsupported rs-model version " + std::to_string(t.version));
  const auto& dims = t.section("dims");
  if (dims.size() != 1 || dims[0].fields.size() != 2) throw ParseError("malformed [dims]");
  const int f = parse_int(dims[0].fields[0], dims[0].line);
  const int k = parse_int(dims[0].fields[1], dims[0].line);
  if (f < 1 || k < 1) throw ParseError("dimensions must be positive");

  LoadedRsModel out{RsModel::zeros(f, k), std::nullopt};
  const auto& rows = t.section("W");
  if (static_cast<int>(rows.size()) != f) throw ParseError("[W] must have F rows");
  for (int j = 0; j < f; ++j) {
    if (static_cast<int>(rows[j].fields.size()) != k)
      throw ParseError("[W] row at line " + std::to_string(rows[j].line) + " must have K values",
                       rows[j].line);
    for (int c = 0; c < k; ++c) out.model.W(j, c) = parse_real(rows[j].fields[c], rows[j].line);
  }
  out.model.a = parse_vector_section(t.section("a"), f, "a");
  out.model.b = parse_vector_section(t.section("b"), k, "b");
  out.model.validate();
  if (t.has("mask")) {
    ConnectionMask mask = ConnectionMask::Constant(f, k, false);
    for (const auto& r : t.section("mask")) {
      if (r.fields.size() != 2) throw ParseError("malformed [mask] row", r.line);
      const int j = parse_int(r.fields[0], r.line), c = parse_int(r.fields[1], r.line);
      if (j < 0 || j >= f || c < 0 || c >= k)
        throw ParseError("[mask] entry out of range at line " + std::to_string(r.line), r.line);
      mask(j, c) = true;
    }
    out.mask = std::move(mask);
  }
  return out;
}

LoadedRsModel load_rs_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return read_rs_model(in);
}

}  // namespace sparsebm
