#include <doctest.h>

#include <sstream>

#include "oracles.hpp"
#include "sparsebm/exact.hpp"
#include "sparsebm/replicated_softmax.hpp"
#include "test_util.hpp"

using namespace sparsebm;

namespace {

Corpus two_topic_corpus(int n, int length, std::uint64_t seed) {
  // Words 0-2 and 3-5 form two topics; a document draws all tokens from one.
  Corpus c;
  for (int w = 0; w < 6; ++w) c.vocab.push_back("w" + std::to_string(w));
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    const int base = uniform01(rng) < 0.5 ? 0 : 3;
    std::vector<int> counts(6, 0);
    for (int t = 0; t < length; ++t) ++counts[base + uniform_index(rng, 3)];
    c.docs.push_back(Document::from_dense(counts));
  }
  return c;
}

}  // namespace

TEST_CASE("rs_energy examples") {
  RsModel m = RsModel::zeros(1, 2);
  const Document doc({{0, 2}});
  CHECK(rs_energy(m, doc, VectorXd(VectorXd::Ones(1))) == 0.0);
  m.W(0, 0) = 1.0;
  m.a[0] = 0.5;
  CHECK(rs_energy(m, doc, VectorXd(VectorXd::Ones(1))) == -3.0);
  m.b << 0.25, -1.0;
  const Document doc2({{0, 2}, {1, 3}});
  CHECK(rs_energy(m, doc2, VectorXd(VectorXd::Zero(1))) == doctest::Approx(-(2 * 0.25 - 3.0)));
  CHECK_THROWS_AS(rs_energy(m, doc, VectorXd(VectorXd::Ones(2))), ArgumentError);
}

TEST_CASE("rs_energy agrees with the loop oracle and is linear in each h_j") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const RsModel m = oracle::random_rs(3, 5, rng);
    const auto counts = oracle::random_counts(5, 4, rng);
    const Document doc = Document::from_dense(counts);
    for (unsigned s = 0; s < 8; ++s) {
      const VectorXd h = oracle::hidden_state(3, s);
      CHECK(rs_energy(m, doc, h) == doctest::Approx(oracle::energy(m, counts, h)).epsilon(1e-12));
    }
    const VectorXd drive = hidden_drive(m.W, m.a, doc);
    for (int j = 0; j < 3; ++j) {
      VectorXd h1 = oracle::hidden_state(3, 5), h0 = h1;
      h1[j] = 1;
      h0[j] = 0;
      CHECK(rs_energy(m, doc, h1) - rs_energy(m, doc, h0) == doctest::Approx(-drive[j]).epsilon(1e-12));
    }
  }
}

TEST_CASE("rs_hidden_conditional") {
  RsModel m = RsModel::zeros(3, 4);
  const Document doc({{1, 2}});
  CHECK(rs_hidden_conditional(m, doc).isApproxToConstant(0.5));
  RsModel one = RsModel::zeros(1, 2);
  one.W(0, 0) = std::log(3.0);
  CHECK(rs_hidden_conditional(one, Document({{0, 1}}))[0] == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("RS posterior factorizes over hidden units") {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const int f = 2 + static_cast<int>(uniform_index(rng, 9));
    const RsModel m = oracle::random_rs(f, 4, rng, 0.7);
    const auto counts = oracle::random_counts(4, 5, rng);
    const VectorXd p = rs_hidden_conditional(m, Document::from_dense(counts));
    const auto post = oracle::posterior(m, counts);
    for (unsigned s = 0; s < (1u << f); ++s) {
      double prod = 1;
      for (int j = 0; j < f; ++j) prod *= (s >> j) & 1u ? p[j] : 1 - p[j];
      REQUIRE(std::abs(prod - post.state_prob[s]) <= 1e-10);
    }
    const double lz = rs_log_unnormalized(m, Document::from_dense(counts));
    CHECK(lz == doctest::Approx(post.log_hidden_partition + m.b.dot(Eigen::Map<const Eigen::VectorXi>(counts.data(), 4).cast<double>())).epsilon(1e-12));
  }
}

TEST_CASE("rs_sample_visible") {
  Rng rng(12);
  RsModel zero = RsModel::zeros(2, 4);
  const Document d = rs_sample_visible(zero, VectorXd::Ones(2), 1000, rng);
  CHECK(d.length() == 1000);
  // Chi-square with 3 degrees of freedom; 11.34 is the 0.01 critical value.
  double chi2 = 0;
  for (int k = 0; k < 4; ++k) chi2 += std::pow(d.count(k) - 250.0, 2) / 250.0;
  CHECK(chi2 < 11.34);

  RsModel gap = RsModel::zeros(2, 4);
  gap.b << 10, -10, -10, -10;
  const VectorXd p = rs_visible_distribution(gap, VectorXd::Ones(2));
  CHECK(p[0] >= 1 - 1e-8);
  CHECK(rs_sample_visible(gap, VectorXd::Zero(2), 50, rng).count(0) == 50);
  CHECK_THROWS_AS(rs_sample_visible(gap, VectorXd::Zero(2), 0, rng), ArgumentError);
}

TEST_CASE("rs_cd_step: zero learning rate leaves the model unchanged") {
  Rng rng(1);
  RsModel m = oracle::random_rs(3, 4, rng);
  const RsModel before = m;
  const std::vector<Document> docs = {Document({{0, 2}, {3, 1}}), Document({{1, 4}})};
  rs_cd_step(m, make_batch(docs), 2, 0.0, rng);
  CHECK(m.W == before.W);
  CHECK(m.a == before.a);
  CHECK(m.b == before.b);
}

TEST_CASE("CD gradient vanishes when data and negative statistics coincide") {
  // One-word vocabulary: every negative-phase document equals the data, and
  // mean-field hidden statistics match the positive phase exactly.
  RsModel m = RsModel::zeros(2, 1);
  const std::vector<Document> docs = {Document({{0, 3}}), Document({{0, 5}})};
  Rng rng(3);
  const ModelGradient g = rs_cd_gradient(m, make_batch(docs), 4, rng, true);
  CHECK(g.W.isZero(0));
  CHECK(g.a.isZero(0));
  CHECK(g.b.isZero(0));
}

TEST_CASE("exact RS gradient matches finite differences of the oracle likelihood") {
  Rng rng(21);
  const RsModel m = oracle::random_rs(2, 3, rng, 0.8);
  const std::vector<std::vector<int>> dense = {{2, 0, 0}, {0, 1, 1}, {1, 0, 1}};
  std::vector<Document> docs;
  for (const auto& c : dense) docs.push_back(Document::from_dense(c));
  const ModelGradient g = exact_log_likelihood_gradient(m, docs);
  const double h = 1e-5;
  auto fd = [&](auto mutate) {
    RsModel p = m, q = m;
    mutate(p, h);
    mutate(q, -h);
    return (oracle::log_likelihood(p, dense) - oracle::log_likelihood(q, dense)) / (2 * h);
  };
  auto rel = [](double x, double y) { return std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1e-2}); };
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 3; ++k)
      CHECK(rel(g.W(j, k), fd([&](RsModel& x, double e) { x.W(j, k) += e; })) < 1e-5);
  for (int j = 0; j < 2; ++j) CHECK(rel(g.a[j], fd([&](RsModel& x, double e) { x.a[j] += e; })) < 1e-5);
  for (int k = 0; k < 3; ++k) CHECK(rel(g.b[k], fd([&](RsModel& x, double e) { x.b[k] += e; })) < 1e-5);
  CHECK(exact_log_likelihood(m, docs) == doctest::Approx(oracle::log_likelihood(m, dense)).epsilon(1e-12));
}

TEST_CASE("rs_train: zero epochs returns the initialization") {
  const Corpus c = two_topic_corpus(20, 4, 1);
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.seed = 5;
  const RsModel init = rs_initialize(c, 3, cfg);
  const RsModel trained = rs_train(c, 3, cfg);
  CHECK(trained.W == init.W);
  CHECK(init.a.isZero(0));
  CHECK(init.b.isZero(0));
  Eigen::Map<const VectorXd> w(init.W.data(), init.W.size());
  CHECK(std::sqrt(w.squaredNorm() / w.size()) == doctest::Approx(cfg.weight_init_std).epsilon(0.5));
  cfg.init_visible_bias_from_data = true;
  CHECK(rs_initialize(c, 3, cfg).b.array().exp().sum() == doctest::Approx(1.0));
}

TEST_CASE("rs_train improves the exact held-out likelihood and is deterministic") {
  const Corpus train = two_topic_corpus(300, 4, 1);
  const Corpus test = two_topic_corpus(100, 4, 2);
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.learning_rate = 0.05;
  cfg.seed = 3;
  cfg.cd_steps = 1;
  cfg.weight_init_std = 0.01;
  const RsModel init = rs_initialize(train, 2, cfg);
  const RsModel trained = rs_train(train, 2, cfg);
  CHECK(exact_log_likelihood(trained, test.docs) > exact_log_likelihood(init, test.docs) + 10.0);
  const RsModel again = rs_train(train, 2, cfg);
  CHECK(trained.W == again.W);
  CHECK(trained.b == again.b);
}

TEST_CASE("masked training keeps masked weights at zero") {
  const Corpus train = two_topic_corpus(100, 4, 1);
  TrainConfig cfg;
  cfg.epochs = 3;
  ConnectionMask mask = ConnectionMask::Constant(2, 6, false);
  mask.block(0, 0, 1, 3).setConstant(true);
  mask.block(1, 3, 1, 3).setConstant(true);
  RsModel m = rs_initialize(train, 2, cfg);
  rs_fit(m, train, cfg, &mask);
  CHECK((!mask.array()).select(m.W.array().abs(), 0.0).sum() == 0.0);
  CHECK(m.W.block(0, 0, 1, 3).cwiseAbs().minCoeff() > 0.0);
}

TEST_CASE("RS model serialization is bit-exact") {
  Rng rng(6);
  const RsModel m = oracle::random_rs(3, 5, rng);
  std::stringstream ss;
  write_rs_model(ss, m);
  const LoadedRsModel back = read_rs_model(ss);
  CHECK(back.model.W == m.W);
  CHECK(back.model.a == m.a);
  CHECK(back.model.b == m.b);
  CHECK(!back.mask);

  ConnectionMask mask = ConnectionMask::Constant(3, 5, true);
  mask(1, 2) = false;
  RsModel masked = m;
  apply_connection_mask(masked, mask);
  std::stringstream ms;
  write_rs_model(ms, masked, &mask);
  CHECK(ms.str().rfind("# sparsebm rs-masked-model v1", 0) == 0);
  const LoadedRsModel mback = read_rs_model(ms);
  REQUIRE(mback.mask);
  CHECK(*mback.mask == mask);
  CHECK(mback.model.W == masked.W);

  std::stringstream bad("# sparsebm sbm-model v1\n");
  CHECK_THROWS_AS(read_rs_model(bad), ParseError);
}
