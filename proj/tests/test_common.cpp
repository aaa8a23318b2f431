#include <doctest.h>

#include <set>
#include <vector>

#include "sparsebm/common.hpp"

using namespace sparsebm;

TEST_CASE("log_sum_exp and log_mean_exp") {
  const std::vector<double> xs = {1000.0, 1000.0};
  CHECK(log_sum_exp(xs) == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-15));
  CHECK(log_mean_exp(xs) == doctest::Approx(1000.0).epsilon(1e-15));
  CHECK(std::isinf(log_sum_exp(std::vector<double>{})));
  CHECK_THROWS_AS(log_mean_exp(std::vector<double>{}), ArgumentError);
  const std::vector<double> small = {std::log(1.0), std::log(2.0), std::log(3.0)};
  CHECK(log_sum_exp(small) == doctest::Approx(std::log(6.0)).epsilon(1e-15));
}

TEST_CASE("stable sigmoid and softplus") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(sigmoid(std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(softplus(800.0) == doctest::Approx(800.0));
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(log_add_exp(std::log(2.0), std::log(5.0)) == doctest::Approx(std::log(7.0)).epsilon(1e-15));
}

TEST_CASE("log_multinomial") {
  const std::vector<int> c = {2, 1, 0};
  CHECK(log_multinomial(c) == doctest::Approx(std::log(3.0)).epsilon(1e-14));
  const std::vector<int> one = {4};
  CHECK(log_multinomial(one) == doctest::Approx(0.0));
}

TEST_CASE("format_double round-trips exactly") {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double x = standard_normal(rng) * std::pow(10.0, static_cast<int>(uniform_index(rng, 40)) - 20);
    CHECK(parse_double(format_double(x)) == x);
  }
  CHECK_THROWS_AS(parse_double("1.5x"), ParseError);
}

TEST_CASE("derive_rng streams are reproducible and distinct") {
  Rng a = derive_rng(7, 1), b = derive_rng(7, 1), c = derive_rng(7, 2), d = derive_rng(8, 1);
  const auto x = a();
  CHECK(x == b());
  CHECK(x != c());
  CHECK(x != d());
}

TEST_CASE("uniform01 and shuffle") {
  Rng rng(5);
  double sum = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = uniform01(rng);
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));
  std::vector<int> v = {0, 1, 2, 3, 4, 5, 6, 7};
  shuffle_in_place(std::span<int>(v), rng);
  CHECK(std::set<int>(v.begin(), v.end()).size() == 8);
}

TEST_CASE("fnv1a and hex64") {
  CHECK(hex64(fnv1a("")) == "cbf29ce484222325");
  CHECK(hex64(fnv1a("a")) == "af63dc4c8601ec8c");
  CHECK(hex64(0xABCULL) == "0000000000000abc");
}
