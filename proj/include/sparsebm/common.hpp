#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace sparsebm {

using Rng = std::mt19937_64;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

/// Malformed input text; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long line = 0)
      : std::runtime_error(what), line_(line) {}
  long line() const noexcept { return line_; }

 private:
  long line_;
};

/// Input parsed but violates a structural invariant (cover, forest, sizes).
class StructuralError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Caller passed arguments outside an operation's preconditions.
class ArgumentError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

template <typename Scalar>
inline Scalar sigmoid(Scalar x) {
  if (x >= 0) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

/// log(1 + exp(x)) without overflow.
template <typename Scalar>
inline Scalar softplus(Scalar x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

template <typename Scalar>
inline Scalar log_add_exp(Scalar a, Scalar b) {
  if (a == -std::numeric_limits<Scalar>::infinity()) return b;
  if (b == -std::numeric_limits<Scalar>::infinity()) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

double log_sum_exp(std::span<const double> xs);
double log_mean_exp(std::span<const double> xs);

/// log of the multinomial coefficient D! / prod(c_k!).
double log_multinomial(std::span<const int> counts);

/// Stable 64-bit FNV-1a, used for config and content hashing.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 14695981039346656037ULL);
std::string hex64(std::uint64_t value);

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

/// Independent generator for (seed, stream); splitmix64-mixed so nearby
/// seeds and streams do not produce correlated sequences.
Rng derive_rng(std::uint64_t seed, std::uint64_t stream);

/// Uniform integer in [0, n) drawn directly from the engine.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) { return rng() % n; }

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Standard normal deviate (Box-Muller; one draw per call).
inline double standard_normal(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

template <typename T>
void shuffle_in_place(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = uniform_index(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

/// Worker budget from SPARSEBM_THREADS, falling back to 1.
int default_thread_count();

}  // namespace sparsebm
