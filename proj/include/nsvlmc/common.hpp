#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace nsvlmc {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Index = Eigen::Index;

// ---------------------------------------------------------------------------
// Error types. All numerical failures surface as exceptions derived from
// NsvlmcError so callers (and the CLI) can map them to exit codes.
// ---------------------------------------------------------------------------

struct NsvlmcError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotPositiveDefinite : NsvlmcError {
  using NsvlmcError::NsvlmcError;
};
struct DimensionMismatch : NsvlmcError {
  using NsvlmcError::NsvlmcError;
};
struct NonFiniteFunctionValue : NsvlmcError {
  using NsvlmcError::NsvlmcError;
};
struct NonFiniteGradient : NsvlmcError {
  using NsvlmcError::NsvlmcError;
};
struct NonFiniteObjective : NsvlmcError {
  using NsvlmcError::NsvlmcError;
};
struct NonPositiveVariance : NsvlmcError {
  using NsvlmcError::NsvlmcError;
};
struct NonPositiveNoise : NsvlmcError {
  using NsvlmcError::NsvlmcError;
};
struct InvalidSpec : NsvlmcError {
  using NsvlmcError::NsvlmcError;
};
struct ZeroVariance : NsvlmcError {
  using NsvlmcError::NsvlmcError;
};
struct EmptyTestSet : NsvlmcError {
  using NsvlmcError::NsvlmcError;
};
struct MissingFile : NsvlmcError {
  using NsvlmcError::NsvlmcError;
};
struct SchemaMismatch : NsvlmcError {
  using NsvlmcError::NsvlmcError;
};
struct SizeMismatch : NsvlmcError {
  using NsvlmcError::NsvlmcError;
};
struct RankTooLarge : NsvlmcError {
  using NsvlmcError::NsvlmcError;
};
struct SeriesTooShort : NsvlmcError {
  using NsvlmcError::NsvlmcError;
};

// ---------------------------------------------------------------------------
// RngStream: a counter-keyed random stream. Identical (seed, stream_id)
// reproduces the identical sample sequence. Workers never share a stream;
// each owns a distinct stream_id.
// ---------------------------------------------------------------------------

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : seed_(seed), stream_id_(stream_id), engine_(mix(seed, stream_id)) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }  // U[0,1)

  Vec normal_vec(Index n) {
    Vec v(n);
    for (Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  Mat normal_mat(Index r, Index c) {
    Mat m(r, c);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) m(i, j) = normal();
    return m;
  }

  // integer in [0, n)
  Index uniform_index(Index n) {
    return std::min<Index>(static_cast<Index>(uniform() * double(n)), n - 1);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::mt19937_64& engine() { return engine_; }

 private:
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    // splitmix64 over the pair so nearby (seed, stream) pairs decorrelate
    std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace nsvlmc
