#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace envdt {

// ---------------------------------------------------------------------------
// Distribution specifications. Defaults are the normative parameters used when
// a distribution is named without arguments.
// ---------------------------------------------------------------------------

struct NormalDist {
  double mu = 0.5;
  double sigma = 0.15;
  friend bool operator==(const NormalDist&, const NormalDist&) = default;
};
struct BinomialDist {
  std::int64_t n = 10;
  double p = 0.5;
  friend bool operator==(const BinomialDist&, const BinomialDist&) = default;
};
struct BernoulliDist {
  double p = 0.5;
  friend bool operator==(const BernoulliDist&, const BernoulliDist&) = default;
};
struct ExponentialDist {
  double lambda = 2.0;
  friend bool operator==(const ExponentialDist&, const ExponentialDist&) = default;
};
struct GammaDist {
  double k = 2.0;
  double theta = 0.25;
  friend bool operator==(const GammaDist&, const GammaDist&) = default;
};
struct PoissonDist {
  double lambda = 3.0;
  friend bool operator==(const PoissonDist&, const PoissonDist&) = default;
};
struct UniformDist {
  double min = 0.0;
  double max = 1.0;
  friend bool operator==(const UniformDist&, const UniformDist&) = default;
};
/// Support {1, 2, ...}: number of trials up to and including the first success.
struct GeometricDist {
  double p = 0.5;
  friend bool operator==(const GeometricDist&, const GeometricDist&) = default;
};
struct TriangularDist {
  double a = 0.0;
  double c = 0.5;
  double b = 1.0;
  friend bool operator==(const TriangularDist&, const TriangularDist&) = default;
};
/// Logarithmic series distribution on {1, 2, ...}.
struct LogarithmicDist {
  double p = 0.5;
  friend bool operator==(const LogarithmicDist&, const LogarithmicDist&) = default;
};

using DistributionSpec =
    std::variant<NormalDist, BinomialDist, BernoulliDist, ExponentialDist, GammaDist,
                 PoissonDist, UniformDist, GeometricDist, TriangularDist, LogarithmicDist>;

enum class DistributionKind {
  Normal,
  Binomial,
  Bernoulli,
  Exponential,
  Gamma,
  Poisson,
  Uniform,
  Geometric,
  Triangular,
  Logarithmic,
};

/// All kinds, in the row order used by the report tables.
inline constexpr std::array<DistributionKind, 10> kAllDistributionKinds = {
    DistributionKind::Normal,      DistributionKind::Binomial, DistributionKind::Bernoulli,
    DistributionKind::Exponential, DistributionKind::Gamma,    DistributionKind::Poisson,
    DistributionKind::Uniform,     DistributionKind::Geometric, DistributionKind::Triangular,
    DistributionKind::Logarithmic,
};

DistributionKind kind_of(const DistributionSpec& spec);
std::string_view to_string(DistributionKind kind);
DistributionSpec default_spec(DistributionKind kind);

class InvalidParameters : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws InvalidParameters when a parameter is outside its domain.
void check_parameters(const DistributionSpec& spec);

/// Parses `kind` or `kind(key=value, ...)`; omitted keys keep their defaults.
/// Throws InvalidParameters on unknown kinds/keys or out-of-domain values.
DistributionSpec parse_distribution(std::string_view text);

/// Canonical text with every parameter spelled out, e.g.
/// `exponential(lambda=2.0)`.
std::string format_distribution(const DistributionSpec& spec);

double distribution_mean(const DistributionSpec& spec);
double distribution_variance(const DistributionSpec& spec);

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view s);

/// Uniform variates of one stream position. Variate j of position p is a pure
/// function of (key, p, j), so a sample may consume any number of them without
/// disturbing later positions.
class UniformBlock {
 public:
  UniformBlock(std::array<std::uint32_t, 2> key, std::uint64_t position)
      : key_(key), position_(position) {}

  /// Next variate in [0, 1) with 53 random bits.
  double next();
  /// Next variate in (0, 1].
  double next_open_low() { return 1.0 - next(); }

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t position_;
  std::uint32_t call_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

/// Counter-based stream: the seed is the Philox key, the position the counter.
/// Every sample consumes exactly one position.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : seed_(seed) {}

  /// Child stream keyed by (seed, name); independent of this stream's position.
  RandomStream split(std::string_view name) const;

  UniformBlock next_block();
  double next_uniform() { return next_block().next(); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t position() const { return position_; }

 private:
  std::uint64_t seed_;
  std::uint64_t position_ = 0;
};

/// Raw draw from the distribution; advances the stream by one position.
double sample(const DistributionSpec& spec, RandomStream& stream);

/// Raw draw using an explicit block of variates.
double sample_from(const DistributionSpec& spec, UniformBlock& block);

/// Maps a raw draw into [0, 1] by the per-kind table:
/// uniform/triangular/normal clamp, bernoulli as is, binomial k/n,
/// exponential and gamma min(x,1), poisson min(k,10)/10, geometric and
/// logarithmic 1/k.
double map_to_unit(const DistributionSpec& spec, double raw);

/// sample() followed by map_to_unit().
double unit_likelihood(const DistributionSpec& spec, RandomStream& stream);

}  // namespace envdt
