#include "envdt/stochastic.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include <fmt/format.h>

namespace envdt {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

std::array<std::uint32_t, 2> key_of(std::uint64_t seed) {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

template <class T>
constexpr DistributionKind kind_for();
template <> constexpr DistributionKind kind_for<NormalDist>() { return DistributionKind::Normal; }
template <> constexpr DistributionKind kind_for<BinomialDist>() { return DistributionKind::Binomial; }
template <> constexpr DistributionKind kind_for<BernoulliDist>() { return DistributionKind::Bernoulli; }
template <> constexpr DistributionKind kind_for<ExponentialDist>() { return DistributionKind::Exponential; }
template <> constexpr DistributionKind kind_for<GammaDist>() { return DistributionKind::Gamma; }
template <> constexpr DistributionKind kind_for<PoissonDist>() { return DistributionKind::Poisson; }
template <> constexpr DistributionKind kind_for<UniformDist>() { return DistributionKind::Uniform; }
template <> constexpr DistributionKind kind_for<GeometricDist>() { return DistributionKind::Geometric; }
template <> constexpr DistributionKind kind_for<TriangularDist>() { return DistributionKind::Triangular; }
template <> constexpr DistributionKind kind_for<LogarithmicDist>() { return DistributionKind::Logarithmic; }

double standard_normal(UniformBlock& u) {
  double u1 = u.next_open_low();
  double u2 = u.next();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double gamma_draw(double k, UniformBlock& u) {
  if (k < 1.0) {
    double g = gamma_draw(k + 1.0, u);
    return g * std::pow(u.next_open_low(), 1.0 / k);
  }
  // Marsaglia & Tsang (2000).
  const double d = k - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = standard_normal(u);
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double w = u.next_open_low();
    if (w < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(w) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

std::int64_t poisson_inversion(double lambda, UniformBlock& u) {
  double w = u.next();
  double p = std::exp(-lambda);
  double cdf = p;
  std::int64_t k = 0;
  while (w >= cdf && k < 100000) {
    ++k;
    p *= lambda / static_cast<double>(k);
    cdf += p;
    if (p == 0.0 && cdf <= w) break;
  }
  return k;
}

bool finite_all(std::initializer_list<double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_number(const std::string& key, std::string_view text) {
  std::string t = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw InvalidParameters(fmt::format("parameter '{}' is not a number: '{}'", key, t));
  }
  return v;
}

std::string num(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  std::string out(buf, end);
  if (out.find_first_of(".eEn") == std::string::npos) out += ".0";
  return out;
}

}  // namespace

DistributionKind kind_of(const DistributionSpec& spec) {
  return std::visit([](const auto& d) { return kind_for<std::decay_t<decltype(d)>>(); }, spec);
}

std::string_view to_string(DistributionKind kind) {
  switch (kind) {
    case DistributionKind::Normal: return "normal";
    case DistributionKind::Binomial: return "binomial";
    case DistributionKind::Bernoulli: return "bernoulli";
    case DistributionKind::Exponential: return "exponential";
    case DistributionKind::Gamma: return "gamma";
    case DistributionKind::Poisson: return "poisson";
    case DistributionKind::Uniform: return "uniform";
    case DistributionKind::Geometric: return "geometric";
    case DistributionKind::Triangular: return "triangular";
    case DistributionKind::Logarithmic: return "logarithmic";
  }
  return "?";
}

DistributionSpec default_spec(DistributionKind kind) {
  switch (kind) {
    case DistributionKind::Normal: return NormalDist{};
    case DistributionKind::Binomial: return BinomialDist{};
    case DistributionKind::Bernoulli: return BernoulliDist{};
    case DistributionKind::Exponential: return ExponentialDist{};
    case DistributionKind::Gamma: return GammaDist{};
    case DistributionKind::Poisson: return PoissonDist{};
    case DistributionKind::Uniform: return UniformDist{};
    case DistributionKind::Geometric: return GeometricDist{};
    case DistributionKind::Triangular: return TriangularDist{};
    case DistributionKind::Logarithmic: return LogarithmicDist{};
  }
  return UniformDist{};
}

void check_parameters(const DistributionSpec& spec) {
  auto fail = [&](const char* what) {
    throw InvalidParameters(fmt::format("{}: {}", format_distribution(spec), what));
  };
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, NormalDist>) {
          if (!finite_all({d.mu, d.sigma}) || !(d.sigma > 0)) fail("requires sigma > 0");
        } else if constexpr (std::is_same_v<T, BinomialDist>) {
          if (d.n < 1) fail("requires n >= 1");
          if (!(d.p >= 0 && d.p <= 1)) fail("requires 0 <= p <= 1");
        } else if constexpr (std::is_same_v<T, BernoulliDist>) {
          if (!(d.p >= 0 && d.p <= 1)) fail("requires 0 <= p <= 1");
        } else if constexpr (std::is_same_v<T, ExponentialDist>) {
          if (!std::isfinite(d.lambda) || !(d.lambda > 0)) fail("requires lambda > 0");
        } else if constexpr (std::is_same_v<T, GammaDist>) {
          if (!finite_all({d.k, d.theta}) || !(d.k > 0) || !(d.theta > 0))
            fail("requires k > 0 and theta > 0");
        } else if constexpr (std::is_same_v<T, PoissonDist>) {
          if (!std::isfinite(d.lambda) || !(d.lambda > 0)) fail("requires lambda > 0");
        } else if constexpr (std::is_same_v<T, UniformDist>) {
          if (!finite_all({d.min, d.max}) || !(d.min <= d.max)) fail("requires min <= max");
        } else if constexpr (std::is_same_v<T, GeometricDist>) {
          if (!(d.p > 0 && d.p <= 1)) fail("requires 0 < p <= 1");
        } else if constexpr (std::is_same_v<T, TriangularDist>) {
          if (!finite_all({d.a, d.b, d.c}) || !(d.a <= d.c && d.c <= d.b) || !(d.a < d.b))
            fail("requires a <= c <= b and a < b");
        } else if constexpr (std::is_same_v<T, LogarithmicDist>) {
          if (!(d.p > 0 && d.p < 1)) fail("requires 0 < p < 1");
        }
      },
      spec);
}

DistributionSpec parse_distribution(std::string_view text) {
  std::string t = trim(text);
  std::string name = t;
  std::string args;
  if (auto open = t.find('('); open != std::string::npos) {
    if (t.back() != ')') throw InvalidParameters("missing ')' in distribution: " + t);
    name = trim(std::string_view(t).substr(0, open));
    args = t.substr(open + 1, t.size() - open - 2);
  }
  name = lower(name);
  if (name.size() > 12 && name.ends_with("distribution")) name.resize(name.size() - 12);

  std::optional<DistributionKind> kind;
  for (DistributionKind k : kAllDistributionKinds) {
    if (to_string(k) == name) kind = k;
  }
  if (!kind) throw InvalidParameters("unknown distribution: '" + name + "'");
  DistributionSpec spec = default_spec(*kind);

  std::vector<std::pair<std::string, double>> kv;
  size_t pos = 0;
  while (pos < args.size()) {
    size_t comma = args.find(',', pos);
    std::string item = trim(std::string_view(args).substr(pos, comma - pos));
    pos = comma == std::string::npos ? args.size() : comma + 1;
    if (item.empty()) continue;
    size_t eq = item.find('=');
    if (eq == std::string::npos) throw InvalidParameters("expected key=value, got '" + item + "'");
    std::string key = lower(trim(std::string_view(item).substr(0, eq)));
    kv.emplace_back(key, parse_number(key, std::string_view(item).substr(eq + 1)));
  }

  for (const auto& [key, value] : kv) {
    bool ok = std::visit(
        [&, &key = key, value = value](auto& d) {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, NormalDist>) {
            if (key == "mu") return d.mu = value, true;
            if (key == "sigma") return d.sigma = value, true;
          } else if constexpr (std::is_same_v<T, BinomialDist>) {
            if (key == "n") {
              if (value != std::floor(value)) throw InvalidParameters("binomial n must be an integer");
              d.n = static_cast<std::int64_t>(value);
              return true;
            }
            if (key == "p") return d.p = value, true;
          } else if constexpr (std::is_same_v<T, BernoulliDist> || std::is_same_v<T, GeometricDist> ||
                               std::is_same_v<T, LogarithmicDist>) {
            if (key == "p") return d.p = value, true;
          } else if constexpr (std::is_same_v<T, ExponentialDist> || std::is_same_v<T, PoissonDist>) {
            if (key == "lambda") return d.lambda = value, true;
          } else if constexpr (std::is_same_v<T, GammaDist>) {
            if (key == "k") return d.k = value, true;
            if (key == "theta") return d.theta = value, true;
          } else if constexpr (std::is_same_v<T, UniformDist>) {
            if (key == "min") return d.min = value, true;
            if (key == "max") return d.max = value, true;
          } else if constexpr (std::is_same_v<T, TriangularDist>) {
            if (key == "a") return d.a = value, true;
            if (key == "c") return d.c = value, true;
            if (key == "b") return d.b = value, true;
          }
          return false;
        },
        spec);
    if (!ok) throw InvalidParameters(fmt::format("unknown parameter '{}' for {}", key, name));
  }
  check_parameters(spec);
  return spec;
}

std::string format_distribution(const DistributionSpec& spec) {
  return std::visit(
      [](const auto& d) -> std::string {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, NormalDist>)
          return fmt::format("normal(mu={}, sigma={})", num(d.mu), num(d.sigma));
        else if constexpr (std::is_same_v<T, BinomialDist>)
          return fmt::format("binomial(n={}, p={})", d.n, num(d.p));
        else if constexpr (std::is_same_v<T, BernoulliDist>)
          return fmt::format("bernoulli(p={})", num(d.p));
        else if constexpr (std::is_same_v<T, ExponentialDist>)
          return fmt::format("exponential(lambda={})", num(d.lambda));
        else if constexpr (std::is_same_v<T, GammaDist>)
          return fmt::format("gamma(k={}, theta={})", num(d.k), num(d.theta));
        else if constexpr (std::is_same_v<T, PoissonDist>)
          return fmt::format("poisson(lambda={})", num(d.lambda));
        else if constexpr (std::is_same_v<T, UniformDist>)
          return fmt::format("uniform(min={}, max={})", num(d.min), num(d.max));
        else if constexpr (std::is_same_v<T, GeometricDist>)
          return fmt::format("geometric(p={})", num(d.p));
        else if constexpr (std::is_same_v<T, TriangularDist>)
          return fmt::format("triangular(a={}, c={}, b={})", num(d.a), num(d.c), num(d.b));
        else
          return fmt::format("logarithmic(p={})", num(d.p));
      },
      spec);
}

double distribution_mean(const DistributionSpec& spec) {
  return std::visit(
      [](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, NormalDist>) return d.mu;
        else if constexpr (std::is_same_v<T, BinomialDist>) return static_cast<double>(d.n) * d.p;
        else if constexpr (std::is_same_v<T, BernoulliDist>) return d.p;
        else if constexpr (std::is_same_v<T, ExponentialDist>) return 1.0 / d.lambda;
        else if constexpr (std::is_same_v<T, GammaDist>) return d.k * d.theta;
        else if constexpr (std::is_same_v<T, PoissonDist>) return d.lambda;
        else if constexpr (std::is_same_v<T, UniformDist>) return 0.5 * (d.min + d.max);
        else if constexpr (std::is_same_v<T, GeometricDist>) return 1.0 / d.p;
        else if constexpr (std::is_same_v<T, TriangularDist>) return (d.a + d.b + d.c) / 3.0;
        else return -d.p / ((1.0 - d.p) * std::log1p(-d.p));
      },
      spec);
}

double distribution_variance(const DistributionSpec& spec) {
  return std::visit(
      [](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, NormalDist>) return d.sigma * d.sigma;
        else if constexpr (std::is_same_v<T, BinomialDist>)
          return static_cast<double>(d.n) * d.p * (1.0 - d.p);
        else if constexpr (std::is_same_v<T, BernoulliDist>) return d.p * (1.0 - d.p);
        else if constexpr (std::is_same_v<T, ExponentialDist>) return 1.0 / (d.lambda * d.lambda);
        else if constexpr (std::is_same_v<T, GammaDist>) return d.k * d.theta * d.theta;
        else if constexpr (std::is_same_v<T, PoissonDist>) return d.lambda;
        else if constexpr (std::is_same_v<T, UniformDist>)
          return (d.max - d.min) * (d.max - d.min) / 12.0;
        else if constexpr (std::is_same_v<T, GeometricDist>) return (1.0 - d.p) / (d.p * d.p);
        else if constexpr (std::is_same_v<T, TriangularDist>)
          return (d.a * d.a + d.b * d.b + d.c * d.c - d.a * d.b - d.a * d.c - d.b * d.c) / 18.0;
        else {
          double l = std::log1p(-d.p);
          return -d.p * (d.p + l) / ((1.0 - d.p) * (1.0 - d.p) * l * l);
        }
      },
      spec);
}

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
    std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
    auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

double UniformBlock::next() {
  if (used_ >= 4) {
    buffer_ = philox4x32_10({static_cast<std::uint32_t>(position_),
                             static_cast<std::uint32_t>(position_ >> 32), call_, 0u},
                            key_);
    ++call_;
    used_ = 0;
  }
  std::uint64_t bits = (static_cast<std::uint64_t>(buffer_[used_]) << 32) | buffer_[used_ + 1];
  used_ += 2;
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

RandomStream RandomStream::split(std::string_view name) const {
  return RandomStream(splitmix64(seed_ ^ fnv1a64(name)));
}

UniformBlock RandomStream::next_block() { return UniformBlock(key_of(seed_), position_++); }

double sample(const DistributionSpec& spec, RandomStream& stream) {
  check_parameters(spec);
  UniformBlock block = stream.next_block();
  return sample_from(spec, block);
}

double sample_from(const DistributionSpec& spec, UniformBlock& u) {
  return std::visit(
      [&](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, NormalDist>) {
          return d.mu + d.sigma * standard_normal(u);
        } else if constexpr (std::is_same_v<T, BinomialDist>) {
          std::int64_t k = 0;
          for (std::int64_t i = 0; i < d.n; ++i) k += u.next() < d.p ? 1 : 0;
          return static_cast<double>(k);
        } else if constexpr (std::is_same_v<T, BernoulliDist>) {
          return u.next() < d.p ? 1.0 : 0.0;
        } else if constexpr (std::is_same_v<T, ExponentialDist>) {
          return -std::log(u.next_open_low()) / d.lambda;
        } else if constexpr (std::is_same_v<T, GammaDist>) {
          return gamma_draw(d.k, u) * d.theta;
        } else if constexpr (std::is_same_v<T, PoissonDist>) {
          // Sum of independent Poisson(<= 30) pieces keeps exp(-lambda) representable.
          double remaining = d.lambda;
          std::int64_t k = 0;
          while (remaining > 0.0) {
            double piece = std::min(remaining, 30.0);
            k += poisson_inversion(piece, u);
            remaining -= piece;
          }
          return static_cast<double>(k);
        } else if constexpr (std::is_same_v<T, UniformDist>) {
          return d.min + (d.max - d.min) * u.next();
        } else if constexpr (std::is_same_v<T, GeometricDist>) {
          if (d.p >= 1.0) return 1.0;
          return 1.0 + std::floor(std::log(u.next_open_low()) / std::log1p(-d.p));
        } else if constexpr (std::is_same_v<T, TriangularDist>) {
          double w = u.next();
          double span = d.b - d.a;
          double f_mode = (d.c - d.a) / span;
          if (w < f_mode) return d.a + std::sqrt(w * span * (d.c - d.a));
          return d.b - std::sqrt((1.0 - w) * span * (d.b - d.c));
        } else {
          // Kemp's LK algorithm.
          const double r = std::log1p(-d.p);
          for (;;) {
            double v = u.next();
            if (v >= d.p) return 1.0;
            double q = -std::expm1(r * u.next());
            if (v <= q * q) {
              double k = std::floor(1.0 + std::log(v) / std::log(q));
              if (k < 1.0 || v == 0.0) continue;
              return k;
            }
            if (v >= q) return 1.0;
            return 2.0;
          }
        }
      },
      spec);
}

double map_to_unit(const DistributionSpec& spec, double raw) {
  double x = std::visit(
      [raw](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, BinomialDist>) return raw / static_cast<double>(d.n);
        else if constexpr (std::is_same_v<T, PoissonDist>) return std::min(raw, 10.0) / 10.0;
        else if constexpr (std::is_same_v<T, GeometricDist> || std::is_same_v<T, LogarithmicDist>)
          return raw >= 1.0 ? 1.0 / raw : 1.0;
        else return raw;
      },
      spec);
  if (std::isnan(x)) return 0.0;
  return std::clamp(x, 0.0, 1.0);
}

double unit_likelihood(const DistributionSpec& spec, RandomStream& stream) {
  return map_to_unit(spec, sample(spec, stream));
}

}  // namespace envdt
