#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "bekit/error.hpp"
#include "bekit/parallel.hpp"
#include "bekit/rng.hpp"
#include "bekit/space.hpp"

namespace bekit {

// Standard normal CDF through the complementary error function; erfc keeps
// full relative accuracy in the lower tail.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

struct KDistReport {
  enum class Method { kExact, kEmpirical };
  double value = 0.0;
  Method method = Method::kExact;
  std::size_t n_samples = 0;
  double dkw_radius = 0.0;
  double delta = 0.0;
  std::uint64_t seed = 0;

  static const char* method_name(Method m) { return m == Method::kExact ? "exact" : "empirical"; }
};

// Kolmogorov distance to N(0,1) of a finite law given as (value, mass)
// pairs. Values closer than 1e-12 (relative) are merged first; the supremum
// of a step CDF against a continuous one is attained at an atom, either at
// the atom or just before it.
inline double kdist_of_atoms(std::vector<std::pair<double, double>> atoms) {
  if (atoms.empty()) throw InputError("Kolmogorov distance of an empty law");
  std::sort(atoms.begin(), atoms.end());
  double cdf = 0.0, worst = 0.0;
  std::size_t i = 0;
  while (i < atoms.size()) {
    const double a = atoms[i].first;
    double mass = 0.0;
    std::size_t j = i;
    while (j < atoms.size() && atoms[j].first - a <= 1e-12 * std::max(1.0, std::abs(a))) {
      mass += atoms[j].second;
      ++j;
    }
    const double phi = normal_cdf(a);
    worst = std::max(worst, std::abs(cdf - phi));  // left limit F(a-)
    cdf += mass;
    worst = std::max(worst, std::abs(std::min(cdf, 1.0) - phi));
    i = j;
  }
  return std::min(worst, 1.0);
}

inline KDistReport exact_kdist(const RandomFunctional& x) {
  std::vector<std::pair<double, double>> atoms;
  atoms.reserve(x.size());
  const auto p = x.space().probs();
  for (std::size_t i = 0; i < x.size(); ++i) atoms.emplace_back(x[i], p[i]);
  KDistReport r;
  r.value = kdist_of_atoms(std::move(atoms));
  r.method = KDistReport::Method::kExact;
  return r;
}

// One-sample Kolmogorov statistic against N(0,1) of an already sorted sample:
// max_i max(i/N - Phi(x_i), Phi(x_i) - (i-1)/N).
inline double ks_statistic(const std::vector<double>& sorted) {
  const double n = static_cast<double>(sorted.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double phi = normal_cdf(sorted[i]);
    worst = std::max({worst, (i + 1) / n - phi, phi - i / n});
  }
  return worst;
}

inline double dkw_radius(std::size_t n, double delta) {
  return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
}

inline KDistReport empirical_kdist(std::vector<double> samples, double delta) {
  if (samples.size() < 100) {
    throw InputError("empirical Kolmogorov distance needs at least 100 samples, got " +
                     std::to_string(samples.size()));
  }
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("delta must lie in (0, 1)");
  for (double v : samples) {
    if (!std::isfinite(v)) throw InputError("samples must be finite");
  }
  if (!std::is_sorted(samples.begin(), samples.end())) std::sort(samples.begin(), samples.end());
  KDistReport r;
  r.value = ks_statistic(samples);
  r.method = KDistReport::Method::kEmpirical;
  r.n_samples = samples.size();
  r.delta = delta;
  r.dkw_radius = dkw_radius(samples.size(), delta);
  return r;
}

// Monte Carlo driver: draws `count` values of draw(rng) in blocks of fixed
// size; block b uses the stream (seed, b), so the output is the same for any
// number of workers.
template <class Draw>
std::vector<double> simulate(std::size_t count, std::uint64_t seed, Draw&& draw,
                             std::size_t block_size = 4096) {
  std::vector<double> out(count);
  const std::size_t blocks = (count + block_size - 1) / block_size;
  parallel_for_blocks(blocks, [&](std::size_t b) {
    Stream rng(seed, b);
    const std::size_t end = std::min(count, (b + 1) * block_size);
    for (std::size_t i = b * block_size; i < end; ++i) out[i] = draw(rng);
  });
  return out;
}

// Sample dumps: little-endian uint64 count followed by IEEE-754 doubles.
inline void write_samples_binary(const std::string& path, const std::vector<double>& v) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open " + path + " for writing");
  auto put = [&](std::uint64_t bits) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
  };
  put(v.size());
  for (double x : v) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, 8);
    put(bits);
  }
}

inline std::vector<double> read_samples_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path);
  auto get = [&]() {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw InputError("truncated sample file " + path);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return bits;
  };
  const std::uint64_t n = get();
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(n, 1u << 24)));
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint64_t bits = get();
    double x;
    std::memcpy(&x, &bits, 8);
    v.push_back(x);
  }
  return v;
}

inline void write_samples_csv(const std::string& path, const std::vector<double>& v) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot open " + path + " for writing");
  os.precision(17);
  os << "value\n";
  for (double x : v) os << x << '\n';
}

inline std::vector<double> read_samples_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open " + path);
  std::vector<double> v;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line == "value") continue;
    }
    std::size_t used = 0;
    double x;
    try {
      x = std::stod(line, &used);
    } catch (const std::exception&) {
      throw InputError("bad sample value '" + line + "' in " + path);
    }
    if (used != line.size()) throw InputError("bad sample value '" + line + "' in " + path);
    v.push_back(x);
  }
  return v;
}

}  // namespace bekit
