#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "bekit/dist.hpp"
#include "bekit/error.hpp"
#include "bekit/mc.hpp"
#include "bekit/rng.hpp"

namespace bekit {

// Template graph G on labelled vertices 0..v-1, without isolated vertices.
class GraphTemplate {
 public:
  enum class Kind { kEdge, kTwoPath, kTriangle, kFourCycle, kGeneric };

  GraphTemplate() = default;
  GraphTemplate(int vertices, std::vector<std::pair<int, int>> edges)
      : v_(vertices), edges_(std::move(edges)) {
    if (edges_.empty()) throw InputError("template graph needs at least one edge");
    if (v_ < 2 || v_ > 30) throw InputError("template graph needs 2..30 vertices");
    std::vector<int> deg(v_, 0);
    for (auto& [a, b] : edges_) {
      if (a < 0 || b < 0 || a >= v_ || b >= v_) throw InputError("template edge endpoint out of range");
      if (a == b) throw InputError("template graph has a self-loop");
      if (a > b) std::swap(a, b);
      ++deg[a];
      ++deg[b];
    }
    std::sort(edges_.begin(), edges_.end());
    if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end()) {
      throw InputError("template graph has a repeated edge");
    }
    for (int i = 0; i < v_; ++i) {
      if (deg[i] == 0) throw InputError("template vertex " + std::to_string(i) + " is isolated");
    }
    kind_ = classify(deg);
  }

  static GraphTemplate edge() { return GraphTemplate(2, {{0, 1}}); }
  static GraphTemplate two_path() { return GraphTemplate(3, {{0, 1}, {1, 2}}); }
  static GraphTemplate triangle() { return GraphTemplate(3, {{0, 1}, {1, 2}, {0, 2}}); }
  static GraphTemplate four_cycle() { return GraphTemplate(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}}); }

  int vertices() const { return v_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  Kind kind() const { return kind_; }

  static const char* kind_name(Kind k) {
    switch (k) {
      case Kind::kEdge: return "edge";
      case Kind::kTwoPath: return "2-path";
      case Kind::kTriangle: return "triangle";
      case Kind::kFourCycle: return "4-cycle";
      default: return "generic";
    }
  }

  // Number of vertex permutations preserving the edge set.
  long automorphisms() const {
    std::vector<int> perm(v_);
    std::iota(perm.begin(), perm.end(), 0);
    long count = 0;
    do {
      bool ok = true;
      for (const auto& [a, b] : edges_) {
        int x = perm[a], y = perm[b];
        if (x > y) std::swap(x, y);
        if (!std::binary_search(edges_.begin(), edges_.end(), std::make_pair(x, y))) {
          ok = false;
          break;
        }
      }
      count += ok;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return count;
  }

 private:
  Kind classify(const std::vector<int>& deg) const {
    const int e = edge_count();
    if (v_ == 2 && e == 1) return Kind::kEdge;
    if (v_ == 3 && e == 2) return Kind::kTwoPath;
    if (v_ == 3 && e == 3) return Kind::kTriangle;
    if (v_ == 4 && e == 4 && std::all_of(deg.begin(), deg.end(), [](int d) { return d == 2; })) {
      return Kind::kFourCycle;
    }
    return Kind::kGeneric;
  }

  int v_ = 0;
  std::vector<std::pair<int, int>> edges_;
  Kind kind_ = Kind::kGeneric;
};

struct SubgraphScale {
  double value = 0.0;       // min over nonempty edge subsets H of n^{v_H} p^{e_H}
  unsigned minimizer = 0;   // edge mask of a minimising H
  int v_h = 0, e_h = 0;
};

inline SubgraphScale min_subgraph_scale(const GraphTemplate& g, int n, double p) {
  const int e = g.edge_count();
  if (e > 10) throw SizeError("subgraph enumeration supports at most 10 template edges");
  if (n < 1) throw InputError("host size must be positive");
  if (!(p > 0.0 && p <= 1.0)) throw InputError("retention probability must lie in (0, 1]");
  SubgraphScale best;
  best.value = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << e); ++mask) {
    std::vector<char> used(g.vertices(), 0);
    int eh = 0;
    for (int k = 0; k < e; ++k) {
      if (!(mask & (1u << k))) continue;
      ++eh;
      used[g.edges()[k].first] = used[g.edges()[k].second] = 1;
    }
    const int vh = static_cast<int>(std::count(used.begin(), used.end(), 1));
    const double s = std::pow(static_cast<double>(n), vh) * std::pow(p, eh);
    if (s < best.value) best = {s, mask, vh, eh};
  }
  return best;
}

struct RgRate {
  double mean = 0.0, variance = 0.0, central4 = 0.0;
  double numerator = 0.0;    // sqrt(E(X - EX)^4) + (1 - p)(EX)^2
  double denominator = 0.0;  // Var X + (1 - p)(EX)^2
  SubgraphScale scale;
  double rate = 0.0;         // numerator / denominator * ((1 - p) scale)^{-1/2}
};

// Constant-free rate for the renormalised weight of copies of G in G(n, p).
inline RgRate rg_rate(const GraphTemplate& g, int n, double p, const Distribution& law) {
  if (!(p > 0.0 && p < 1.0)) throw InputError("retention probability must lie in (0, 1)");
  RgRate r;
  r.mean = law.mean();
  r.variance = law.expect([&](double x) { return (x - r.mean) * (x - r.mean); });
  r.central4 = law.expect([&](double x) { return std::pow(x - r.mean, 4); });
  const double shift = (1.0 - p) * r.mean * r.mean;
  r.numerator = std::sqrt(r.central4) + shift;
  r.denominator = r.variance + shift;
  if (!(r.denominator > 0.0)) throw DegenerateError("Var X + (1 - p)(EX)^2 vanishes");
  r.scale = min_subgraph_scale(g, n, p);
  r.rate = r.numerator / r.denominator / std::sqrt((1.0 - p) * r.scale.value);
  return r;
}

// How a copy of G is weighted: product or sum of its edge weights.
enum class CopyWeight { kProduct, kSum };

inline const char* copy_weight_name(CopyWeight c) {
  return c == CopyWeight::kProduct ? "product" : "sum";
}

// Random host graph: retained-edge indicator and weight per pair.
struct HostGraph {
  int n = 0;
  std::vector<double> w;     // n x n symmetric, weight if retained else 0
  std::vector<char> present; // n x n symmetric
  double weight(int i, int j) const { return w[static_cast<std::size_t>(i) * n + j]; }
  bool has(int i, int j) const { return present[static_cast<std::size_t>(i) * n + j] != 0; }
};

// Pairs (i < j) are visited in lexicographic order, each consuming two
// draws: the retention uniform and the edge weight.
inline HostGraph draw_host(int n, double p, const Distribution& law, Stream& rng) {
  HostGraph h;
  h.n = n;
  h.w.assign(static_cast<std::size_t>(n) * n, 0.0);
  h.present.assign(static_cast<std::size_t>(n) * n, 0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double u = rng.uniform();
      const double x = sample(law, rng);
      if (u < p) {
        const std::size_t a = static_cast<std::size_t>(i) * n + j, b = static_cast<std::size_t>(j) * n + i;
        h.w[a] = h.w[b] = x;
        h.present[a] = h.present[b] = 1;
      }
    }
  }
  return h;
}

// Sum over copies of G by injective maps of the template vertices, divided by
// the number of automorphisms. Cost O(n^v).
inline double count_generic(const GraphTemplate& g, const HostGraph& h, CopyWeight conv) {
  const int v = g.vertices();
  std::vector<int> map(v, -1);
  std::vector<char> used(h.n, 0);
  // Edges grouped by their later endpoint so they can be checked when it is placed.
  std::vector<std::vector<int>> back(v);
  for (const auto& [a, b] : g.edges()) back[std::max(a, b)].push_back(std::min(a, b));
  double total = 0.0;
  auto rec = [&](auto&& self, int depth, double acc) -> void {
    if (depth == v) {
      total += acc;
      return;
    }
    for (int x = 0; x < h.n; ++x) {
      if (used[x]) continue;
      double next = acc;
      bool ok = true;
      for (int u : back[depth]) {
        const int y = map[u];
        if (!h.has(x, y)) {
          ok = false;
          break;
        }
        next = conv == CopyWeight::kProduct ? next * h.weight(x, y) : next + h.weight(x, y);
      }
      if (!ok) continue;
      used[x] = 1;
      map[depth] = x;
      self(self, depth + 1, next);
      used[x] = 0;
    }
  };
  rec(rec, 0, conv == CopyWeight::kProduct ? 1.0 : 0.0);
  return total / static_cast<double>(g.automorphisms());
}

// Weighted copy count W_n^G of one host graph.
inline double count_copies(const GraphTemplate& g, const HostGraph& h, CopyWeight conv) {
  const int n = h.n;
  auto row = [&](int i) { return h.w.data() + static_cast<std::size_t>(i) * n; };
  if (conv == CopyWeight::kSum && g.kind() != GraphTemplate::Kind::kEdge) {
    return count_generic(g, h, conv);
  }
  switch (g.kind()) {
    case GraphTemplate::Kind::kEdge: {
      double s = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) s += row(i)[j];
      return s;
    }
    case GraphTemplate::Kind::kTwoPath: {
      double s = 0.0;
      for (int j = 0; j < n; ++j) {
        double a = 0.0, b = 0.0;
        for (int i = 0; i < n; ++i) {
          a += row(j)[i];
          b += row(j)[i] * row(j)[i];
        }
        s += 0.5 * (a * a - b);
      }
      return s;
    }
    case GraphTemplate::Kind::kTriangle: {
      double s = 0.0;
      for (int i = 0; i < n; ++i) {
        const double* ri = row(i);
        for (int j = i + 1; j < n; ++j) {
          const double wij = ri[j];
          if (wij == 0.0) continue;
          const double* rj = row(j);
          double t = 0.0;
          for (int k = j + 1; k < n; ++k) t += ri[k] * rj[k];
          s += wij * t;
        }
      }
      return s;
    }
    case GraphTemplate::Kind::kFourCycle: {
      // For each unordered opposite pair {a, c}, choose two distinct middle
      // vertices; every 4-cycle has two such pairs.
      double s = 0.0;
      for (int a = 0; a < n; ++a) {
        for (int c = a + 1; c < n; ++c) {
          double lin = 0.0, sq = 0.0;
          for (int b = 0; b < n; ++b) {
            const double y = row(a)[b] * row(b)[c];
            lin += y;
            sq += y * y;
          }
          s += 0.5 * (lin * lin - sq);
        }
      }
      return 0.5 * s;
    }
    default:
      return count_generic(g, h, conv);
  }
}

// Maximum host size for the generic O(n^v) enumerator.
inline bool simulation_supported(const GraphTemplate& g, int n) {
  if (n < 1 || n > 128) return false;
  return g.kind() != GraphTemplate::Kind::kGeneric || g.vertices() <= 5;
}

// One draw of W_n^G.
inline double simulate_weight(const GraphTemplate& g, int n, double p, const Distribution& law,
                              Stream& rng, CopyWeight conv = CopyWeight::kProduct) {
  if (!simulation_supported(g, n)) {
    throw InputError(std::string("unsupported simulation: template ") +
                     GraphTemplate::kind_name(g.kind()) + " with " + std::to_string(g.vertices()) +
                     " vertices on n = " + std::to_string(n) +
                     " (specialised templates or at most 5 vertices, n <= 128)");
  }
  if (!(p >= 0.0 && p <= 1.0)) throw InputError("retention probability must lie in [0, 1]");
  return count_copies(g, draw_host(n, p, law, rng), conv);
}

// Mean and variance of W_n^G estimated from a pilot simulation; the closed
// form is not used, so standardisation always goes through this estimate.
struct PilotMoments {
  double mean = 0.0;
  double variance = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

inline PilotMoments pilot_moments(const GraphTemplate& g, int n, double p, const Distribution& law,
                                  std::uint64_t seed, std::size_t samples,
                                  CopyWeight conv = CopyWeight::kProduct) {
  if (samples < 2) throw InputError("pilot run needs at least two samples");
  const auto v = simulate(samples, seed, [&](Stream& rng) { return simulate_weight(g, n, p, law, rng, conv); });
  PilotMoments m;
  m.samples = samples;
  m.seed = seed;
  m.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(samples);
  double ss = 0.0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.variance = ss / static_cast<double>(samples - 1);
  return m;
}

inline std::vector<double> standardize(std::vector<double> v, const PilotMoments& m) {
  if (!(m.variance > 0.0)) throw DegenerateError("pilot variance of the graph weight is zero");
  const double sd = std::sqrt(m.variance);
  for (double& x : v) x = (x - m.mean) / sd;
  return v;
}

}  // namespace bekit
