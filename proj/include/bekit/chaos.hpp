#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "bekit/error.hpp"
#include "bekit/hoeffding.hpp"
#include "bekit/rng.hpp"
#include "bekit/space.hpp"

namespace bekit {

inline double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return std::round(b);
}

// Symmetric kernel of order d stored once per sorted d-subset J of the
// coordinates, as a table over the atoms of J. The multiple integral is
// I_d(f)(w) = d! sum_J f_J(w_J), and ||f||^2 = d! sum_J E[f_J^2], so that
// E[I_d(f)^2] = d! ||f||^2.
class ChaosKernel {
 public:
  static constexpr double kDegeneracyTolerance = 1e-10;

  ChaosKernel() = default;
  ChaosKernel(SpacePtr space, int order) : space_(std::move(space)), order_(order) {
    if (order < 0 || order > space_->n()) {
      throw InputError("kernel order " + std::to_string(order) + " outside 0.." +
                       std::to_string(space_->n()));
    }
  }

  const OutcomeSpace& space() const { return *space_; }
  const SpacePtr& space_ptr() const { return space_; }
  int order() const { return order_; }
  const std::map<Subset, std::vector<double>>& entries() const { return entries_; }

  void set(Subset j, std::vector<double> values) {
    if (subset_size(j) != order_) {
      throw InputError("subset of size " + std::to_string(subset_size(j)) +
                       " given for a kernel of order " + std::to_string(order_));
    }
    if ((j & ~space_->full()) != 0) throw InputError("kernel subset outside the coordinates");
    if (values.size() != space_->table_size(j)) {
      throw InputError("kernel array has " + std::to_string(values.size()) + " entries, expected " +
                       std::to_string(space_->table_size(j)));
    }
    for (double v : values) {
      if (!std::isfinite(v)) throw InputError("kernel entries must be finite");
    }
    entries_[j] = std::move(values);
  }

  // f_J at a cell of the table over J; zero for subsets with no entry.
  double at(Subset j, std::size_t local) const {
    auto it = entries_.find(j);
    return it == entries_.end() ? 0.0 : it->second[local];
  }

  Table table(Subset j) const {
    auto it = entries_.find(j);
    if (it == entries_.end()) return Table{j, std::vector<double>(space_->table_size(j), 0.0)};
    return Table{j, it->second};
  }

  // Largest |E_{s ~ nu}[f_J(..., s, ...)]| over subsets, slots and cells.
  double max_degeneracy_violation() const {
    double worst = 0.0;
    for (const auto& [j, v] : entries_) {
      const Table t{j, v};
      for (int i : subset_members(j)) {
        const Table m = narrow(*space_, t, j & ~(Subset{1} << i));
        worst = std::max(worst, HoeffdingDecomposition::sup(m));
      }
    }
    return worst;
  }

  // Projection onto canonical kernels: centre every slot against its law.
  ChaosKernel canonicalized() const {
    ChaosKernel out(space_, order_);
    for (const auto& [j, v] : entries_) {
      Table t{j, v};
      for (int i : subset_members(j)) {
        const Table m = widen(*space_, narrow(*space_, t, j & ~(Subset{1} << i)), j);
        for (std::size_t k = 0; k < t.values.size(); ++k) t.values[k] -= m.values[k];
      }
      out.entries_[j] = std::move(t.values);
    }
    return out;
  }

  bool is_canonical(double tol = kDegeneracyTolerance) const {
    return max_degeneracy_violation() <= tol;
  }

  double inner(const ChaosKernel& g) const {
    if (g.order_ != order_) return 0.0;
    double acc = 0.0;
    for (const auto& [j, v] : entries_) {
      auto it = g.entries_.find(j);
      if (it == g.entries_.end()) continue;
      for (std::size_t k = 0; k < v.size(); ++k) {
        acc += space_->table_prob(j, k) * v[k] * it->second[k];
      }
    }
    return factorial(order_) * acc;
  }

  double norm2() const { return inner(*this); }

  ChaosKernel scaled(double c) const {
    ChaosKernel out(*this);
    for (auto& [j, v] : out.entries_) {
      for (double& x : v) x *= c;
    }
    return out;
  }

  ChaosKernel& operator+=(const ChaosKernel& g) {
    if (g.order_ != order_) throw InputError("adding kernels of different orders");
    for (const auto& [j, v] : g.entries_) {
      auto& mine = entries_[j];
      if (mine.empty()) mine.assign(v.size(), 0.0);
      for (std::size_t k = 0; k < v.size(); ++k) mine[k] += v[k];
    }
    return *this;
  }

  // f(k, t, .) as a kernel of order d - 1 on the remaining coordinates.
  ChaosKernel slice(int k, std::size_t t) const {
    if (order_ == 0) throw InputError("cannot slice an order-0 kernel");
    ChaosKernel out(space_, order_ - 1);
    const Subset bit = Subset{1} << k;
    for (const auto& [j, v] : entries_) {
      if (!(j & bit)) continue;
      const Subset rest = j & ~bit;
      std::vector<double> values(space_->table_size(rest));
      for (std::size_t c = 0; c < v.size(); ++c) {
        if (detail::project_cell(*space_, j, c, bit) != t) continue;
        values[detail::project_cell(*space_, j, c, rest)] = v[c];
      }
      out.entries_[rest] = std::move(values);
    }
    return out;
  }

 private:
  SpacePtr space_;
  int order_ = 0;
  std::map<Subset, std::vector<double>> entries_;
};

// Accepts a kernel, re-canonicalising it when a slot average exceeds tol.
inline ChaosKernel admit(const ChaosKernel& f, double tol = ChaosKernel::kDegeneracyTolerance) {
  return f.is_canonical(tol) ? f : f.canonicalized();
}

// I_d(f) at outcome idx.
inline double integral_eval(const ChaosKernel& f, std::size_t idx) {
  const auto& space = f.space();
  double acc = 0.0;
  for (const auto& [j, v] : f.entries()) acc += v[space.table_index(idx, j)];
  return factorial(f.order()) * acc;
}

// I_d(f) at the outcome given by one atom index per coordinate.
inline double integral_eval(const ChaosKernel& f, std::span<const std::size_t> atoms) {
  const auto& space = f.space();
  std::size_t idx = 0;
  for (int i = 0; i < space.n(); ++i) idx += atoms[i] * space.stride(i);
  return integral_eval(f, idx);
}

inline RandomFunctional integral(const ChaosKernel& f) {
  RandomFunctional out(f.space_ptr());
  if (f.order() == 0) {
    out += f.at(0, 0);
    return out;
  }
  for (std::size_t idx = 0; idx < out.size(); ++idx) out[idx] = integral_eval(f, idx);
  return out;
}

// X = E[X] + sum_{d >= 1} I_d(f_d).
class ChaosDecomposition {
 public:
  ChaosDecomposition() = default;
  ChaosDecomposition(SpacePtr space, double mean, std::vector<ChaosKernel> kernels)
      : space_(std::move(space)), mean_(mean), kernels_(std::move(kernels)) {
    for (std::size_t d = 0; d < kernels_.size(); ++d) {
      if (kernels_[d].order() != static_cast<int>(d) + 1) {
        throw InputError("chaos kernels must be listed by increasing order from 1");
      }
    }
  }

  double mean() const { return mean_; }
  const OutcomeSpace& space() const { return *space_; }
  const SpacePtr& space_ptr() const { return space_; }
  int max_order() const { return static_cast<int>(kernels_.size()); }
  const std::vector<ChaosKernel>& kernels() const { return kernels_; }
  // Kernel of order d >= 1 (a zero kernel beyond the stored range).
  ChaosKernel kernel(int d) const {
    if (d >= 1 && d <= max_order()) return kernels_[d - 1];
    return ChaosKernel(space_, d);
  }

  RandomFunctional reconstruct() const {
    RandomFunctional out = RandomFunctional::constant(space_, mean_);
    for (const auto& f : kernels_) {
      if (!f.entries().empty()) out += integral(f);
    }
    return out;
  }

  // E[I_d(f_d)^2] = d! ||f_d||^2.
  double grade_second_moment(int d) const {
    if (d == 0) return mean_ * mean_;
    const ChaosKernel f = kernel(d);
    return factorial(d) * f.norm2();
  }

  // E[X^2] as mean^2 plus the grade contributions.
  double second_moment() const {
    double s = mean_ * mean_;
    for (int d = 1; d <= max_order(); ++d) s += grade_second_moment(d);
    return s;
  }

 private:
  SpacePtr space_;
  double mean_ = 0.0;
  std::vector<ChaosKernel> kernels_;
};

// Chaos decomposition through the Hoeffding projection: f_J = W_J / d!.
inline ChaosDecomposition decompose(const RandomFunctional& x) {
  const HoeffdingDecomposition h = project(x);
  const int n = x.space().n();
  std::vector<ChaosKernel> kernels;
  for (int d = 1; d <= n; ++d) kernels.emplace_back(x.space_ptr(), d);
  for (const auto& [j, t] : h.terms()) {
    if (j == 0) continue;
    const int d = subset_size(j);
    std::vector<double> v = t.values;
    const double inv = 1.0 / factorial(d);
    for (double& e : v) e *= inv;
    kernels[d - 1].set(j, std::move(v));
  }
  return ChaosDecomposition(x.space_ptr(), h.mean(), std::move(kernels));
}

// Grade parts G_0..G_n of X on the full grid (G_d = sum_{|J| = d} W_J).
inline std::vector<RandomFunctional> grade_parts(const RandomFunctional& x) {
  const OutcomeSpace& space = x.space();
  const int n = space.n();
  std::vector<std::vector<double>> g(n + 1, std::vector<double>(x.size(), 0.0));
  g[0].assign(x.values().begin(), x.values().end());
  for (int i = 0; i < n; ++i) {
    for (int d = i; d >= 0; --d) {
      std::vector<double> m = average_axis(space, g[d], i);
      for (std::size_t k = 0; k < m.size(); ++k) {
        g[d + 1][k] += g[d][k] - m[k];
      }
      g[d] = std::move(m);
    }
  }
  std::vector<RandomFunctional> out;
  out.reserve(n + 1);
  for (auto& v : g) out.emplace_back(x.space_ptr(), std::move(v));
  return out;
}

// (-L)^alpha X: grade d is multiplied by d^alpha; the constant grade is kept
// for alpha = 0 and removed for alpha > 0. Negative powers need E[X] = 0.
inline RandomFunctional apply_L_power(const RandomFunctional& x, double alpha) {
  const auto parts = grade_parts(x);
  const double scale = 1.0 + x.max_abs();
  if (alpha < 0.0 && std::abs(parts[0][0]) > 1e-12 * scale) {
    throw DomainError("negative powers of -L need a centred functional (mean " +
                      std::to_string(parts[0][0]) + ")");
  }
  RandomFunctional out(x.space_ptr());
  if (alpha == 0.0) out += parts[0];
  for (std::size_t d = 1; d < parts.size(); ++d) {
    out += parts[d] * std::pow(static_cast<double>(d), alpha);
  }
  return out;
}

// Finite-difference gradient: for each coordinate k and replacement atom t,
// grad(k, t)(w) = X(w[k -> t]) - sum_s nu_k(s) X(w[k -> s]).
class DiscreteGradient {
 public:
  DiscreteGradient() = default;
  explicit DiscreteGradient(const RandomFunctional& x) : space_(x.space_ptr()) {
    const OutcomeSpace& space = *space_;
    d_.resize(space.n());
    for (int k = 0; k < space.n(); ++k) {
      const RandomFunctional avg = average_axis(x, k);
      for (std::size_t t = 0; t < space.support(k); ++t) {
        RandomFunctional g(space_);
        for (std::size_t idx = 0; idx < space.size(); ++idx) {
          g[idx] = x[space.with_coordinate(idx, k, t)] - avg[idx];
        }
        d_[k].push_back(std::move(g));
      }
    }
  }

  const OutcomeSpace& space() const { return *space_; }
  int n() const { return static_cast<int>(d_.size()); }
  const RandomFunctional& at(int k, std::size_t t) const { return d_[k][t]; }

  // Pointwise sum_k weight * E_{t ~ nu_k}[phi(grad(k, t)(w))].
  template <class Phi>
  RandomFunctional block_sum(Phi&& phi, double weight) const {
    RandomFunctional out(space_);
    for (int k = 0; k < n(); ++k) {
      const auto& law = space_->law(k);
      for (std::size_t t = 0; t < d_[k].size(); ++t) {
        const double c = weight * law.prob(t);
        const auto v = d_[k][t].values();
        for (std::size_t idx = 0; idx < v.size(); ++idx) out[idx] += c * phi(v[idx]);
      }
    }
    return out;
  }

  // Largest |sum_t nu_k(t) grad(k, t)(w)|; zero by construction.
  double max_block_mean() const {
    double worst = 0.0;
    for (int k = 0; k < n(); ++k) {
      RandomFunctional s(space_);
      for (std::size_t t = 0; t < d_[k].size(); ++t) s += d_[k][t] * space_->law(k).prob(t);
      worst = std::max(worst, s.max_abs());
    }
    return worst;
  }

 private:
  SpacePtr space_;
  std::vector<std::vector<RandomFunctional>> d_;
};

inline DiscreteGradient gradient(const RandomFunctional& x) { return DiscreteGradient(x); }

// Pointwise sum_k weight * E_t[grad_a(k,t) * grad_b(k,t)].
inline RandomFunctional block_inner(const DiscreteGradient& a, const DiscreteGradient& b,
                                    double weight) {
  RandomFunctional out(RandomFunctional::constant(a.at(0, 0).space_ptr(), 0.0));
  const auto& space = a.space();
  for (int k = 0; k < a.n(); ++k) {
    for (std::size_t t = 0; t < space.support(k); ++t) {
      out += (a.at(k, t) * b.at(k, t)) * (weight * space.law(k).prob(t));
    }
  }
  return out;
}

// |Cov(X, Y) - sum_k E E_t[grad (-L)^{alpha-1} X * grad (-L)^{-alpha} Y]|.
inline double covariance_identity_check(const RandomFunctional& x, const RandomFunctional& y,
                                        double alpha) {
  const double tol = 1e-12;
  if (std::abs(x.expectation()) > tol * (1.0 + x.max_abs()) ||
      std::abs(y.expectation()) > tol * (1.0 + y.max_abs())) {
    throw DomainError("covariance identity needs centred functionals");
  }
  const double cov = (x * y).expectation();
  const DiscreteGradient gx = gradient(apply_L_power(x, alpha - 1.0));
  const DiscreteGradient gy = gradient(apply_L_power(y, -alpha));
  const double rhs = block_inner(gx, gy, 1.0).expectation();
  return std::abs(cov - rhs);
}

// Largest pointwise gap in the discrete product rule
// grad(FG) = F(w[k->t]) grad G + G(w[k->t]) grad F - grad F grad G - E_u[grad_u F grad_u G].
inline double product_rule_residual(const RandomFunctional& f, const RandomFunctional& g) {
  const auto& space = f.space();
  const DiscreteGradient gf = gradient(f), gg = gradient(g), gfg = gradient(f * g);
  double worst = 0.0;
  for (int k = 0; k < space.n(); ++k) {
    RandomFunctional block(f.space_ptr());
    for (std::size_t u = 0; u < space.support(k); ++u) {
      block += (gf.at(k, u) * gg.at(k, u)) * space.law(k).prob(u);
    }
    for (std::size_t t = 0; t < space.support(k); ++t) {
      for (std::size_t idx = 0; idx < space.size(); ++idx) {
        const std::size_t shifted = space.with_coordinate(idx, k, t);
        const double rhs = f[shifted] * gg.at(k, t)[idx] + g[shifted] * gf.at(k, t)[idx] -
                           gf.at(k, t)[idx] * gg.at(k, t)[idx] - block[idx];
        worst = std::max(worst, std::abs(gfg.at(k, t)[idx] - rhs));
      }
    }
  }
  return worst;
}

// Contraction f *_k^l g of kernels of orders n and m: k slots are shared,
// l of those are integrated against the coordinate laws. The result lives on
// ordered tuples of (coordinate, atom) points, slots ordered as
// (shared kept: k - l, free of f: n - k, free of g: m - k).
struct Contraction {
  int k = 0, l = 0, order_f = 0, order_g = 0;
  int arity = 0;                   // k - l + (n - k) + (m - k)
  std::vector<double> values;      // dense over points^arity
  double norm2 = 0.0;              // sum over ordered point tuples, probability weights
};

namespace detail {

struct Point {
  int coord;
  std::size_t atom;
  double weight;
};

inline std::vector<Point> points_of(const OutcomeSpace& space) {
  std::vector<Point> pts;
  for (int i = 0; i < space.n(); ++i) {
    for (std::size_t s = 0; s < space.support(i); ++s) pts.push_back({i, s, space.law(i).prob(s)});
  }
  return pts;
}

inline std::size_t ipow(std::size_t b, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

// Kernel extended to ordered point tuples (zero when coordinates repeat).
inline std::vector<double> dense_kernel(const ChaosKernel& f, const std::vector<Point>& pts) {
  const int d = f.order();
  const std::size_t np = pts.size();
  std::vector<double> out(ipow(np, d), 0.0);
  std::vector<std::size_t> p(d, 0);
  const auto& space = f.space();
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    std::size_t rem = flat;
    for (int s = d; s-- > 0;) {
      p[s] = rem % np;
      rem /= np;
    }
    Subset j = 0;
    bool distinct = true;
    for (int s = 0; s < d; ++s) {
      const Subset bit = Subset{1} << pts[p[s]].coord;
      if (j & bit) distinct = false;
      j |= bit;
    }
    if (!distinct) continue;
    // Local index: atoms ordered by coordinate.
    std::vector<std::size_t> order(p.begin(), p.end());
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return pts[a].coord < pts[b].coord; });
    std::size_t local = 0;
    for (std::size_t q : order) local = local * space.support(pts[q].coord) + pts[q].atom;
    out[flat] = f.at(j, local);
  }
  return out;
}

}  // namespace detail

inline Contraction contract(const ChaosKernel& f, const ChaosKernel& g, int k, int l) {
  const int n = f.order(), m = g.order();
  if (l < 0 || l > k || k > std::min(n, m)) {
    throw InputError("contraction needs 0 <= l <= k <= min(orders)");
  }
  if (!(f.space() == g.space())) throw InputError("contracting kernels on different spaces");
  const auto pts = detail::points_of(f.space());
  const std::size_t np = pts.size();
  const auto df = detail::dense_kernel(f, pts);
  const auto dg = detail::dense_kernel(g, pts);
  Contraction c{k, l, n, m, n + m - k - l, {}, 0.0};
  const int af = n - k, ag = m - k;
  if (detail::ipow(np, c.arity) > (std::size_t{1} << 26)) {
    throw SizeError("contraction tensor too large");
  }
  c.values.assign(detail::ipow(np, c.arity), 0.0);
  const std::size_t neta = detail::ipow(np, l);
  std::vector<double> eta_w(neta, 1.0);
  for (std::size_t e = 0; e < neta; ++e) {
    std::size_t rem = e;
    for (int s = 0; s < l; ++s) {
      eta_w[e] *= pts[rem % np].weight;
      rem /= np;
    }
  }
  const std::size_t s_eta = detail::ipow(np, l);
  const std::size_t s_af = detail::ipow(np, af), s_ag = detail::ipow(np, ag);
  for (std::size_t flat = 0; flat < c.values.size(); ++flat) {
    // flat = ((gamma * np^af) + alpha) * np^ag + beta
    const std::size_t beta = flat % s_ag;
    const std::size_t alpha = (flat / s_ag) % s_af;
    const std::size_t gamma = flat / (s_ag * s_af);
    double acc = 0.0;
    for (std::size_t e = 0; e < neta; ++e) {
      const std::size_t fi = (gamma * s_eta + e) * s_af + alpha;
      const std::size_t gi = (gamma * s_eta + e) * s_ag + beta;
      acc += eta_w[e] * df[fi] * dg[gi];
    }
    c.values[flat] = acc;
  }
  for (std::size_t flat = 0; flat < c.values.size(); ++flat) {
    double w = 1.0;
    std::size_t rem = flat;
    for (int s = 0; s < c.arity; ++s) {
      w *= pts[rem % np].weight;
      rem /= np;
    }
    c.norm2 += w * c.values[flat] * c.values[flat];
  }
  return c;
}

// Chaos decomposition of I_n(f) I_m(g) by the multiplication formula
// sum_k k! C(m,k) C(n,k) sum_i C(k,i) I_{n+m-k-i}(sym(f *_k^i g) 1_Delta).
// Kernels of non-canonical contractions are projected back onto canonical
// kernels (I_r(h) = I_r(canonical part of h)); grades above n vanish.
inline ChaosDecomposition multiply(const ChaosKernel& f, const ChaosKernel& g) {
  const auto& space = f.space();
  const int n = f.order(), m = g.order(), ncoord = space.n();
  const auto pts = detail::points_of(space);
  const std::size_t np = pts.size();
  // Point index of (coordinate, atom).
  std::vector<std::size_t> first(ncoord, 0);
  for (int i = 1; i < ncoord; ++i) first[i] = first[i - 1] + space.support(i - 1);

  double mean = 0.0;
  std::vector<ChaosKernel> h;
  for (int r = 1; r <= ncoord; ++r) h.emplace_back(f.space_ptr(), r);

  for (int k = 0; k <= std::min(n, m); ++k) {
    for (int i = 0; i <= k; ++i) {
      const int r = n + m - k - i;
      if (r > ncoord) continue;
      const double coef = factorial(k) * binomial(m, k) * binomial(n, k) * binomial(k, i);
      const Contraction c = contract(f, g, k, i);
      if (r == 0) {
        mean += coef * c.values[0];
        continue;
      }
      std::vector<int> perm(r);
      for (Subset j : subsets_of_size(space.full(), r)) {
        const auto members = subset_members(j);
        std::vector<double> vals(space.table_size(j), 0.0);
        for (std::size_t cell = 0; cell < vals.size(); ++cell) {
          const auto atoms = space.table_atoms(j, cell);
          std::vector<std::size_t> q(r);
          for (int s = 0; s < r; ++s) q[s] = first[members[s]] + atoms[s];
          std::iota(perm.begin(), perm.end(), 0);
          double acc = 0.0;
          do {
            std::size_t flat = 0;
            for (int s = 0; s < r; ++s) flat = flat * np + q[perm[s]];
            acc += c.values[flat];
          } while (std::next_permutation(perm.begin(), perm.end()));
          vals[cell] = coef * acc / factorial(r);
        }
        ChaosKernel piece(f.space_ptr(), r);
        piece.set(j, std::move(vals));
        h[r - 1] += piece;
      }
    }
  }
  for (auto& kernel : h) kernel = kernel.canonicalized();
  return ChaosDecomposition(f.space_ptr(), mean, std::move(h));
}

// Random canonical kernel of the given order on every subset, entries drawn
// uniformly from [-1, 1] before canonicalisation.
inline ChaosKernel random_kernel(const SpacePtr& space, int order, Stream& rng) {
  ChaosKernel f(space, order);
  for (Subset j : subsets_of_size(space->full(), order)) {
    std::vector<double> v(space->table_size(j));
    for (double& x : v) x = 2.0 * rng.uniform() - 1.0;
    f.set(j, std::move(v));
  }
  return f.canonicalized();
}

}  // namespace bekit
