#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bekit/chaos.hpp"
#include "bekit/dist.hpp"
#include "bekit/error.hpp"
#include "bekit/rng.hpp"
#include "bekit/space.hpp"

namespace bekit {

// Symmetric weights w(k_1, ..., k_d) vanishing on diagonals, stored once per
// sorted d-subset of {0, ..., n-1}.
class WeightTensor {
 public:
  WeightTensor() = default;
  WeightTensor(int n, int d) : n_(n), d_(d) {
    if (d < 1 || d > n) throw InputError("weight order must satisfy 1 <= d <= n");
    if (n > 30) throw SizeError("weight tensors support at most 30 indices");
  }

  int n() const { return n_; }
  int d() const { return d_; }
  const std::map<Subset, double>& values() const { return w_; }

  void set(const std::vector<int>& indices, double v) {
    if (static_cast<int>(indices.size()) != d_) {
      throw InputError("weight index tuple has " + std::to_string(indices.size()) +
                       " entries, expected " + std::to_string(d_));
    }
    Subset s = 0;
    for (int i : indices) {
      if (i < 0 || i >= n_) throw InputError("weight index " + std::to_string(i) + " out of range");
      if (s & (Subset{1} << i)) throw InputError("weights vanish on diagonals; repeated index");
      s |= Subset{1} << i;
    }
    if (!std::isfinite(v)) throw InputError("weights must be finite");
    w_[s] = v;
  }

  double at(Subset s) const {
    auto it = w_.find(s);
    return it == w_.end() ? 0.0 : it->second;
  }

  // Sum over sorted subsets of w^2.
  double subset_square_sum() const {
    double s = 0.0;
    for (const auto& [k, v] : w_) s += v * v;
    return s;
  }

  // Weights w(i, j) = a_ij (i < j) of a zero-diagonal symmetric array.
  static WeightTensor from_pairs(const std::vector<std::vector<double>>& a) {
    const int n = static_cast<int>(a.size());
    WeightTensor w(n, 2);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (a[i][j] != 0.0) w.set({i, j}, a[i][j]);
      }
    }
    return w;
  }

  // Full symmetric tensor over ordered tuples, n^d entries, zero on diagonals.
  std::vector<double> dense() const {
    std::size_t total = 1;
    for (int i = 0; i < d_; ++i) {
      total *= static_cast<std::size_t>(n_);
      if (total > (std::size_t{1} << 24)) throw SizeError("dense weight tensor above 2^24 entries");
    }
    std::vector<double> out(total, 0.0);
    std::vector<int> idx(d_, 0);
    for (std::size_t flat = 0; flat < total; ++flat) {
      std::size_t rem = flat;
      Subset s = 0;
      bool distinct = true;
      for (int k = d_; k-- > 0;) {
        idx[k] = static_cast<int>(rem % n_);
        rem /= n_;
        const Subset bit = Subset{1} << idx[k];
        if (s & bit) distinct = false;
        s |= bit;
      }
      if (distinct) out[flat] = at(s);
    }
    return out;
  }

 private:
  int n_ = 0;
  int d_ = 0;
  std::map<Subset, double> w_;
};

// Kernel g tabulated on support(nu)^d, row-major with the first argument most
// significant.
class UKernel {
 public:
  UKernel() = default;
  UKernel(Distribution law, int d, std::vector<double> table)
      : law_(std::move(law)), d_(d), table_(std::move(table)) {
    std::size_t expected = 1;
    for (int i = 0; i < d_; ++i) expected *= law_.size();
    if (d_ < 1) throw InputError("kernel order must be positive");
    if (table_.size() != expected) {
      throw InputError("kernel table has " + std::to_string(table_.size()) + " entries, expected " +
                       std::to_string(expected));
    }
    for (double v : table_) {
      if (!std::isfinite(v)) throw InputError("kernel entries must be finite");
    }
  }

  // g(x_1, ..., x_d) = prod_i phi(x_i).
  static UKernel product(const Distribution& law, int d, const std::function<double(double)>& phi) {
    const std::size_t s = law.size();
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) total *= s;
    std::vector<double> t(total);
    for (std::size_t flat = 0; flat < total; ++flat) {
      std::size_t rem = flat;
      double v = 1.0;
      for (int k = 0; k < d; ++k) {
        v *= phi(law.value(rem % s));
        rem /= s;
      }
      t[flat] = v;
    }
    return UKernel(law, d, std::move(t));
  }

  // g(x_1, ..., x_d) = x_1 ... x_d.
  static UKernel identity_product(const Distribution& law, int d) {
    return product(law, d, [](double x) { return x; });
  }

  const Distribution& law() const { return law_; }
  int d() const { return d_; }
  const std::vector<double>& table() const { return table_; }

  double operator()(std::span<const std::size_t> atoms) const {
    std::size_t flat = 0;
    for (int k = 0; k < d_; ++k) flat = flat * law_.size() + atoms[k];
    return table_[flat];
  }

  bool symmetric(double tol = 1e-12) const {
    const std::size_t s = law_.size();
    std::vector<std::size_t> idx(d_);
    for (std::size_t flat = 0; flat < table_.size(); ++flat) {
      std::size_t rem = flat;
      for (int k = d_; k-- > 0;) {
        idx[k] = rem % s;
        rem /= s;
      }
      for (int k = 0; k + 1 < d_; ++k) {
        std::swap(idx[k], idx[k + 1]);
        if (std::abs((*this)(idx) - table_[flat]) > tol) return false;
        std::swap(idx[k], idx[k + 1]);
      }
    }
    return true;
  }

  // E over nu^d of g^p.
  double moment(int p) const {
    const std::size_t s = law_.size();
    double acc = 0.0;
    for (std::size_t flat = 0; flat < table_.size(); ++flat) {
      std::size_t rem = flat;
      double w = 1.0;
      for (int k = 0; k < d_; ++k) {
        w *= law_.prob(rem % s);
        rem /= s;
      }
      acc += w * std::pow(table_[flat], p);
    }
    return acc;
  }

  // Largest |E_{x_k ~ nu}[g(..., x_k, ...)]| over slots k and the remaining arguments.
  double max_degeneracy_violation() const {
    const std::size_t s = law_.size();
    std::size_t stride = 1;
    double worst = 0.0;
    for (int k = d_; k-- > 0;) {
      for (std::size_t flat = 0; flat < table_.size(); ++flat) {
        if ((flat / stride) % s != 0) continue;
        double acc = 0.0;
        for (std::size_t a = 0; a < s; ++a) acc += law_.prob(a) * table_[flat + a * stride];
        worst = std::max(worst, std::abs(acc));
      }
      stride *= s;
    }
    return worst;
  }

  // Per-slot centring: the canonical part of g.
  UKernel canonicalized() const {
    UKernel out(*this);
    const std::size_t s = law_.size();
    std::size_t stride = 1;
    for (int k = d_; k-- > 0;) {
      for (std::size_t flat = 0; flat < table_.size(); ++flat) {
        if ((flat / stride) % s != 0) continue;
        double acc = 0.0;
        for (std::size_t a = 0; a < s; ++a) acc += law_.prob(a) * out.table_[flat + a * stride];
        for (std::size_t a = 0; a < s; ++a) out.table_[flat + a * stride] -= acc;
      }
      stride *= s;
    }
    return out;
  }

 private:
  Distribution law_ = Distribution::point(0.0);
  int d_ = 0;
  std::vector<double> table_;
};

struct UStatRate {
  double norm_ratio = 0.0;            // ||g||_{L^4}^2 / ||g||_{L^2}^2
  std::vector<double> weight_terms;   // per l = 1..d-1
  double weight_factor = 0.0;         // sup over l
  double rate = 0.0;                  // norm_ratio * weight_factor
};

inline void require_degenerate(const UKernel& g, double tol = 1e-10) {
  const double v = g.max_degeneracy_violation();
  if (v > tol) {
    throw DomainError("kernel is not degenerate: slot average reaches " + std::to_string(v));
  }
}

// Constant-free rate of the weighted degenerate U-statistic bound.
inline UStatRate ustat_rate(const WeightTensor& w, const UKernel& g) {
  const int d = w.d(), n = w.n();
  if (d < 2) throw DomainError("the weighted U-statistic rate needs d >= 2");
  if (g.d() != d) throw InputError("kernel order does not match the weights");
  require_degenerate(g);
  const double denom = factorial(d) * w.subset_square_sum();
  if (!(denom > 0.0)) throw DegenerateError("weights vanish identically");
  const double g2 = g.moment(2);
  if (!(g2 > 0.0)) throw DegenerateError("kernel vanishes identically");

  UStatRate out;
  out.norm_ratio = std::sqrt(g.moment(4)) / g2;
  const std::vector<double> dense = w.dense();
  for (int l = 1; l <= d - 1; ++l) {
    // M is n^{d-l} x n^l; ||M M^T||_F = ||M^T M||_F, use the smaller Gram matrix.
    std::size_t rows = 1, cols = 1;
    for (int i = 0; i < d - l; ++i) rows *= n;
    for (int i = 0; i < l; ++i) cols *= n;
    const bool by_cols = cols <= rows;
    const std::size_t g_dim = by_cols ? cols : rows;
    std::vector<double> gram(g_dim * g_dim, 0.0);
    if (by_cols) {
      for (std::size_t r = 0; r < rows; ++r) {
        const double* row = dense.data() + r * cols;
        for (std::size_t a = 0; a < cols; ++a) {
          if (row[a] == 0.0) continue;
          for (std::size_t b = 0; b < cols; ++b) gram[a * cols + b] += row[a] * row[b];
        }
      }
    } else {
      for (std::size_t a = 0; a < rows; ++a) {
        for (std::size_t b = a; b < rows; ++b) {
          double s = 0.0;
          for (std::size_t c = 0; c < cols; ++c) s += dense[a * cols + c] * dense[b * cols + c];
          gram[a * rows + b] = gram[b * rows + a] = s;
        }
      }
    }
    double f2 = 0.0;
    for (double v : gram) f2 += v * v;
    out.weight_terms.push_back(std::sqrt(f2) / denom);
  }
  out.weight_factor = *std::max_element(out.weight_terms.begin(), out.weight_terms.end());
  out.rate = out.norm_ratio * out.weight_factor;
  return out;
}

// Var[U_{n,d}] = C(n,d)^{-2} E[g^2] sum_{subsets} w^2 for a degenerate kernel.
inline double ustat_variance(const WeightTensor& w, const UKernel& g) {
  const double c = binomial(w.n(), w.d());
  return g.moment(2) * w.subset_square_sum() / (c * c);
}

// U_{n,d} for given atom indices of X_1..X_n.
inline double ustat_value(const WeightTensor& w, const UKernel& g,
                          std::span<const std::size_t> atoms) {
  double s = 0.0;
  std::vector<std::size_t> args(w.d());
  for (const auto& [subset, v] : w.values()) {
    int k = 0;
    for (int i : subset_members(subset)) args[k++] = atoms[i];
    s += v * g(args);
  }
  return s / binomial(w.n(), w.d());
}

// One draw of U_{n,d}.
inline double ustat_sample(const WeightTensor& w, const UKernel& g, Stream& rng) {
  std::vector<std::size_t> atoms(w.n());
  for (auto& a : atoms) a = sample_index(g.law(), rng);
  return ustat_value(w, g, atoms);
}

// U_{n,d} on the full product space of nu (exact enumeration).
inline RandomFunctional ustat_functional(const WeightTensor& w, const UKernel& g) {
  const auto space = OutcomeSpace::iid(g.law(), w.n());
  RandomFunctional out(space);
  std::vector<std::size_t> atoms(w.n());
  for (std::size_t idx = 0; idx < space->size(); ++idx) {
    for (int i = 0; i < w.n(); ++i) atoms[i] = space->atom_index(idx, i);
    out[idx] = ustat_value(w, g, atoms);
  }
  return out;
}

}  // namespace bekit
