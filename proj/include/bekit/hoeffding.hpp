#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bekit/error.hpp"
#include "bekit/space.hpp"

namespace bekit {

// Orthogonal expansion X = sum_J W_J with W_J a function of the coordinates
// in J and E[W_J | F_K] = 0 unless J is contained in K. Terms are stored as
// tables over their own coordinates.
class HoeffdingDecomposition {
 public:
  // Entries beyond this count would not fit comfortably in memory.
  static constexpr std::size_t kMaxExpansion = std::size_t{1} << 24;

  HoeffdingDecomposition() = default;
  HoeffdingDecomposition(SpacePtr space, std::map<Subset, Table> terms)
      : space_(std::move(space)), terms_(std::move(terms)) {
    for (const auto& [mask, t] : terms_) {
      if (t.mask != mask || t.values.size() != space_->table_size(mask)) {
        throw InputError("Hoeffding term table does not match its subset");
      }
    }
  }

  const OutcomeSpace& space() const { return *space_; }
  const SpacePtr& space_ptr() const { return space_; }
  const std::map<Subset, Table>& terms() const { return terms_; }

  // Table of W_J; an all-zero table if J carries no stored term.
  Table table(Subset j) const {
    auto it = terms_.find(j);
    if (it != terms_.end()) return it->second;
    return Table{j, std::vector<double>(space_->table_size(j), 0.0)};
  }

  bool has(Subset j) const { return terms_.count(j) != 0; }

  RandomFunctional term(Subset j) const { return expand(space_, table(j)); }

  double mean() const {
    auto it = terms_.find(0);
    return it == terms_.end() ? 0.0 : it->second.values[0];
  }

  // Largest |J| whose term exceeds tol in sup norm (0 if only the mean).
  int max_order(double tol = 1e-12) const {
    int d = 0;
    for (const auto& [mask, t] : terms_) {
      if (sup(t) > tol) d = std::max(d, subset_size(mask));
    }
    return d;
  }

  // Smallest nonempty |J| whose term exceeds tol (0 if none).
  int min_order(double tol = 1e-12) const {
    int d = 0;
    for (const auto& [mask, t] : terms_) {
      if (mask != 0 && sup(t) > tol && (d == 0 || subset_size(mask) < d)) d = subset_size(mask);
    }
    return d;
  }

  // Sum of the terms with |J| = d, on the full grid.
  RandomFunctional grade(int d) const {
    RandomFunctional out(space_);
    for (const auto& [mask, t] : terms_) {
      if (subset_size(mask) != d) continue;
      accumulate(out, t, 1.0);
    }
    return out;
  }

  RandomFunctional reconstruct() const {
    RandomFunctional out(space_);
    for (const auto& [mask, t] : terms_) accumulate(out, t, 1.0);
    return out;
  }

  // Sum over J != {} of E[W_J^2].
  double variance() const {
    double v = 0.0;
    for (const auto& [mask, t] : terms_) {
      if (mask == 0) continue;
      const Table sq = multiply(*space_, t, t);
      v += table_mean(*space_, sq);
    }
    return v;
  }

  static double sup(const Table& t) {
    double m = 0.0;
    for (double v : t.values) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  void accumulate(RandomFunctional& out, const Table& t, double c) const {
    for (std::size_t idx = 0; idx < space_->size(); ++idx) {
      out[idx] += c * t.values[space_->table_index(idx, t.mask)];
    }
  }

  SpacePtr space_;
  std::map<Subset, Table> terms_;
};

// Hoeffding projection of X. Each axis is split into its mean and its
// centred fluctuation; after all axes are processed, the entry whose axes
// are "fluctuation" exactly on J is W_J at the corresponding atoms. This is
// the inclusion-exclusion formula W_J = sum_{K in J} (-1)^{|J|-|K|} E[X|F_K]
// evaluated in O(n * prod(|S_i| + 1)) operations.
inline HoeffdingDecomposition project(const RandomFunctional& x) {
  const OutcomeSpace& space = x.space();
  const int n = space.n();
  if (space.expansion_size() > HoeffdingDecomposition::kMaxExpansion) {
    throw SizeError("Hoeffding expansion needs " + std::to_string(space.expansion_size()) +
                    " entries, above the 2^24 limit");
  }
  std::vector<std::size_t> dims(n);
  for (int i = 0; i < n; ++i) dims[i] = space.support(i);
  std::vector<double> cur(x.values().begin(), x.values().end());
  for (int i = 0; i < n; ++i) {
    std::size_t outer = 1, inner = 1;
    for (int j = 0; j < i; ++j) outer *= dims[j];
    for (int j = i + 1; j < n; ++j) inner *= dims[j];
    const std::size_t s = dims[i];
    const auto& law = space.law(i);
    std::vector<double> next(outer * (s + 1) * inner);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t r = 0; r < inner; ++r) {
        double m = 0.0;
        for (std::size_t a = 0; a < s; ++a) m += law.prob(a) * cur[(o * s + a) * inner + r];
        next[(o * (s + 1)) * inner + r] = m;
        for (std::size_t a = 0; a < s; ++a) {
          next[(o * (s + 1) + a + 1) * inner + r] = cur[(o * s + a) * inner + r] - m;
        }
      }
    }
    dims[i] = s + 1;
    cur = std::move(next);
  }

  std::map<Subset, Table> terms;
  for (Subset j : all_subsets(space.full())) {
    terms.emplace(j, Table{j, std::vector<double>(space.table_size(j))});
  }
  // Walk the expanded array with a multi-index counter.
  std::vector<std::size_t> e(n, 0);
  for (std::size_t flat = 0; flat < cur.size(); ++flat) {
    Subset j = 0;
    std::size_t local = 0;
    for (int i = 0; i < n; ++i) {
      if (e[i] > 0) {
        j |= Subset{1} << i;
        local = local * space.support(i) + (e[i] - 1);
      }
    }
    terms[j].values[local] = cur[flat];
    for (int i = n; i-- > 0;) {
      if (++e[i] < dims[i]) break;
      e[i] = 0;
    }
  }
  return HoeffdingDecomposition(x.space_ptr(), std::move(terms));
}

// Sup-norm of E[W_J | F_K] over all pairs with J not inside K; zero for a
// genuine Hoeffding decomposition.
inline double max_orthogonality_violation(const HoeffdingDecomposition& h) {
  double worst = 0.0;
  const auto& space = h.space();
  for (const auto& [j, t] : h.terms()) {
    if (j == 0) continue;
    // It suffices to integrate out one coordinate of J at a time.
    for (int i : subset_members(j)) {
      const Table m = narrow(space, t, j & ~(Subset{1} << i));
      worst = std::max(worst, HoeffdingDecomposition::sup(m));
    }
  }
  return worst;
}

struct ThmSRate {
  double family_square = 0.0;  // K-sums of E[W_{J+K}^2 | F_J]
  double family_cross = 0.0;   // K-sums of E[W_{J1+K} W_{J2+K} | F_{J1+J2}]
  double family_mixed = 0.0;   // K-sums of E[W_K W_{J+K} | F_J]
  double rate = 0.0;           // sqrt of the sum of the three families
  int order = 0;
  bool normalized = false;     // input was rescaled to mean 0, variance 1
};

// The three conditional-moment families of the general Hoeffding
// Berry-Esseen bound, without the order-dependent constant. The input is
// centred and scaled to unit variance first (flagged in the result).
inline ThmSRate rate_thmS(const HoeffdingDecomposition& h) {
  const OutcomeSpace& space = h.space();
  const double var = h.variance();
  if (!(var > 0.0)) throw DegenerateError("Hoeffding decomposition has zero variance");
  const double scale = 1.0 / std::sqrt(var);
  ThmSRate out;
  out.normalized = std::abs(h.mean()) > 1e-12 || std::abs(var - 1.0) > 1e-12;

  std::map<Subset, Table> w;
  for (const auto& [j, t] : h.terms()) {
    if (j == 0) continue;
    Table s = t;
    for (double& v : s.values) v *= scale;
    w.emplace(j, std::move(s));
  }
  auto term = [&](Subset j) -> const Table* {
    auto it = w.find(j);
    return it == w.end() ? nullptr : &it->second;
  };
  const int d = h.max_order();
  out.order = d;
  const Subset full = space.full();

  auto add_into = [&](Table& acc, const Table& t) {
    for (std::size_t k = 0; k < acc.values.size(); ++k) acc.values[k] += t.values[k];
  };
  auto mean_square = [&](const Table& t) {
    return table_mean(space, multiply(space, t, t));
  };

  for (int i = 1; i <= d; ++i) {
    for (int l = 0; l < i; ++l) {
      const int jsize = i - l;
      for (Subset j : subsets_of_size(full, jsize)) {
        // Square family.
        Table acc{j, std::vector<double>(space.table_size(j), 0.0)};
        for (Subset k : subsets_of_size(full & ~j, l)) {
          const Table* wjk = term(j | k);
          if (!wjk) continue;
          add_into(acc, narrow(space, multiply(space, *wjk, *wjk), j));
        }
        out.family_square += mean_square(acc);
        if (l == 0) continue;
        // Mixed family.
        Table mixed{j, std::vector<double>(space.table_size(j), 0.0)};
        for (Subset k : subsets_of_size(full & ~j, l)) {
          const Table* wk = term(k);
          const Table* wjk = term(j | k);
          if (!wk || !wjk) continue;
          add_into(mixed, narrow(space, multiply(space, *wk, *wjk), j));
        }
        out.family_mixed += mean_square(mixed);
        // Cross family over ordered disjoint pairs (J, J2).
        for (Subset j2 : subsets_of_size(full & ~j, jsize)) {
          const Subset u = j | j2;
          Table cross{u, std::vector<double>(space.table_size(u), 0.0)};
          for (Subset k : subsets_of_size(full & ~u, l)) {
            const Table* a = term(j | k);
            const Table* b = term(j2 | k);
            if (!a || !b) continue;
            add_into(cross, narrow(space, multiply(space, *a, *b), u));
          }
          out.family_cross += mean_square(cross);
        }
      }
    }
  }
  out.rate = std::sqrt(out.family_square + out.family_cross + out.family_mixed);
  return out;
}

struct DegenerateTerms {
  double var_term = 0.0;     // Var[sum_k E[(W - E[W | X_k^c])^2 | X_k^c]]
  double fourth_term = 0.0;  // sum_k E[(W - E[W | X_k^c])^4]
  double bound = 0.0;        // sqrt(var_term) + 24 sqrt(2 fourth_term)
  int order = 0;
};

// Exact terms of the degenerate U-statistic bound for W given on the full grid.
inline DegenerateTerms degenerate_terms(const RandomFunctional& w, int order) {
  const OutcomeSpace& space = w.space();
  DegenerateTerms out;
  out.order = order;
  RandomFunctional inner(w.space_ptr());
  for (int k = 0; k < space.n(); ++k) {
    RandomFunctional dk = w - average_axis(w, k);
    RandomFunctional sq = dk * dk;
    inner += average_axis(sq, k);
    out.fourth_term += (sq * sq).expectation();
  }
  out.var_term = inner.variance();
  out.bound = std::sqrt(out.var_term) + 24.0 * std::sqrt(2.0 * out.fourth_term);
  return out;
}

// Terms of the degenerate U-statistic bound; the decomposition must be of a
// single order d (all other terms vanish within tol).
inline DegenerateTerms rate_degenerate(const HoeffdingDecomposition& h, double tol = 1e-10) {
  const int d = h.max_order(tol);
  if (d == 0) return DegenerateTerms{};
  double scale = 0.0;
  for (const auto& [j, t] : h.terms()) scale = std::max(scale, HoeffdingDecomposition::sup(t));
  for (const auto& [j, t] : h.terms()) {
    if (subset_size(j) != d && HoeffdingDecomposition::sup(t) > tol * (1.0 + scale)) {
      throw DomainError("decomposition mixes orders " + std::to_string(subset_size(j)) +
                        " and " + std::to_string(d));
    }
  }
  return degenerate_terms(h.grade(d), d);
}

}  // namespace bekit
