#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bekit/dist.hpp"
#include "bekit/error.hpp"

namespace bekit {

// Subsets of coordinates are bit masks: bit i set <=> coordinate i in J.
using Subset = std::uint32_t;

inline int subset_size(Subset s) { return std::popcount(s); }

inline std::vector<int> subset_members(Subset s) {
  std::vector<int> out;
  for (int i = 0; s != 0; ++i, s >>= 1) {
    if (s & 1U) out.push_back(i);
  }
  return out;
}

inline Subset subset_of(std::span<const int> members) {
  Subset s = 0;
  for (int i : members) s |= Subset{1} << i;
  return s;
}

// All subsets of `universe` with exactly k elements, in increasing mask order.
inline std::vector<Subset> subsets_of_size(Subset universe, int k) {
  std::vector<Subset> out;
  if (k < 0 || k > subset_size(universe)) return out;
  // Enumerate submasks; universes here have at most ~20 bits.
  for (Subset s = universe;; s = (s - 1) & universe) {
    if (subset_size(s) == k) out.push_back(s);
    if (s == 0) break;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

inline std::vector<Subset> all_subsets(Subset universe) {
  std::vector<Subset> out;
  for (Subset s = universe;; s = (s - 1) & universe) {
    out.push_back(s);
    if (s == 0) break;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

// Product of n independent finite laws. Outcomes are enumerated
// lexicographically in atom indices, coordinate 0 most significant.
class OutcomeSpace {
 public:
  static constexpr std::size_t kMaxOutcomes = std::size_t{1} << 18;
  static constexpr int kMaxCoordinates = 30;

  explicit OutcomeSpace(std::vector<Distribution> laws) : laws_(std::move(laws)) {
    if (laws_.empty()) throw InputError("outcome space needs at least one coordinate");
    if (static_cast<int>(laws_.size()) > kMaxCoordinates) {
      throw SizeError("outcome space supports at most 30 coordinates");
    }
    const std::size_t n = laws_.size();
    strides_.assign(n, 1);
    std::size_t total = 1;
    for (std::size_t i = n; i-- > 0;) {
      strides_[i] = total;
      total *= laws_[i].size();
      if (total > kMaxOutcomes) {
        throw SizeError("outcome space exceeds 2^18 outcomes");
      }
    }
    size_ = total;
    probs_.assign(size_, 1.0);
    for (std::size_t idx = 0; idx < size_; ++idx) {
      double p = 1.0;
      for (std::size_t i = 0; i < n; ++i) p *= laws_[i].prob(atom_index(idx, static_cast<int>(i)));
      probs_[idx] = p;
    }
  }

  static std::shared_ptr<const OutcomeSpace> iid(const Distribution& law, int n) {
    return std::make_shared<const OutcomeSpace>(std::vector<Distribution>(n, law));
  }

  static std::shared_ptr<const OutcomeSpace> make(std::vector<Distribution> laws) {
    return std::make_shared<const OutcomeSpace>(std::move(laws));
  }

  int n() const { return static_cast<int>(laws_.size()); }
  std::size_t size() const { return size_; }
  Subset full() const { return n() == 32 ? ~Subset{0} : (Subset{1} << n()) - 1; }

  const Distribution& law(int i) const { return laws_[i]; }
  std::span<const Distribution> laws() const { return laws_; }
  std::size_t support(int i) const { return laws_[i].size(); }
  std::size_t stride(int i) const { return strides_[i]; }

  double prob(std::size_t idx) const { return probs_[idx]; }
  std::span<const double> probs() const { return probs_; }

  std::size_t atom_index(std::size_t idx, int i) const {
    return (idx / strides_[i]) % laws_[i].size();
  }

  double value(std::size_t idx, int i) const {
    return laws_[i].value(atom_index(idx, i));
  }

  // Outcome idx with coordinate i replaced by atom t.
  std::size_t with_coordinate(std::size_t idx, int i, std::size_t t) const {
    const std::size_t cur = atom_index(idx, i);
    return idx - cur * strides_[i] + t * strides_[i];
  }

  // Atom values of outcome idx, one per coordinate.
  void values(std::size_t idx, std::span<double> out) const {
    for (int i = 0; i < n(); ++i) out[i] = value(idx, i);
  }

  // Number of cells of the marginal product space over the coordinates in J.
  std::size_t table_size(Subset j) const {
    std::size_t s = 1;
    for (int i : subset_members(j)) s *= laws_[i].size();
    return s;
  }

  // Sum over J of table_size(J); storage needed by a full Hoeffding expansion.
  std::size_t expansion_size() const {
    std::size_t s = 1;
    for (const auto& l : laws_) s *= (l.size() + 1);
    return s;
  }

  // Index of outcome idx's restriction to J inside a table over J.
  std::size_t table_index(std::size_t idx, Subset j) const {
    std::size_t local = 0;
    for (int i = 0; i < n(); ++i) {
      if (j & (Subset{1} << i)) local = local * laws_[i].size() + atom_index(idx, i);
    }
    return local;
  }

  // Probability of a cell of a table over J.
  double table_prob(Subset j, std::size_t local) const {
    const auto members = subset_members(j);
    double p = 1.0;
    for (std::size_t m = members.size(); m-- > 0;) {
      const auto& law = laws_[members[m]];
      p *= law.prob(local % law.size());
      local /= law.size();
    }
    return p;
  }

  // Atom indices (one per member of J, increasing coordinate order) of a cell.
  std::vector<std::size_t> table_atoms(Subset j, std::size_t local) const {
    const auto members = subset_members(j);
    std::vector<std::size_t> atoms(members.size());
    for (std::size_t m = members.size(); m-- > 0;) {
      const auto sz = laws_[members[m]].size();
      atoms[m] = local % sz;
      local /= sz;
    }
    return atoms;
  }

  friend bool operator==(const OutcomeSpace& a, const OutcomeSpace& b) {
    return a.laws_ == b.laws_;
  }

 private:
  std::vector<Distribution> laws_;
  std::vector<std::size_t> strides_;
  std::vector<double> probs_;
  std::size_t size_ = 0;
};

using SpacePtr = std::shared_ptr<const OutcomeSpace>;

// Real function on an outcome space, stored densely in enumeration order.
class RandomFunctional {
 public:
  RandomFunctional() = default;
  explicit RandomFunctional(SpacePtr space)
      : space_(std::move(space)), values_(space_->size(), 0.0) {}
  RandomFunctional(SpacePtr space, std::vector<double> values)
      : space_(std::move(space)), values_(std::move(values)) {
    if (values_.size() != space_->size()) {
      throw InputError("functional has " + std::to_string(values_.size()) +
                       " values for a space of " + std::to_string(space_->size()) +
                       " outcomes");
    }
  }

  static RandomFunctional constant(SpacePtr space, double c) {
    RandomFunctional f(std::move(space));
    std::fill(f.values_.begin(), f.values_.end(), c);
    return f;
  }

  // Coordinate i as a functional (X_i).
  static RandomFunctional coordinate(SpacePtr space, int i) {
    RandomFunctional f(space);
    for (std::size_t idx = 0; idx < space->size(); ++idx) f.values_[idx] = space->value(idx, i);
    return f;
  }

  // f(x_0, ..., x_{n-1}) evaluated at every outcome.
  template <class F>
  static RandomFunctional from(SpacePtr space, F&& fn) {
    RandomFunctional out(space);
    std::vector<double> x(space->n());
    for (std::size_t idx = 0; idx < space->size(); ++idx) {
      space->values(idx, x);
      out.values_[idx] = fn(std::span<const double>(x));
    }
    return out;
  }

  const OutcomeSpace& space() const { return *space_; }
  const SpacePtr& space_ptr() const { return space_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t idx) const { return values_[idx]; }
  double& operator[](std::size_t idx) { return values_[idx]; }

  double expectation() const {
    double acc = 0.0;
    const auto p = space_->probs();
    for (std::size_t i = 0; i < values_.size(); ++i) acc += p[i] * values_[i];
    return acc;
  }

  double moment(int k) const {
    double acc = 0.0;
    const auto p = space_->probs();
    for (std::size_t i = 0; i < values_.size(); ++i) acc += p[i] * std::pow(values_[i], k);
    return acc;
  }

  double variance() const {
    const double m = expectation();
    double acc = 0.0;
    const auto p = space_->probs();
    for (std::size_t i = 0; i < values_.size(); ++i) {
      const double d = values_[i] - m;
      acc += p[i] * d * d;
    }
    return acc;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  template <class F>
  RandomFunctional map(F&& fn) const {
    RandomFunctional out(*this);
    for (double& v : out.values_) v = fn(v);
    return out;
  }

  RandomFunctional& operator+=(const RandomFunctional& o) {
    check_same(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  RandomFunctional& operator-=(const RandomFunctional& o) {
    check_same(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  RandomFunctional& operator*=(const RandomFunctional& o) {
    check_same(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] *= o.values_[i];
    return *this;
  }
  RandomFunctional& operator*=(double c) {
    for (double& v : values_) v *= c;
    return *this;
  }
  RandomFunctional& operator+=(double c) {
    for (double& v : values_) v += c;
    return *this;
  }

  friend RandomFunctional operator+(RandomFunctional a, const RandomFunctional& b) { return a += b; }
  friend RandomFunctional operator-(RandomFunctional a, const RandomFunctional& b) { return a -= b; }
  friend RandomFunctional operator*(RandomFunctional a, const RandomFunctional& b) { return a *= b; }
  friend RandomFunctional operator*(RandomFunctional a, double c) { return a *= c; }
  friend RandomFunctional operator*(double c, RandomFunctional a) { return a *= c; }
  friend RandomFunctional operator+(RandomFunctional a, double c) { return a += c; }
  friend RandomFunctional operator-(RandomFunctional a, double c) { return a += -c; }

 private:
  void check_same(const RandomFunctional& o) const {
    if (space_ != o.space_ && !(*space_ == *o.space_)) {
      throw InputError("functionals live on different outcome spaces");
    }
  }

  SpacePtr space_;
  std::vector<double> values_;
};

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// E over coordinate i, written back on the full grid: out(w) = sum_s nu_i(s) x(w[i->s]).
inline std::vector<double> average_axis(const OutcomeSpace& space, std::span<const double> x, int i) {
  std::vector<double> out(x.size());
  const std::size_t stride = space.stride(i);
  const std::size_t sz = space.support(i);
  const std::size_t block = stride * sz;
  const auto& law = space.law(i);
  for (std::size_t base = 0; base < x.size(); base += block) {
    for (std::size_t r = 0; r < stride; ++r) {
      double acc = 0.0;
      for (std::size_t s = 0; s < sz; ++s) acc += law.prob(s) * x[base + r + s * stride];
      for (std::size_t s = 0; s < sz; ++s) out[base + r + s * stride] = acc;
    }
  }
  return out;
}

inline RandomFunctional average_axis(const RandomFunctional& x, int i) {
  return RandomFunctional(x.space_ptr(), average_axis(x.space(), x.values(), i));
}

// E[X | F_J] on the full grid.
inline RandomFunctional conditional_expectation(const RandomFunctional& x, Subset j) {
  std::vector<double> v(x.values().begin(), x.values().end());
  for (int i = 0; i < x.space().n(); ++i) {
    if (!(j & (Subset{1} << i))) v = average_axis(x.space(), v, i);
  }
  return RandomFunctional(x.space_ptr(), std::move(v));
}

// Dense array over the product of the supports of the coordinates in `mask`,
// row-major with the lowest coordinate most significant.
struct Table {
  Subset mask = 0;
  std::vector<double> values;
};

// Broadcast a table over J up to the full outcome grid.
inline RandomFunctional expand(const SpacePtr& space, const Table& t) {
  RandomFunctional out(space);
  for (std::size_t idx = 0; idx < space->size(); ++idx) {
    out[idx] = t.values[space->table_index(idx, t.mask)];
  }
  return out;
}

// Restriction of a functional that only depends on coordinates J to a table.
// No check is made that the functional is in fact F_J-measurable.
inline Table restrict_to(const RandomFunctional& x, Subset j) {
  const auto& space = x.space();
  Table t{j, std::vector<double>(space.table_size(j), 0.0)};
  std::vector<char> seen(t.values.size(), 0);
  for (std::size_t idx = 0; idx < space.size(); ++idx) {
    const std::size_t local = space.table_index(idx, j);
    if (!seen[local]) {
      t.values[local] = x[idx];
      seen[local] = 1;
    }
  }
  return t;
}

// E[X | F_J] as a table over J.
inline Table marginal_table(const RandomFunctional& x, Subset j) {
  const auto& space = x.space();
  Table t{j, std::vector<double>(space.table_size(j), 0.0)};
  std::vector<double> mass(t.values.size(), 0.0);
  for (std::size_t idx = 0; idx < space.size(); ++idx) {
    const std::size_t local = space.table_index(idx, j);
    t.values[local] += space.prob(idx) * x[idx];
    mass[local] += space.prob(idx);
  }
  for (std::size_t k = 0; k < t.values.size(); ++k) t.values[k] /= mass[k];
  return t;
}

namespace detail {

// Map a cell of a table over `to` onto the cell of a table over `from`
// (from must be a subset of to) sharing the same coordinates.
inline std::size_t project_cell(const OutcomeSpace& space, Subset to, std::size_t local_to,
                                Subset from) {
  const auto members = subset_members(to);
  std::vector<std::size_t> atoms(members.size());
  for (std::size_t m = members.size(); m-- > 0;) {
    const auto sz = space.support(members[m]);
    atoms[m] = local_to % sz;
    local_to /= sz;
  }
  std::size_t out = 0;
  for (std::size_t m = 0; m < members.size(); ++m) {
    if (from & (Subset{1} << members[m])) out = out * space.support(members[m]) + atoms[m];
  }
  return out;
}

}  // namespace detail

// Table over J broadcast to a table over a superset U.
inline Table widen(const OutcomeSpace& space, const Table& t, Subset u) {
  Table out{u, std::vector<double>(space.table_size(u))};
  for (std::size_t k = 0; k < out.values.size(); ++k) {
    out.values[k] = t.values[detail::project_cell(space, u, k, t.mask)];
  }
  return out;
}

// Conditional expectation of a table over U onto the coordinates J (subset of U).
inline Table narrow(const OutcomeSpace& space, const Table& t, Subset j) {
  Table out{j, std::vector<double>(space.table_size(j), 0.0)};
  const Subset drop = t.mask & ~j;
  for (std::size_t k = 0; k < t.values.size(); ++k) {
    const std::size_t target = detail::project_cell(space, t.mask, k, j);
    const std::size_t dropped = detail::project_cell(space, t.mask, k, drop);
    out.values[target] += space.table_prob(drop, dropped) * t.values[k];
  }
  return out;
}

// Pointwise product on the union of the two supports.
inline Table multiply(const OutcomeSpace& space, const Table& a, const Table& b) {
  const Subset u = a.mask | b.mask;
  Table wa = widen(space, a, u);
  const Table wb = widen(space, b, u);
  for (std::size_t k = 0; k < wa.values.size(); ++k) wa.values[k] *= wb.values[k];
  return wa;
}

inline double table_mean(const OutcomeSpace& space, const Table& t) {
  double acc = 0.0;
  for (std::size_t k = 0; k < t.values.size(); ++k) acc += space.table_prob(t.mask, k) * t.values[k];
  return acc;
}

}  // namespace bekit
