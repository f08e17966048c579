#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bekit/error.hpp"
#include "bekit/rng.hpp"

namespace bekit {

struct Atom {
  double value;
  double prob;
};

// Finite discrete law. Atoms are kept sorted by value with distinct values
// and strictly positive probabilities summing to one.
class Distribution {
 public:
  enum class Tag { kFinite, kRademacher };

  static constexpr double kSumTolerance = 1e-12;

  static Distribution finite(std::vector<Atom> atoms) {
    if (atoms.empty()) throw InputError("distribution needs at least one atom");
    double total = 0.0;
    for (const Atom& a : atoms) {
      if (!std::isfinite(a.value) || !std::isfinite(a.prob)) {
        throw InputError("distribution atoms must be finite");
      }
      if (a.prob <= 0.0) {
        throw InputError("atom probabilities must be strictly positive");
      }
      total += a.prob;
    }
    if (std::abs(total - 1.0) > kSumTolerance) {
      throw InputError("atom probabilities sum to " + std::to_string(total) +
                       ", expected 1");
    }
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& x, const Atom& y) { return x.value < y.value; });
    std::vector<Atom> merged;
    merged.reserve(atoms.size());
    for (const Atom& a : atoms) {
      if (!merged.empty() && merged.back().value == a.value) {
        merged.back().prob += a.prob;
      } else {
        merged.push_back(a);
      }
    }
    return Distribution(std::move(merged), Tag::kFinite);
  }

  static Distribution rademacher() {
    return Distribution({{-1.0, 0.5}, {1.0, 0.5}}, Tag::kRademacher);
  }

  static Distribution point(double value) {
    return finite({{value, 1.0}});
  }

  std::span<const Atom> atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  double value(std::size_t i) const { return atoms_[i].value; }
  double prob(std::size_t i) const { return atoms_[i].prob; }
  Tag tag() const { return tag_; }

  template <class F>
  double expect(F&& f) const {
    double acc = 0.0;
    for (const Atom& a : atoms_) acc += a.prob * f(a.value);
    return acc;
  }

  double mean() const {
    return expect([](double x) { return x; });
  }

  // Index of the atom selected by u in [0, 1) under inverse-CDF sampling.
  std::size_t quantile_index(double u) const {
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) return atoms_.size() - 1;
    return static_cast<std::size_t>(it - cdf_.begin());
  }

  friend bool operator==(const Distribution& a, const Distribution& b) {
    if (a.atoms_.size() != b.atoms_.size()) return false;
    for (std::size_t i = 0; i < a.atoms_.size(); ++i) {
      if (a.atoms_[i].value != b.atoms_[i].value ||
          a.atoms_[i].prob != b.atoms_[i].prob) {
        return false;
      }
    }
    return true;
  }

 private:
  Distribution(std::vector<Atom> atoms, Tag tag)
      : atoms_(std::move(atoms)), tag_(tag) {
    cdf_.reserve(atoms_.size());
    double c = 0.0;
    for (const Atom& a : atoms_) {
      c += a.prob;
      cdf_.push_back(c);
    }
  }

  std::vector<Atom> atoms_;
  std::vector<double> cdf_;
  Tag tag_;
};

// Raw moments mu_k = E[X^k] for k <= 8, the centred-square moments
// mu~_k = E[(X^2 - mu_2)^{k/2}] for even k in {4, 6, 8}, and E|X|^3.
struct MomentTable {
  std::array<double, 9> mu{};  // mu[0] = 1
  double mu_tilde4 = 0.0;
  double mu_tilde6 = 0.0;
  double mu_tilde8 = 0.0;
  double abs3 = 0.0;

  double mu_tilde(int k) const {
    switch (k) {
      case 4: return mu_tilde4;
      case 6: return mu_tilde6;
      case 8: return mu_tilde8;
      default: throw DomainError("mu_tilde is defined for k in {4, 6, 8}");
    }
  }
};

inline MomentTable moments(const Distribution& d) {
  MomentTable m;
  for (int k = 0; k <= 8; ++k) {
    m.mu[k] = d.expect([k](double x) { return std::pow(x, k); });
  }
  const double mu2 = m.mu[2];
  auto centred_sq = [&](int power) {
    return d.expect([&](double x) { return std::pow(x * x - mu2, power); });
  };
  m.mu_tilde4 = centred_sq(2);
  m.mu_tilde6 = centred_sq(3);
  m.mu_tilde8 = centred_sq(4);
  m.abs3 = d.expect([](double x) { return std::abs(x * x * x); });
  return m;
}

inline Distribution center(const Distribution& d) {
  const double shift = d.mean();
  if (shift == 0.0) return d;
  std::vector<Atom> atoms(d.atoms().begin(), d.atoms().end());
  for (Atom& a : atoms) a.value -= shift;
  return Distribution::finite(std::move(atoms));
}

inline std::size_t sample_index(const Distribution& d, Stream& rng) {
  return d.quantile_index(rng.uniform());
}

inline double sample(const Distribution& d, Stream& rng) {
  return d.value(sample_index(d, rng));
}

}  // namespace bekit
