#pragma once

#include <cmath>
#include <numbers>

#include "bekit/chaos.hpp"
#include "bekit/error.hpp"
#include "bekit/hoeffding.hpp"
#include "bekit/space.hpp"

namespace bekit {

// Integrals over the time axis are realised coordinate-wise: a full integral
// of h becomes sum_k 2 E_{t ~ nu_k}[h(k, t)] and an integral against dt/2
// becomes sum_k E_{t ~ nu_k}[h(k, t)].
inline constexpr double kFullIntegralWeight = 2.0;
inline constexpr double kHalfIntegralWeight = 1.0;

struct FourthMomentBound {
  double fourth_moment = 0.0;   // E[X^4]
  double l2_term = 0.0;         // E[(int (grad X)^2 dt)^2]
  double l4_term = 0.0;         // E[int (grad X)^4 dt]
  double second_moment = 0.0;   // E[X^2]
  double rhs = 0.0;             // 36 l2 + 15 l4 + 2 (E X^2)^2
  bool holds() const { return fourth_moment <= rhs; }
};

inline FourthMomentBound fourth_moment_bound(const RandomFunctional& x) {
  const DiscreteGradient g = gradient(x);
  FourthMomentBound b;
  b.fourth_moment = x.moment(4);
  b.second_moment = x.moment(2);
  const RandomFunctional l2 = g.block_sum([](double v) { return v * v; }, kFullIntegralWeight);
  b.l2_term = (l2 * l2).expectation();
  b.l4_term = g.block_sum([](double v) { return v * v * v * v; }, kFullIntegralWeight).expectation();
  b.rhs = 36.0 * b.l2_term + 15.0 * b.l4_term + 2.0 * b.second_moment * b.second_moment;
  return b;
}

// The four terms of the general Kolmogorov bound for a centred X.
struct MasterBound {
  double variance_gap = 0.0;    // |1 - E X^2|
  double covariance_term = 0.0; // sqrt Var[int grad X grad L^{-1} X dt/2]
  double gradient_term = 0.0;   // 3/2 sqrt(E int (grad X)^4) (... + sqrt(pi)/2 ...)
  double operator_term = 0.0;   // 4 (E int ((I + 2(-L)^{1/2}) ...)^2 ...)^{1/4}
  double total = 0.0;
};

inline MasterBound master_bound(const RandomFunctional& x) {
  if (std::abs(x.expectation()) > 1e-12 * (1.0 + x.max_abs())) {
    throw DomainError("the Kolmogorov bound needs a centred functional");
  }
  const RandomFunctional inv = apply_L_power(x, -1.0);  // -L^{-1} X
  const DiscreteGradient gx = gradient(x);
  const DiscreteGradient gi = gradient(inv);
  const auto& space = x.space();
  MasterBound b;
  b.variance_gap = std::abs(1.0 - x.moment(2));
  b.covariance_term = std::sqrt(block_inner(gx, gi, kHalfIntegralWeight).variance());

  const double grad4 =
      gx.block_sum([](double v) { return v * v * v * v; }, kFullIntegralWeight).expectation();
  const RandomFunctional inv_l2 = gi.block_sum([](double v) { return v * v; }, kFullIntegralWeight);
  const double half = apply_L_power(x, -0.5).moment(2);
  b.gradient_term = 1.5 * std::sqrt(grad4) *
                    (std::pow(x.moment(4) * (inv_l2 * inv_l2).expectation(), 0.25) +
                     0.5 * std::sqrt(std::numbers::pi) * std::sqrt(half));

  // E int ((I + 2(-L)^{1/2}) (grad . )^2)^2 dt for both gradients.
  auto operator_norm = [&](const DiscreteGradient& g) {
    double acc = 0.0;
    for (int k = 0; k < space.n(); ++k) {
      for (std::size_t t = 0; t < space.support(k); ++t) {
        const RandomFunctional sq = g.at(k, t) * g.at(k, t);
        const RandomFunctional y = sq + apply_L_power(sq, 0.5) * 2.0;
        acc += kFullIntegralWeight * space.law(k).prob(t) * y.moment(2);
      }
    }
    return acc;
  };
  b.operator_term = 4.0 * std::pow(operator_norm(gx) * operator_norm(gi), 0.25);
  b.total = b.variance_gap + b.covariance_term + b.gradient_term + b.operator_term;
  return b;
}

// The two displayed bounds for a single multiple integral X = I_d(f).
struct SingleChaosBound {
  int order = 0;
  double variance_gap = 0.0;   // |1 - E X^2|
  double sd_term = 0.0;        // sqrt Var[int (grad X)^2 dt/2]
  double grad4 = 0.0;          // E int (grad X)^4 dt
  double fourth_moment = 0.0;  // E X^4
  double first = 0.0;          // gap + sd/d + (12 + 5 (E X^4)^{1/4}) / sqrt d * sqrt(grad4)
  double second = 0.0;         // gap + sd + 24 sqrt(grad4)
};

inline SingleChaosBound single_chaos_bound(const RandomFunctional& x, int order) {
  if (order < 1) throw DomainError("single-chaos bound needs order >= 1");
  const DiscreteGradient g = gradient(x);
  SingleChaosBound b;
  b.order = order;
  b.variance_gap = std::abs(1.0 - x.moment(2));
  b.sd_term = std::sqrt(g.block_sum([](double v) { return v * v; }, kHalfIntegralWeight).variance());
  b.grad4 = g.block_sum([](double v) { return v * v * v * v; }, kFullIntegralWeight).expectation();
  b.fourth_moment = x.moment(4);
  const double d = order;
  b.first = b.variance_gap + b.sd_term / d +
            (12.0 + 5.0 * std::pow(b.fourth_moment, 0.25)) / std::sqrt(d) * std::sqrt(b.grad4);
  b.second = b.variance_gap + b.sd_term + 24.0 * std::sqrt(b.grad4);
  return b;
}

// Same bound for I_d(f) given as a kernel.
inline SingleChaosBound single_chaos_bound(const ChaosKernel& f) {
  return single_chaos_bound(integral(f), f.order());
}

}  // namespace bekit
