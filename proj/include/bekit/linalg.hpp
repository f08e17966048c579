#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "bekit/error.hpp"

namespace bekit {

// Eigenvalues of a dense symmetric matrix (row-major, n x n) by the cyclic
// Jacobi method; returned in increasing order.
inline std::vector<double> jacobi_eigenvalues(std::vector<double> a, int n,
                                              int max_sweeps = 100) {
  auto at = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i) * n + j]; };
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0, total = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        total += at(i, j) * at(i, j);
        if (i != j) off += at(i, j) * at(i, j);
      }
    }
    if (off <= 1e-30 * total || off == 0.0) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (int i = 0; i < n; ++i) ev[i] = at(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

// Spectral radius of a symmetric matrix by power iteration on A^2.
inline double spectral_radius_power(const std::vector<double>& a, int n, int max_iter = 10000,
                                    double tol = 1e-14) {
  std::vector<double> v(n), w(n), u(n);
  for (int i = 0; i < n; ++i) v[i] = 1.0 + 0.01 * ((i * 7919) % 101);
  auto mult = [&](const std::vector<double>& x, std::vector<double>& y) {
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += a[static_cast<std::size_t>(i) * n + j] * x[j];
      y[i] = s;
    }
  };
  auto norm = [](const std::vector<double>& x) {
    double s = 0.0;
    for (double e : x) s += e * e;
    return std::sqrt(s);
  };
  double lambda2 = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const double nv = norm(v);
    if (nv == 0.0) return 0.0;
    for (double& e : v) e /= nv;
    mult(v, u);
    mult(u, w);
    double rq = 0.0;
    for (int i = 0; i < n; ++i) rq += v[i] * w[i];
    v.swap(w);
    if (std::abs(rq - lambda2) <= tol * std::abs(rq)) {
      lambda2 = rq;
      break;
    }
    lambda2 = rq;
  }
  return std::sqrt(std::max(lambda2, 0.0));
}

// Largest absolute eigenvalue: Jacobi up to n = 512, power iteration above.
inline double spectral_radius(const std::vector<double>& a, int n) {
  if (n == 0) return 0.0;
  if (n <= 512) {
    const auto ev = jacobi_eigenvalues(a, n);
    return std::max(std::abs(ev.front()), std::abs(ev.back()));
  }
  return spectral_radius_power(a, n);
}

}  // namespace bekit
