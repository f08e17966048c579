#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bekit/dist.hpp"
#include "bekit/error.hpp"
#include "bekit/linalg.hpp"
#include "bekit/rng.hpp"

namespace bekit {

// Dense symmetric matrix, row-major.
class SymMatrix {
 public:
  static constexpr double kSymmetryTolerance = 1e-12;

  SymMatrix() = default;
  explicit SymMatrix(int n) : n_(n), a_(static_cast<std::size_t>(n) * n, 0.0) {
    if (n < 1) throw InputError("matrix dimension must be positive");
  }

  // Accepts a square array whose transpose differs by at most 1e-12 and
  // stores its symmetric part.
  static SymMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    const int n = static_cast<int>(rows.size());
    SymMatrix m(n);
    for (int i = 0; i < n; ++i) {
      if (static_cast<int>(rows[i].size()) != n) {
        throw InputError("matrix row " + std::to_string(i) + " has " +
                         std::to_string(rows[i].size()) + " entries, expected " + std::to_string(n));
      }
      for (double v : rows[i]) {
        if (!std::isfinite(v)) throw InputError("matrix entries must be finite");
      }
    }
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        if (std::abs(rows[i][j] - rows[j][i]) > kSymmetryTolerance) {
          throw InputError("matrix is not symmetric at (" + std::to_string(i) + "," +
                           std::to_string(j) + ")");
        }
        const double v = 0.5 * (rows[i][j] + rows[j][i]);
        m.set(i, j, v);
      }
    }
    return m;
  }

  int n() const { return n_; }
  double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * n_ + j]; }
  void set(int i, int j, double v) {
    if (!std::isfinite(v)) throw InputError("matrix entries must be finite");
    a_[static_cast<std::size_t>(i) * n_ + j] = v;
    a_[static_cast<std::size_t>(j) * n_ + i] = v;
  }
  const std::vector<double>& data() const { return a_; }

  SymMatrix scaled(double c) const {
    SymMatrix m(*this);
    for (double& v : m.a_) v *= c;
    return m;
  }

 private:
  int n_ = 0;
  std::vector<double> a_;
};

// Loads n lines of n comma-separated values.
inline SymMatrix load_matrix_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open matrix file " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw InputError(path + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
      if (cell.find_first_not_of(" \t", used) != std::string::npos) {
        throw InputError(path + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("matrix file " + path + " is empty");
  return SymMatrix::from_rows(rows);
}

// Named pieces of E[Q^4]. B is the off-diagonal part of A, d its diagonal,
// r_i = sum_j b_ij^2. Each sum runs over distinct indices as documented.
struct QFormSums {
  double diag4 = 0.0;       // sum_i d_i^4
  double off4_upper = 0.0;  // sum_{i<j} b_ij^4
  double star = 0.0;        // sum_i sum_{j != k} b_ij^2 b_ik^2
  double cycle4 = 0.0;      // sum_{i,j,k,l distinct} b_ij b_jk b_kl b_li
  double dd_path = 0.0;     // sum_{i,j,k distinct} d_i b_ij b_jk d_k
  double tri_dbl = 0.0;     // sum_{i,j,k distinct} b_jk^2 b_ji b_ik
  double dd2 = 0.0;         // sum_{i != j} d_i^2 d_j^2
  double d_off = 0.0;       // sum_i d_i^2 sum_{j != k; j, k != i} b_jk^2
  double disjoint = 0.0;    // sum over ordered (i,j), (k,l), all distinct, of b_ij^2 b_kl^2
  double dd_off2 = 0.0;     // sum_{i != j} d_i d_j b_ij^2
  double d_off3 = 0.0;      // sum_{i != j} d_i b_ij^3
  double d2_off2 = 0.0;     // sum_i d_i^2 r_i
  double d_path = 0.0;      // sum_{i,j,k distinct} d_i b_ij b_jk^2
  double d_tri = 0.0;       // sum_{i,j,k distinct} d_i b_ij b_jk b_ki
  double mu3corr = 0.0;     // sum_{i != j} b_ij d_i^2 d_j
};

inline QFormSums qform_sums(const SymMatrix& a) {
  const int n = a.n();
  QFormSums s;
  std::vector<double> d(n), r(n, 0.0), b(static_cast<std::size_t>(n) * n, 0.0);
  auto B = [&](int i, int j) -> double& { return b[static_cast<std::size_t>(i) * n + j]; };
  double bsum2 = 0.0, b4 = 0.0;
  for (int i = 0; i < n; ++i) {
    d[i] = a(i, i);
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      B(i, j) = a(i, j);
      r[i] += a(i, j) * a(i, j);
      b4 += std::pow(a(i, j), 4);
    }
    bsum2 += r[i];
  }
  // B^2 and B^3 diagonal.
  std::vector<double> b2(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      const double bik = B(i, k);
      if (bik == 0.0) continue;
      for (int j = 0; j < n; ++j) b2[static_cast<std::size_t>(i) * n + j] += bik * B(k, j);
    }
  }
  auto B2 = [&](int i, int j) { return b2[static_cast<std::size_t>(i) * n + j]; };
  double trb4 = 0.0, sum_r2 = 0.0, dB2d = 0.0, sum_d2 = 0.0;
  for (int i = 0; i < n; ++i) {
    sum_r2 += r[i] * r[i];
    sum_d2 += d[i] * d[i];
    s.diag4 += std::pow(d[i], 4);
    s.d2_off2 += d[i] * d[i] * r[i];
    double b3ii = 0.0;
    for (int j = 0; j < n; ++j) {
      trb4 += B2(i, j) * B2(i, j);
      dB2d += d[i] * B2(i, j) * d[j];
      s.tri_dbl += B(i, j) * B(i, j) * B2(i, j);
      b3ii += B2(i, j) * B(j, i);
      if (i == j) continue;
      s.dd_off2 += d[i] * d[j] * B(i, j) * B(i, j);
      s.d_off3 += d[i] * std::pow(B(i, j), 3);
      s.d_path += d[i] * B(i, j) * (r[j] - B(i, j) * B(i, j));
      s.mu3corr += B(i, j) * d[i] * d[i] * d[j];
    }
    s.d_tri += d[i] * b3ii;
    s.star += r[i] * r[i];
    s.d_off += d[i] * d[i] * (bsum2 - 2.0 * r[i]);
  }
  s.star -= b4;
  s.off4_upper = 0.5 * b4;
  s.cycle4 = trb4 - 2.0 * sum_r2 + b4;
  s.dd_path = dB2d - s.d2_off2;
  s.dd2 = sum_d2 * sum_d2 - s.diag4;
  s.disjoint = bsum2 * bsum2 - 4.0 * sum_r2 + 2.0 * b4;
  return s;
}

// Quadratic form Q = sum_{i != j} a_ij X_i X_j + sum_i a_ii (X_i^2 - mu_2)
// of i.i.d. centred coordinates.
struct QFormAnalysis {
  int n = 0;
  MomentTable m;
  QFormSums sums;
  double sigma2 = 0.0;
  double S1 = 0.0, S2 = 0.0, S3 = 0.0;
  double EQ4 = 0.0;
  double trA4 = 0.0;
  double lambda1 = 0.0;      // |largest eigenvalue|
  double influence = 0.0;    // max_i sum_j a_ij^2
  double offdiag2 = 0.0;     // sum_{i != j} a_ij^2
  double diag2 = 0.0;        // sum_i a_ii^2
  double total2 = 0.0;       // sum_{i,j} a_ij^2
  double row_fourth = 0.0;   // sum_i (sum_k a_ik^2)^2
  double gamma = 0.0;        // diag2 / total2
  double alpha_n = 0.0;
  double beta_n = 0.0;
  bool has_diagonal = false;
  bool degenerate = false;   // sigma^2 == 0
};

inline QFormAnalysis analyze(const SymMatrix& a, const MomentTable& m) {
  if (std::abs(m.mu[1]) > 1e-12) {
    throw DomainError("quadratic forms need a centred law (mean " + std::to_string(m.mu[1]) + ")");
  }
  const int n = a.n();
  QFormAnalysis q;
  q.n = n;
  q.m = m;
  q.sums = qform_sums(a);
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) {
      const double v = a(i, j) * a(i, j);
      row += v;
      if (i == j) q.diag2 += v; else q.offdiag2 += v;
    }
    q.influence = std::max(q.influence, row);
    q.row_fourth += row * row;
  }
  q.total2 = q.diag2 + q.offdiag2;
  q.has_diagonal = q.diag2 > 0.0;
  q.gamma = q.total2 > 0.0 ? q.diag2 / q.total2 : 0.0;

  const double mu2 = m.mu[2], mu3 = m.mu[3], mu4 = m.mu[4], mu5 = m.mu[5];
  const double t4 = m.mu_tilde4, t6 = m.mu_tilde6, t8 = m.mu_tilde8;
  q.sigma2 = 2.0 * mu2 * mu2 * q.offdiag2 + t4 * q.diag2;

  const QFormSums& s = q.sums;
  q.S1 = t8 * s.diag4 + 16.0 * mu4 * mu4 * s.off4_upper + 48.0 * mu2 * mu2 * mu4 * s.star +
         48.0 * std::pow(mu2, 4) * s.cycle4 + 48.0 * mu3 * mu3 * mu2 * s.dd_path +
         96.0 * mu3 * mu3 * mu2 * s.tri_dbl;
  q.S2 = t4 * t4 * s.dd2 + 4.0 * t4 * mu2 * mu2 * s.d_off + 4.0 * std::pow(mu2, 4) * s.disjoint;
  q.S3 = 6.0 * t4 * t4 * s.dd_off2 + 8.0 * mu3 * (mu5 - mu3 * mu2) * s.d_off3 +
         6.0 * mu2 * (t6 + t4 * mu2) * s.d2_off2 + 24.0 * mu3 * mu3 * mu2 * s.d_path +
         24.0 * mu2 * mu2 * t4 * s.d_tri + 6.0 * mu3 * (mu5 - 2.0 * mu2 * mu3) * s.mu3corr;
  q.EQ4 = q.S1 + 3.0 * q.S2 + 4.0 * q.S3;

  // Tr(A^4) = ||A^2||_F^2.
  std::vector<double> a2(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < n; ++j) a2[static_cast<std::size_t>(i) * n + j] += aik * a(k, j);
    }
  }
  for (double v : a2) q.trA4 += v * v;
  q.lambda1 = spectral_radius(a.data(), n);

  q.alpha_n = mu2 > 0.0 ? mu2 + (q.has_diagonal ? mu4 / mu2 : 0.0) : 0.0;
  q.beta_n = mu4 + (q.has_diagonal ? std::sqrt(m.mu[8]) : 0.0);
  q.degenerate = !(q.sigma2 > 0.0);
  return q;
}

inline void require_nondegenerate(const QFormAnalysis& q) {
  if (q.degenerate) throw DegenerateError("quadratic form has zero variance");
}

// sqrt|E[(Q/sigma)^4] - 3| + (alpha_n / sigma) sqrt(max influence), constant-free.
inline double bound_r1(const QFormAnalysis& q) {
  require_nondegenerate(q);
  const double sigma = std::sqrt(q.sigma2);
  return std::sqrt(std::abs(q.EQ4 / (q.sigma2 * q.sigma2) - 3.0)) +
         q.alpha_n / sigma * std::sqrt(q.influence);
}

// (beta_n / sigma^2) sqrt(Tr A^4), constant-free.
inline double bound_r2(const QFormAnalysis& q) {
  require_nondegenerate(q);
  return q.beta_n / q.sigma2 * std::sqrt(q.trA4);
}

// ((E|X|^3)^2 + gamma E[X^6]) |lambda_1| / sqrt(sum a_ij^2), constant-free comparator.
inline double rate_gt(const QFormAnalysis& q, const MomentTable& m) {
  require_nondegenerate(q);
  return (m.abs3 * m.abs3 + q.gamma * m.mu[6]) * q.lambda1 / std::sqrt(q.total2);
}

inline double rate_gt(const QFormAnalysis& q) { return rate_gt(q, q.m); }

struct DeJong {
  double fourth_gap = 0.0;       // |E[(Q/sigma)^4] - 3|
  double influence_ratio = 0.0;  // max influence / sigma^2
  double trace_ratio = 0.0;      // Tr(A^4) / sigma^4
};

inline DeJong dejong_check(const QFormAnalysis& q) {
  require_nondegenerate(q);
  const double s4 = q.sigma2 * q.sigma2;
  return {std::abs(q.EQ4 / s4 - 3.0), q.influence / q.sigma2, q.trA4 / s4};
}

// The constant-free links between trace, eigenvalue, influence and sigma.
struct TraceChain {
  double sqrt_tr4 = 0.0;      // sqrt(Tr A^4)
  double lambda_frob = 0.0;   // |lambda_1| sqrt(sum a_ij^2)
  double lambda_sigma = 0.0;  // (sigma / mu_2) |lambda_1|
  double tr4_cap = 0.0;       // sigma^4 / mu_2^4
  bool trace_le_lambda = false;     // sqrt Tr A^4 <= |l1| ||A||_F
  bool lambda_le_sigma = false;     // |l1| ||A||_F <= (sigma/mu2) |l1|
  bool influence_le_trace = false;  // max influence <= sqrt Tr A^4
  bool trace_le_sigma = false;      // Tr A^4 <= sigma^4 / mu2^4
  bool all() const {
    return trace_le_lambda && lambda_le_sigma && influence_le_trace && trace_le_sigma;
  }
};

inline TraceChain trace_chain(const QFormAnalysis& q, double rel_tol = 1e-10) {
  TraceChain c;
  const double mu2 = q.m.mu[2];
  c.sqrt_tr4 = std::sqrt(q.trA4);
  c.lambda_frob = q.lambda1 * std::sqrt(q.total2);
  c.lambda_sigma = std::sqrt(q.sigma2) / mu2 * q.lambda1;
  c.tr4_cap = q.sigma2 * q.sigma2 / std::pow(mu2, 4);
  auto le = [&](double a, double b) { return a <= b * (1.0 + rel_tol) + 1e-300; };
  c.trace_le_lambda = le(c.sqrt_tr4, c.lambda_frob);
  c.lambda_le_sigma = le(c.lambda_frob, c.lambda_sigma);
  c.influence_le_trace = le(q.influence, c.sqrt_tr4);
  c.trace_le_sigma = le(q.trA4, c.tr4_cap);
  return c;
}

// One draw of Q with fresh coordinates from `law`.
inline double qform_sample(const SymMatrix& a, const Distribution& law, double mu2, Stream& rng,
                           std::vector<double>& x) {
  const int n = a.n();
  x.resize(n);
  for (int i = 0; i < n; ++i) x[i] = sample(law, rng);
  const auto& d = a.data();
  double q = 0.0;
  for (int i = 0; i < n; ++i) {
    const double* row = d.data() + static_cast<std::size_t>(i) * n;
    double s = 0.0;
    for (int j = 0; j < i; ++j) s += row[j] * x[j];
    q += 2.0 * s * x[i] + row[i] * (x[i] * x[i] - mu2);
  }
  return q;
}

}  // namespace bekit
