#pragma once

// Independent reference computations for tests: plain Gaussian elimination,
// a naive DFT, and small random generators.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "reactive/types.hpp"

namespace oracle {

using reactive::Complex;
using reactive::ComplexVector;

/// Rank by Gaussian elimination with partial pivoting on row vectors.
inline int rank(std::vector<ComplexVector> rows, double tol = 1e-9) {
  if (rows.empty()) {
    return 0;
  }
  const auto cols = rows.front().size();
  double scale = 0.0;
  for (const auto& r : rows) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      scale = std::max(scale, std::abs(r[c]));
    }
  }
  if (scale == 0.0) {
    return 0;
  }
  int rank = 0;
  std::size_t top = 0;
  for (Eigen::Index c = 0; c < cols && top < rows.size(); ++c) {
    std::size_t piv = top;
    for (std::size_t r = top; r < rows.size(); ++r) {
      if (std::abs(rows[r][c]) > std::abs(rows[piv][c])) {
        piv = r;
      }
    }
    if (std::abs(rows[piv][c]) <= tol * scale) {
      continue;
    }
    std::swap(rows[piv], rows[top]);
    for (std::size_t r = top + 1; r < rows.size(); ++r) {
      const Complex f = rows[r][c] / rows[top][c];
      for (Eigen::Index cc = c; cc < cols; ++cc) {
        rows[r][cc] -= f * rows[top][cc];
      }
    }
    ++top;
    ++rank;
  }
  return rank;
}

/// X[b] = sum_t x[t] exp(-2 pi i b t / n), evaluated term by term.
inline std::vector<Complex> naive_dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<Complex> out(n);
  for (std::size_t b = 0; b < n; ++b) {
    Complex acc{0.0, 0.0};
    for (std::size_t t = 0; t < n; ++t) {
      const auto m = static_cast<double>((b * t) % n);
      const double ang = -2.0 * M_PI * m / static_cast<double>(n);
      acc += x[t] * Complex(std::cos(ang), std::sin(ang));
    }
    out[b] = acc;
  }
  return out;
}

/// sum_h |<x, x_h>|^2 computed directly.
inline double energy(const ComplexVector& x, const std::vector<ComplexVector>& frame) {
  double e = 0.0;
  for (const auto& v : frame) {
    Complex ip{0.0, 0.0};
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      ip += x[i] * std::conj(v[i]);
    }
    e += std::norm(ip);
  }
  return e;
}

class Gen {
public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }

  Complex complex_normal() { return {normal(), normal()}; }

  ComplexVector vector(int n) {
    ComplexVector v(n);
    for (int i = 0; i < n; ++i) {
      v[i] = complex_normal();
    }
    return v;
  }

  /// Entries with modulus in [lo, hi] and random phase.
  ComplexVector nonvanishing(int n, double lo = 0.2, double hi = 2.0) {
    ComplexVector v(n);
    for (int i = 0; i < n; ++i) {
      v[i] = std::polar(uniform(lo, hi), uniform(-M_PI, M_PI));
    }
    return v;
  }

  std::mt19937_64& engine() { return eng_; }

private:
  std::mt19937_64 eng_;
};

}  // namespace oracle
