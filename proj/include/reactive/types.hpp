#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace reactive {

using Complex = std::complex<double>;

/// A vector in C^n. Element type for frames, readings and health images.
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

/// Default absolute tolerance for rank and nonvanishing decisions.
inline constexpr double kDefaultTol = 1e-9;

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
  using Error::Error;
};

class NotAFrameError : public Error {
public:
  using Error::Error;
};

class NumericalError : public Error {
public:
  using Error::Error;
};

/// A theorem or construction was invoked without its hypotheses holding.
class HypothesisError : public Error {
public:
  using Error::Error;
};

class NotSeparableError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

inline bool all_finite(const ComplexVector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag())) {
      return false;
    }
  }
  return true;
}

inline ComplexVector make_vector(std::initializer_list<Complex> values) {
  ComplexVector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (const auto& c : values) {
    v[i++] = c;
  }
  return v;
}

inline ComplexVector make_vector(const std::vector<Complex>& values) {
  ComplexVector v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = values[i];
  }
  return v;
}

inline ComplexVector real_vector(std::initializer_list<double> values) {
  ComplexVector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) {
    v[i++] = Complex(x, 0.0);
  }
  return v;
}

/// Inner product <x, y> = sum_i x(i) conj(y(i)), linear in the first slot.
inline Complex inner(const ComplexVector& x, const ComplexVector& y) {
  return y.dot(x);
}

/// Canonical basis vector e_i of C^n (0-based i).
inline ComplexVector canonical(Eigen::Index n, Eigen::Index i) {
  ComplexVector e = ComplexVector::Zero(n);
  e[i] = 1.0;
  return e;
}

}  // namespace reactive
