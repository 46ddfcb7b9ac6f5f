#pragma once

// Finite frames over C^n: analysis/synthesis/frame operators, optimal
// bounds, canonical duals, reconstruction, and multiplicative products.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "reactive/types.hpp"

namespace reactive::frames {

/// Index pair attached to a frame element, e.g. (j, k) or (i, j).
using Label = std::pair<int, int>;

/// An indexed, nonempty set of vectors of one common dimension.
class VectorSet {
public:
  VectorSet() = default;

  explicit VectorSet(std::vector<ComplexVector> vectors, std::vector<Label> labels = {})
      : vectors_(std::move(vectors)), labels_(std::move(labels)) {
    if (vectors_.empty()) {
      throw DimensionError("VectorSet: empty set");
    }
    const auto n = vectors_.front().size();
    if (n <= 0) {
      throw DimensionError("VectorSet: vectors must have positive dimension");
    }
    for (const auto& v : vectors_) {
      if (v.size() != n) {
        throw DimensionError("VectorSet: mixed dimensions");
      }
      if (!all_finite(v)) {
        throw NumericalError("VectorSet: non-finite entry");
      }
    }
    if (!labels_.empty()) {
      if (labels_.size() != vectors_.size()) {
        throw DimensionError("VectorSet: label count differs from vector count");
      }
      std::set<Label> seen(labels_.begin(), labels_.end());
      if (seen.size() != labels_.size()) {
        throw DimensionError("VectorSet: duplicate labels");
      }
    }
  }

  /// Real-valued convenience constructor: {{3,1},{1,3},{1,1}}.
  static VectorSet from_real(std::initializer_list<std::initializer_list<double>> rows) {
    std::vector<ComplexVector> vs;
    for (const auto& r : rows) {
      vs.push_back(real_vector(r));
    }
    return VectorSet(std::move(vs));
  }

  std::size_t size() const { return vectors_.size(); }
  Eigen::Index dim() const { return vectors_.empty() ? 0 : vectors_.front().size(); }
  bool empty() const { return vectors_.empty(); }

  const ComplexVector& operator[](std::size_t h) const { return vectors_[h]; }
  const std::vector<ComplexVector>& vectors() const { return vectors_; }

  bool has_labels() const { return !labels_.empty(); }
  const std::vector<Label>& labels() const { return labels_; }

  auto begin() const { return vectors_.begin(); }
  auto end() const { return vectors_.end(); }

  /// n x D matrix whose columns are the set's vectors.
  ComplexMatrix matrix() const {
    ComplexMatrix m(dim(), static_cast<Eigen::Index>(size()));
    for (std::size_t h = 0; h < size(); ++h) {
      m.col(static_cast<Eigen::Index>(h)) = vectors_[h];
    }
    return m;
  }

private:
  std::vector<ComplexVector> vectors_;
  std::vector<Label> labels_;
};

struct FrameBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Hermitian positive-semidefinite n x n matrix sum_h x_h x_h^*.
struct FrameOperator {
  ComplexMatrix matrix;
};

enum class FrameClass { not_frame, frame, tight, parseval, funtf };

inline std::string to_string(FrameClass c) {
  switch (c) {
    case FrameClass::not_frame: return "not_frame";
    case FrameClass::frame: return "frame";
    case FrameClass::tight: return "tight";
    case FrameClass::parseval: return "parseval";
    case FrameClass::funtf: return "funtf";
  }
  return "unknown";
}

/// Coefficients <x, x_h> in frame order.
inline ComplexVector analysis(const ComplexVector& x, const VectorSet& frame) {
  if (x.size() != frame.dim()) {
    throw DimensionError("analysis: dimension mismatch");
  }
  return frame.matrix().adjoint() * x;
}

/// sum_h a_h x_h.
inline ComplexVector synthesis(const ComplexVector& coeffs, const VectorSet& frame) {
  if (static_cast<std::size_t>(coeffs.size()) != frame.size()) {
    throw DimensionError("synthesis: coefficient count differs from frame size");
  }
  return frame.matrix() * coeffs;
}

inline FrameOperator frame_operator(const VectorSet& frame) {
  const ComplexMatrix v = frame.matrix();
  ComplexMatrix f = v * v.adjoint();
  // Average with the adjoint so the eigen-solve sees an exactly Hermitian matrix.
  ComplexMatrix sym = 0.5 * (f + f.adjoint());
  return FrameOperator{std::move(sym)};
}

/// Eigenvalues of the frame operator in ascending order.
inline Eigen::VectorXd frame_spectrum(const VectorSet& frame) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(frame_operator(frame).matrix,
                                                  Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericalError("frame_spectrum: eigen-decomposition failed");
  }
  return es.eigenvalues();
}

/// Optimal frame bounds: extreme eigenvalues of the frame operator.
inline FrameBounds frame_bounds(const VectorSet& frame) {
  const Eigen::VectorXd ev = frame_spectrum(frame);
  const double upper = std::max(ev[ev.size() - 1], 0.0);
  double lower = ev[0];
  // Below this level an eigenvalue is indistinguishable from rounding.
  const double floor = static_cast<double>(ev.size()) * std::numeric_limits<double>::epsilon() * upper;
  if (lower <= floor) {
    lower = 0.0;
  }
  return FrameBounds{lower, upper};
}

enum class SpanThreshold { absolute, relative };

/// Either a certificate that a set spans C^n, or a unit witness orthogonal
/// (to tolerance) to every element.
struct SpanCertificate {
  bool spans = false;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  int rank = 0;
  std::optional<ComplexVector> witness;
};

/// Decides spanning from the singular values of the stacked D x n matrix
/// whose rows are x_h^*. With SpanThreshold::relative the test is
/// sigma_min > tol * sigma_max.
inline SpanCertificate span_certificate(const VectorSet& vectors, double tol = kDefaultTol,
                                        SpanThreshold mode = SpanThreshold::absolute) {
  if (!(tol > 0.0)) {
    throw std::invalid_argument("span_certificate: tol must be positive");
  }
  const Eigen::Index n = vectors.dim();
  const Eigen::Index d = static_cast<Eigen::Index>(vectors.size());
  const ComplexMatrix stacked = vectors.matrix().adjoint();
  Eigen::JacobiSVD<ComplexMatrix> svd(stacked, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();

  SpanCertificate cert;
  cert.sigma_max = sv.size() > 0 ? sv[0] : 0.0;
  cert.sigma_min = d >= n ? sv[n - 1] : 0.0;
  const double threshold = mode == SpanThreshold::relative ? tol * cert.sigma_max : tol;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > threshold && sv[i] > 0.0) {
      ++cert.rank;
    }
  }
  cert.spans = cert.rank == n;
  if (!cert.spans) {
    ComplexVector y = svd.matrixV().col(n - 1);
    Eigen::Index big = 0;
    y.cwiseAbs().maxCoeff(&big);
    const Complex phase = std::conj(y[big]) / std::abs(y[big]);
    y *= phase;
    cert.witness = y / y.norm();
  }
  return cert;
}

/// True iff the set spans, i.e. the smallest singular value of the stacked
/// matrix (square root of the smallest frame-operator eigenvalue) exceeds tol.
inline bool is_frame(const VectorSet& frame, double tol = kDefaultTol) {
  return span_certificate(frame, tol).spans;
}

inline FrameClass classify_frame(const VectorSet& frame, double tol = kDefaultTol) {
  if (!(tol > 0.0)) {
    throw std::invalid_argument("classify_frame: tol must be positive");
  }
  if (!is_frame(frame, tol)) {
    return FrameClass::not_frame;
  }
  const FrameBounds b = frame_bounds(frame);
  const bool tight = std::abs(b.upper - b.lower) <= tol * b.upper;
  const bool parseval = std::abs(b.lower - 1.0) <= tol && std::abs(b.upper - 1.0) <= tol;
  const bool unit_norm = std::all_of(frame.begin(), frame.end(), [tol](const ComplexVector& v) {
    return std::abs(v.norm() - 1.0) <= tol;
  });
  if ((tight || parseval) && unit_norm) {
    return FrameClass::funtf;
  }
  if (parseval) {
    return FrameClass::parseval;
  }
  if (tight) {
    return FrameClass::tight;
  }
  return FrameClass::frame;
}

/// {F^{-1} x_h}; its bounds are (1/B, 1/A).
inline VectorSet canonical_dual(const VectorSet& frame, double tol = kDefaultTol) {
  if (!is_frame(frame, tol)) {
    throw NotAFrameError("canonical_dual: set does not span");
  }
  const FrameOperator op = frame_operator(frame);
  Eigen::LLT<ComplexMatrix> llt(op.matrix);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("canonical_dual: frame operator is not positive definite");
  }
  const ComplexMatrix dual = llt.solve(frame.matrix());
  std::vector<ComplexVector> out;
  out.reserve(frame.size());
  for (Eigen::Index h = 0; h < dual.cols(); ++h) {
    out.emplace_back(dual.col(h));
  }
  return VectorSet(std::move(out), frame.labels());
}

/// {F^{-1/2} x_h}, the canonical Parseval frame.
inline VectorSet parsevalize(const VectorSet& frame, double tol = kDefaultTol) {
  if (!is_frame(frame, tol)) {
    throw NotAFrameError("parsevalize: set does not span");
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(frame_operator(frame).matrix);
  if (es.info() != Eigen::Success) {
    throw NumericalError("parsevalize: eigen-decomposition failed");
  }
  const Eigen::VectorXd inv_sqrt = es.eigenvalues().cwiseSqrt().cwiseInverse();
  const ComplexMatrix root =
      es.eigenvectors() * inv_sqrt.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
  const ComplexMatrix p = root * frame.matrix();
  std::vector<ComplexVector> out;
  out.reserve(frame.size());
  for (Eigen::Index h = 0; h < p.cols(); ++h) {
    out.emplace_back(p.col(h));
  }
  return VectorSet(std::move(out), frame.labels());
}

/// x = sum_h <x, x_h> F^{-1} x_h.
inline ComplexVector reconstruct(const ComplexVector& x, const VectorSet& frame,
                                 double tol = kDefaultTol) {
  if (x.size() != frame.dim()) {
    throw DimensionError("reconstruct: dimension mismatch");
  }
  return synthesis(analysis(x, frame), canonical_dual(frame, tol));
}

/// Factor sets for a multiplicative frame x_{j,k}(i) = y_j(i) z_k(i).
class MultiplicativeFactorPair {
public:
  MultiplicativeFactorPair(VectorSet y, VectorSet z) : y_(std::move(y)), z_(std::move(z)) {
    if (y_.dim() != z_.dim()) {
      throw DimensionError("MultiplicativeFactorPair: Y and Z dimensions differ");
    }
  }
  const VectorSet& y() const { return y_; }
  const VectorSet& z() const { return z_; }

private:
  VectorSet y_;
  VectorSet z_;
};

/// The N*K coordinatewise products, ordered with j outer and labeled (j, k), 1-based.
inline VectorSet multiplicative_product(const MultiplicativeFactorPair& pair) {
  std::vector<ComplexVector> out;
  std::vector<Label> labels;
  out.reserve(pair.y().size() * pair.z().size());
  for (std::size_t j = 0; j < pair.y().size(); ++j) {
    for (std::size_t k = 0; k < pair.z().size(); ++k) {
      out.emplace_back(pair.y()[j].cwiseProduct(pair.z()[k]));
      labels.emplace_back(static_cast<int>(j) + 1, static_cast<int>(k) + 1);
    }
  }
  return VectorSet(std::move(out), std::move(labels));
}

/// Certified bounds for a multiplicative product built from a frame factor
/// and a factor set containing a strictly nonvanishing vector.
struct MultiplicativeBoundCertificate {
  double lower = 0.0;           ///< m^2 * A, the certified lower frame bound
  double upper = 0.0;           ///< count * B * max ||v||_inf^2
  double printed_lower = 0.0;   ///< m * A, reported for comparison only
  double min_modulus = 0.0;     ///< m
  std::size_t witness_index = 0;  ///< index of the vector attaining m (0-based)
  double max_sup_norm_sq = 0.0;

  FrameBounds bounds() const { return FrameBounds{lower, upper}; }
  bool contains(const FrameBounds& b, double rel_tol = 1e-9) const {
    const double slack = rel_tol * std::max(1.0, upper);
    return b.lower >= lower - slack && b.upper <= upper + slack;
  }
};

namespace detail {

inline MultiplicativeBoundCertificate certify(const FrameBounds& frame_factor_bounds,
                                              const VectorSet& other) {
  MultiplicativeBoundCertificate c;
  double best = 0.0;
  std::size_t best_index = 0;
  double sup = 0.0;
  for (std::size_t k = 0; k < other.size(); ++k) {
    const Eigen::VectorXd mod = other[k].cwiseAbs();
    if (mod.minCoeff() > best) {
      best = mod.minCoeff();
      best_index = k;
    }
    sup = std::max(sup, mod.maxCoeff() * mod.maxCoeff());
  }
  if (!(best > 0.0)) {
    throw HypothesisError("mf_bound_certificate: no factor vector is nonvanishing in every coordinate");
  }
  c.min_modulus = best;
  c.witness_index = best_index;
  c.max_sup_norm_sq = sup;
  c.lower = best * best * frame_factor_bounds.lower;
  c.printed_lower = best * frame_factor_bounds.lower;
  c.upper = static_cast<double>(other.size()) * frame_factor_bounds.upper * sup;
  return c;
}

}  // namespace detail

/// Y is a frame with bounds (A_N, B_N) and some z_k has min_i |z_k(i)| = m_z > 0.
inline MultiplicativeBoundCertificate mf_bound_certificate(const MultiplicativeFactorPair& pair,
                                                           const FrameBounds& y_bounds) {
  return detail::certify(y_bounds, pair.z());
}

/// Roles of Y and Z swapped: Z is a frame with bounds (A_K, B_K) and some y_j
/// is nonvanishing in every coordinate.
inline MultiplicativeBoundCertificate mf_bound_certificate_reversed(
    const MultiplicativeFactorPair& pair, const FrameBounds& z_bounds) {
  return detail::certify(z_bounds, pair.y());
}

}  // namespace reactive::frames
