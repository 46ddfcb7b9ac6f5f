#pragma once

// Sensing scenarios: parameters observed by N sensors over K times, the
// rank-one factorization of their readings, the health-space map, and the
// index sets and predicates built on top of them.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "reactive/types.hpp"

namespace reactive::scenario {

/// Sorted set of 0-based indices.
using IndexSet = std::vector<int>;

enum class HealthMapKind { selection_matrix, general_linear, opaque };

inline std::string to_string(HealthMapKind k) {
  switch (k) {
    case HealthMapKind::selection_matrix: return "selection_matrix";
    case HealthMapKind::general_linear: return "general_linear";
    case HealthMapKind::opaque: return "opaque";
  }
  return "unknown";
}

/// Row i of a selection map: scale * e_f^T.
struct SelectionRow {
  int f = 0;
  Complex scale{1.0, 0.0};
};

/// H : C^M -> C^n with H(0) = 0.
class HealthMap {
public:
  using Fn = std::function<ComplexVector(const ComplexVector&)>;

  HealthMap() = default;

  static HealthMap selection(int input_dim, std::vector<SelectionRow> rows) {
    if (rows.empty()) {
      throw DimensionError("HealthMap::selection: no rows");
    }
    for (const auto& r : rows) {
      if (r.f < 0 || r.f >= input_dim) {
        throw DimensionError("HealthMap::selection: row references parameter out of range");
      }
      if (r.scale == Complex(0.0, 0.0)) {
        throw DimensionError("HealthMap::selection: zero scale");
      }
    }
    HealthMap h;
    h.kind_ = HealthMapKind::selection_matrix;
    h.input_dim_ = input_dim;
    h.n_ = static_cast<int>(rows.size());
    h.rows_ = std::move(rows);
    return h;
  }

  static HealthMap identity(int dim) {
    std::vector<SelectionRow> rows(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) {
      rows[static_cast<std::size_t>(i)].f = i;
    }
    return selection(dim, std::move(rows));
  }

  /// Projection onto the listed parameters, in order.
  static HealthMap projection(int input_dim, const std::vector<int>& params) {
    std::vector<SelectionRow> rows;
    rows.reserve(params.size());
    for (int f : params) {
      rows.push_back(SelectionRow{f, Complex(1.0, 0.0)});
    }
    return selection(input_dim, std::move(rows));
  }

  static HealthMap linear(ComplexMatrix a) {
    if (a.rows() == 0 || a.cols() == 0) {
      throw DimensionError("HealthMap::linear: empty matrix");
    }
    HealthMap h;
    h.kind_ = HealthMapKind::general_linear;
    h.input_dim_ = static_cast<int>(a.cols());
    h.n_ = static_cast<int>(a.rows());
    h.matrix_ = std::move(a);
    return h;
  }

  static HealthMap opaque(int input_dim, int n, Fn fn) {
    HealthMap h;
    h.kind_ = HealthMapKind::opaque;
    h.input_dim_ = input_dim;
    h.n_ = n;
    h.fn_ = std::move(fn);
    return h;
  }

  HealthMapKind kind() const { return kind_; }
  int n() const { return n_; }
  int input_dim() const { return input_dim_; }
  const std::vector<SelectionRow>& rows() const { return rows_; }
  const ComplexMatrix& matrix() const { return matrix_; }

  ComplexVector apply(const ComplexVector& v) const {
    if (v.size() != input_dim_) {
      throw DimensionError("HealthMap::apply: input dimension mismatch");
    }
    switch (kind_) {
      case HealthMapKind::selection_matrix: {
        ComplexVector out(n_);
        for (int i = 0; i < n_; ++i) {
          const auto& r = rows_[static_cast<std::size_t>(i)];
          out[i] = r.scale * v[r.f];
        }
        return out;
      }
      case HealthMapKind::general_linear:
        return matrix_ * v;
      case HealthMapKind::opaque: {
        ComplexVector out = fn_(v);
        if (out.size() != n_) {
          throw DimensionError("HealthMap::apply: opaque map returned wrong dimension");
        }
        return out;
      }
    }
    throw Error("HealthMap::apply: unknown kind");
  }

  /// The map's rows as a selection, when every row is a nonzero multiple of
  /// an identity row. Selection maps always qualify; linear maps are checked.
  std::optional<std::vector<SelectionRow>> as_selection() const {
    if (kind_ == HealthMapKind::selection_matrix) {
      return rows_;
    }
    if (kind_ != HealthMapKind::general_linear) {
      return std::nullopt;
    }
    std::vector<SelectionRow> rows;
    for (Eigen::Index i = 0; i < matrix_.rows(); ++i) {
      int nz = -1;
      for (Eigen::Index f = 0; f < matrix_.cols(); ++f) {
        if (matrix_(i, f) != Complex(0.0, 0.0)) {
          if (nz >= 0) {
            return std::nullopt;
          }
          nz = static_cast<int>(f);
        }
      }
      if (nz < 0) {
        return std::nullopt;
      }
      rows.push_back(SelectionRow{nz, matrix_(i, nz)});
    }
    return rows;
  }

private:
  HealthMapKind kind_ = HealthMapKind::selection_matrix;
  int input_dim_ = 0;
  int n_ = 0;
  std::vector<SelectionRow> rows_;
  ComplexMatrix matrix_;
  Fn fn_;
};

/// Parameters {0..M-1}, sensors {0..N-1}, times {0..K-1}; readings v_{j,k} in C^M.
class Scenario {
public:
  Scenario() = default;

  Scenario(int m, int n_sensors, int k_times, std::vector<IndexSet> covering,
           std::vector<IndexSet> partition, std::vector<ComplexVector> readings, HealthMap health)
      : m_(m),
        n_sensors_(n_sensors),
        k_times_(k_times),
        covering_(std::move(covering)),
        partition_(std::move(partition)),
        readings_(std::move(readings)),
        health_(std::move(health)) {
    if (m_ <= 0 || n_sensors_ <= 0 || k_times_ <= 0) {
      throw DimensionError("Scenario: M, N and K must be positive");
    }
    if (readings_.size() != static_cast<std::size_t>(n_sensors_ * k_times_)) {
      throw DimensionError("Scenario: expected N*K readings");
    }
    for (const auto& v : readings_) {
      if (v.size() != m_) {
        throw DimensionError("Scenario: reading dimension differs from M");
      }
    }
    if (covering_.size() != static_cast<std::size_t>(n_sensors_) ||
        partition_.size() != static_cast<std::size_t>(n_sensors_)) {
      throw DimensionError("Scenario: covering and partition need one set per sensor");
    }
    if (health_.input_dim() != m_) {
      throw DimensionError("Scenario: health map input dimension differs from M");
    }
    for (auto& s : covering_) {
      std::sort(s.begin(), s.end());
    }
    for (auto& s : partition_) {
      std::sort(s.begin(), s.end());
    }
  }

  /// Readings generated as v_{j,k}(f) = gamma_hat_j(f) * alpha_hat_k(f).
  static Scenario from_factors(std::vector<IndexSet> covering, std::vector<IndexSet> partition,
                               const std::vector<ComplexVector>& gamma_hat,
                               const std::vector<ComplexVector>& alpha_hat, HealthMap health) {
    if (gamma_hat.empty() || alpha_hat.empty()) {
      throw DimensionError("Scenario::from_factors: empty factor set");
    }
    const auto m = gamma_hat.front().size();
    std::vector<ComplexVector> readings;
    readings.reserve(gamma_hat.size() * alpha_hat.size());
    for (const auto& g : gamma_hat) {
      for (const auto& a : alpha_hat) {
        if (g.size() != m || a.size() != m) {
          throw DimensionError("Scenario::from_factors: factor dimension mismatch");
        }
        readings.emplace_back(g.cwiseProduct(a));
      }
    }
    return Scenario(static_cast<int>(m), static_cast<int>(gamma_hat.size()),
                    static_cast<int>(alpha_hat.size()), std::move(covering), std::move(partition),
                    std::move(readings), std::move(health));
  }

  int M() const { return m_; }
  int N() const { return n_sensors_; }
  int K() const { return k_times_; }
  int n() const { return health_.n(); }

  const std::vector<IndexSet>& covering() const { return covering_; }
  const std::vector<IndexSet>& partition() const { return partition_; }
  const HealthMap& health() const { return health_; }
  const std::vector<ComplexVector>& readings() const { return readings_; }

  const ComplexVector& reading(int j, int k) const {
    return readings_[static_cast<std::size_t>(j * k_times_ + k)];
  }
  ComplexVector& reading(int j, int k) { return readings_[static_cast<std::size_t>(j * k_times_ + k)]; }

  /// H(v_{j,k}).
  ComplexVector health_image(int j, int k) const { return health_.apply(reading(j, k)); }

private:
  int m_ = 0;
  int n_sensors_ = 0;
  int k_times_ = 0;
  std::vector<IndexSet> covering_;
  std::vector<IndexSet> partition_;
  std::vector<ComplexVector> readings_;
  HealthMap health_;
};

/// Every sensor-failure variant zeroes all of the sensor's readings.
inline Scenario fail_sensor(const Scenario& s, int j) {
  if (j < 0 || j >= s.N()) {
    throw DimensionError("fail_sensor: sensor index out of range");
  }
  Scenario out = s;
  for (int k = 0; k < s.K(); ++k) {
    out.reading(j, k).setZero();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation

enum class ViolationKind {
  covering_incomplete,
  partition_incomplete,
  partition_overlap,
  partition_outside_covering,
  index_out_of_range,
  support,
  non_finite,
  health_nonzero_at_origin,
};

inline std::string to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::covering_incomplete: return "covering_incomplete";
    case ViolationKind::partition_incomplete: return "partition_incomplete";
    case ViolationKind::partition_overlap: return "partition_overlap";
    case ViolationKind::partition_outside_covering: return "partition_outside_covering";
    case ViolationKind::index_out_of_range: return "index_out_of_range";
    case ViolationKind::support: return "support";
    case ViolationKind::non_finite: return "non_finite";
    case ViolationKind::health_nonzero_at_origin: return "health_nonzero_at_origin";
  }
  return "unknown";
}

struct Violation {
  ViolationKind kind;
  std::string message;
  std::vector<int> indices;  ///< 0-based; meaning depends on kind
};

struct ValidityReport {
  std::vector<Violation> violations;
  bool valid() const { return violations.empty(); }
  bool has(ViolationKind k) const {
    return std::any_of(violations.begin(), violations.end(),
                       [k](const Violation& v) { return v.kind == k; });
  }
};

inline ValidityReport validate_scenario(const Scenario& s) {
  ValidityReport report;
  auto add = [&report](ViolationKind kind, std::string msg, std::vector<int> idx) {
    report.violations.push_back(Violation{kind, std::move(msg), std::move(idx)});
  };
  const int m = s.M();

  std::vector<int> cover_count(static_cast<std::size_t>(m), 0);
  std::vector<int> owner(static_cast<std::size_t>(m), -1);
  for (int j = 0; j < s.N(); ++j) {
    for (int f : s.covering()[static_cast<std::size_t>(j)]) {
      if (f < 0 || f >= m) {
        add(ViolationKind::index_out_of_range, "covering set T_" + std::to_string(j + 1) +
                                                   " references parameter " + std::to_string(f + 1),
            {j, f});
        continue;
      }
      ++cover_count[static_cast<std::size_t>(f)];
    }
    const auto& t = s.covering()[static_cast<std::size_t>(j)];
    for (int f : s.partition()[static_cast<std::size_t>(j)]) {
      if (f < 0 || f >= m) {
        add(ViolationKind::index_out_of_range, "partition set S_" + std::to_string(j + 1) +
                                                   " references parameter " + std::to_string(f + 1),
            {j, f});
        continue;
      }
      if (owner[static_cast<std::size_t>(f)] >= 0) {
        add(ViolationKind::partition_overlap,
            "parameter " + std::to_string(f + 1) + " lies in S_" +
                std::to_string(owner[static_cast<std::size_t>(f)] + 1) + " and S_" + std::to_string(j + 1),
            {f, owner[static_cast<std::size_t>(f)], j});
      } else {
        owner[static_cast<std::size_t>(f)] = j;
      }
      if (!std::binary_search(t.begin(), t.end(), f)) {
        add(ViolationKind::partition_outside_covering,
            "parameter " + std::to_string(f + 1) + " in S_" + std::to_string(j + 1) + " but not in T_" +
                std::to_string(j + 1),
            {j, f});
      }
    }
  }
  std::vector<int> uncovered;
  std::vector<int> unowned;
  for (int f = 0; f < m; ++f) {
    if (cover_count[static_cast<std::size_t>(f)] == 0) {
      uncovered.push_back(f);
    }
    if (owner[static_cast<std::size_t>(f)] < 0) {
      unowned.push_back(f);
    }
  }
  if (!uncovered.empty()) {
    add(ViolationKind::covering_incomplete, "parameters outside every T_j", uncovered);
  }
  if (!unowned.empty()) {
    add(ViolationKind::partition_incomplete, "parameters outside every S_j", unowned);
  }

  for (int j = 0; j < s.N(); ++j) {
    const auto& t = s.covering()[static_cast<std::size_t>(j)];
    for (int k = 0; k < s.K(); ++k) {
      const auto& v = s.reading(j, k);
      if (!all_finite(v)) {
        add(ViolationKind::non_finite,
            "reading v_{" + std::to_string(j + 1) + "," + std::to_string(k + 1) + "} has non-finite entries",
            {j, k});
        continue;
      }
      for (int f = 0; f < m; ++f) {
        if (v[f] != Complex(0.0, 0.0) && !std::binary_search(t.begin(), t.end(), f)) {
          add(ViolationKind::support,
              "v_{" + std::to_string(j + 1) + "," + std::to_string(k + 1) + "}(" + std::to_string(f + 1) +
                  ") is nonzero outside T_" + std::to_string(j + 1),
              {j, k, f});
        }
      }
    }
  }

  const ComplexVector origin = s.health().apply(ComplexVector::Zero(m));
  if (origin.cwiseAbs().maxCoeff() != 0.0) {
    add(ViolationKind::health_nonzero_at_origin, "health map does not send 0 to 0", {});
  }
  return report;
}

// ---------------------------------------------------------------------------
// Factorization

/// gamma_hat/alpha_hat realize pre-separability in C^M; gamma/alpha (filled
/// by separate) realize separability in C^n.
struct Factorization {
  std::vector<ComplexVector> gamma_hat;  ///< N vectors in C^M
  std::vector<ComplexVector> alpha_hat;  ///< K vectors in C^M
  std::vector<ComplexVector> gamma;      ///< N vectors in C^n
  std::vector<ComplexVector> alpha;      ///< K vectors in C^n

  int N() const { return static_cast<int>(gamma_hat.empty() ? gamma.size() : gamma_hat.size()); }
  int K() const { return static_cast<int>(alpha_hat.empty() ? alpha.size() : alpha_hat.size()); }
  int n() const { return gamma.empty() ? 0 : static_cast<int>(gamma.front().size()); }
  bool separated() const { return !gamma.empty() && !alpha.empty(); }
};

/// Zeroes sensor j's sensitivity in both the parameter and health factors.
inline Factorization fail_sensor(const Factorization& fac, int j) {
  Factorization out = fac;
  if (j < 0 || j >= fac.N()) {
    throw DimensionError("fail_sensor: sensor index out of range");
  }
  if (!out.gamma_hat.empty()) {
    out.gamma_hat[static_cast<std::size_t>(j)].setZero();
  }
  if (!out.gamma.empty()) {
    out.gamma[static_cast<std::size_t>(j)].setZero();
  }
  return out;
}

struct NotPreSeparable {
  std::vector<int> offending;          ///< parameters f whose V_f has rank > 1
  std::vector<double> singular_ratio;  ///< sigma_2 / sigma_1 at each offending f
};

using FactorResult = std::variant<Factorization, NotPreSeparable>;

namespace detail {

inline double max_modulus(const std::vector<ComplexVector>& vs) {
  double m = 0.0;
  for (const auto& v : vs) {
    if (v.size() > 0) {
      m = std::max(m, v.cwiseAbs().maxCoeff());
    }
  }
  return m;
}

}  // namespace detail

/// Rank-one factorization of each N x K matrix V_f = [v_{j,k}(f)].
///
/// V_f counts as zero when sigma_1 <= tol * max|v|, and as rank one when
/// sigma_2 <= tol * sigma_1. The per-f gauge puts sqrt(sigma) on both
/// factors and rotates so that gamma_hat is real and nonnegative at the
/// sensor with the largest left-singular-vector entry (smallest j on ties).
inline FactorResult factor_readings(const Scenario& s, double tol = kDefaultTol) {
  if (!(tol > 0.0)) {
    throw std::invalid_argument("factor_readings: tol must be positive");
  }
  const int n_s = s.N();
  const int k_t = s.K();
  const double scale = detail::max_modulus(s.readings());

  Factorization fac;
  fac.gamma_hat.assign(static_cast<std::size_t>(n_s), ComplexVector::Zero(s.M()));
  fac.alpha_hat.assign(static_cast<std::size_t>(k_t), ComplexVector::Zero(s.M()));
  NotPreSeparable bad;

  ComplexMatrix vf(n_s, k_t);
  for (int f = 0; f < s.M(); ++f) {
    for (int j = 0; j < n_s; ++j) {
      for (int k = 0; k < k_t; ++k) {
        vf(j, k) = s.reading(j, k)[f];
      }
    }
    Eigen::JacobiSVD<ComplexMatrix> svd(vf, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double s1 = sv[0];
    if (s1 <= tol * scale || s1 == 0.0) {
      continue;  // V_f ~ 0: both factors stay zero
    }
    if (sv.size() > 1 && sv[1] > tol * s1) {
      bad.offending.push_back(f);
      bad.singular_ratio.push_back(sv[1] / s1);
      continue;
    }
    const ComplexVector u = svd.matrixU().col(0);
    const ComplexVector v = svd.matrixV().col(0);
    Eigen::Index jstar = 0;
    double best = -1.0;
    for (Eigen::Index j = 0; j < u.size(); ++j) {
      if (std::abs(u[j]) > best) {
        best = std::abs(u[j]);
        jstar = j;
      }
    }
    const Complex phase = std::conj(u[jstar]) / std::abs(u[jstar]);
    const double root = std::sqrt(s1);
    for (int j = 0; j < n_s; ++j) {
      fac.gamma_hat[static_cast<std::size_t>(j)][f] = root * u[j] * phase;
    }
    for (int k = 0; k < k_t; ++k) {
      fac.alpha_hat[static_cast<std::size_t>(k)][f] = root * std::conj(v[k]) * std::conj(phase);
    }
  }
  if (!bad.offending.empty()) {
    return bad;
  }
  return fac;
}

/// Largest |v_{j,k}(f) - gamma_hat_j(f) alpha_hat_k(f)| over all (j, k, f).
inline double factorization_residual(const Scenario& s, const Factorization& fac) {
  double r = 0.0;
  for (int j = 0; j < s.N(); ++j) {
    for (int k = 0; k < s.K(); ++k) {
      const ComplexVector prod =
          fac.gamma_hat[static_cast<std::size_t>(j)].cwiseProduct(fac.alpha_hat[static_cast<std::size_t>(k)]);
      r = std::max(r, (s.reading(j, k) - prod).cwiseAbs().maxCoeff());
    }
  }
  return r;
}

/// Largest |H(v_{j,k})(i) - gamma_j(i) alpha_k(i)|.
inline double separation_residual(const Scenario& s, const Factorization& fac) {
  double r = 0.0;
  for (int j = 0; j < s.N(); ++j) {
    for (int k = 0; k < s.K(); ++k) {
      const ComplexVector prod =
          fac.gamma[static_cast<std::size_t>(j)].cwiseProduct(fac.alpha[static_cast<std::size_t>(k)]);
      r = std::max(r, (s.health_image(j, k) - prod).cwiseAbs().maxCoeff());
    }
  }
  return r;
}

/// True iff every alpha_hat_k is constant across f within tol.
inline bool check_separability_constant_alpha(const Scenario& s, const Factorization& fac,
                                      double tol = kDefaultTol) {
  (void)s;
  for (const auto& a : fac.alpha_hat) {
    if (a.size() == 0) {
      continue;
    }
    const Complex ref = a[0];
    for (Eigen::Index f = 1; f < a.size(); ++f) {
      if (std::abs(a[f] - ref) > tol) {
        return false;
      }
    }
  }
  return true;
}

/// Re-gauges a factorization so that every alpha_hat_k is constant across f,
/// when the alpha_hat columns (as K-vectors) are all parallel. Returns
/// nullopt when no such gauge exists.
inline std::optional<Factorization> constant_alpha_gauge(const Factorization& fac,
                                                         double tol = kDefaultTol) {
  const int k_t = fac.K();
  if (k_t == 0 || fac.alpha_hat.front().size() == 0) {
    return std::nullopt;
  }
  const auto m = fac.alpha_hat.front().size();
  ComplexMatrix cols(k_t, m);
  for (int k = 0; k < k_t; ++k) {
    cols.row(k) = fac.alpha_hat[static_cast<std::size_t>(k)].transpose();
  }
  Eigen::JacobiSVD<ComplexMatrix> svd(cols, Eigen::ComputeThinU);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv[0] == 0.0 || (sv.size() > 1 && sv[1] > tol * sv[0])) {
    return std::nullopt;
  }
  ComplexVector dir = svd.matrixU().col(0);
  Eigen::Index big = 0;
  dir.cwiseAbs().maxCoeff(&big);
  dir *= std::conj(dir[big]) / std::abs(dir[big]);

  Factorization out = fac;
  for (Eigen::Index f = 0; f < m; ++f) {
    // alpha_hat(.)(f) = lambda_f * dir
    const Complex lambda = dir.dot(cols.col(f));
    for (std::size_t j = 0; j < out.gamma_hat.size(); ++j) {
      out.gamma_hat[j][f] *= lambda;
    }
    for (int k = 0; k < k_t; ++k) {
      out.alpha_hat[static_cast<std::size_t>(k)][f] = dir[k];
    }
  }
  return out;
}

/// Fills gamma/alpha in health space.
///
/// Selection maps (row i = a_{i,f_i} e_{f_i}^T): gamma_j(i) = a_{i,f_i}
/// gamma_hat_j(f_i), alpha_k(i) = alpha_hat_k(f_i). General linear maps need
/// constant alpha_hat_k (possibly after re-gauging): gamma_j = A gamma_hat_j,
/// alpha_k(i) = alpha_hat_k.
inline Factorization separate(const Scenario& s, const Factorization& fac, double tol = kDefaultTol) {
  if (static_cast<int>(fac.gamma_hat.size()) != s.N() || static_cast<int>(fac.alpha_hat.size()) != s.K()) {
    throw DimensionError("separate: factorization does not match scenario");
  }
  const int n = s.n();
  Factorization out = fac;
  out.gamma.assign(static_cast<std::size_t>(s.N()), ComplexVector::Zero(n));
  out.alpha.assign(static_cast<std::size_t>(s.K()), ComplexVector::Zero(n));

  if (auto rows = s.health().as_selection()) {
    for (int i = 0; i < n; ++i) {
      const auto& r = (*rows)[static_cast<std::size_t>(i)];
      for (int j = 0; j < s.N(); ++j) {
        out.gamma[static_cast<std::size_t>(j)][i] = r.scale * fac.gamma_hat[static_cast<std::size_t>(j)][r.f];
      }
      for (int k = 0; k < s.K(); ++k) {
        out.alpha[static_cast<std::size_t>(k)][i] = fac.alpha_hat[static_cast<std::size_t>(k)][r.f];
      }
    }
  } else if (s.health().kind() == HealthMapKind::general_linear) {
    std::optional<Factorization> gauged;
    if (check_separability_constant_alpha(s, fac, tol)) {
      gauged = fac;
    } else {
      gauged = constant_alpha_gauge(fac, tol);
    }
    if (!gauged) {
      throw NotSeparableError(
          "separate: health map is not a selection and alpha_hat is not constant across parameters");
    }
    out.gamma_hat = gauged->gamma_hat;
    out.alpha_hat = gauged->alpha_hat;
    const ComplexMatrix& a = s.health().matrix();
    for (int j = 0; j < s.N(); ++j) {
      out.gamma[static_cast<std::size_t>(j)] = a * out.gamma_hat[static_cast<std::size_t>(j)];
    }
    for (int k = 0; k < s.K(); ++k) {
      out.alpha[static_cast<std::size_t>(k)].setConstant(out.alpha_hat[static_cast<std::size_t>(k)][0]);
    }
  } else {
    throw NotSeparableError("separate: opaque health maps carry no factorization");
  }

  std::vector<ComplexVector> images;
  images.reserve(static_cast<std::size_t>(s.N() * s.K()));
  for (int j = 0; j < s.N(); ++j) {
    for (int k = 0; k < s.K(); ++k) {
      images.push_back(s.health_image(j, k));
    }
  }
  const double scale = std::max(1.0, detail::max_modulus(images));
  if (separation_residual(s, out) > tol * scale * 10.0) {
    throw NotSeparableError("separate: factors do not reproduce the health images");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Index sets

/// J_j, and the partition {I_j} of {0..n-1} with I_j subset of J_j.
class IndexAssignment {
public:
  IndexAssignment() = default;

  /// Validates and builds; throws DimensionError on a malformed assignment.
  static IndexAssignment make(int n, std::vector<IndexSet> j_sets, std::vector<IndexSet> i_sets) {
    if (j_sets.size() != i_sets.size()) {
      throw DimensionError("IndexAssignment: J and I need one set per sensor");
    }
    IndexAssignment a;
    a.n_ = n;
    a.owner_.assign(static_cast<std::size_t>(n), -1);
    for (auto& s : j_sets) {
      std::sort(s.begin(), s.end());
    }
    for (auto& s : i_sets) {
      std::sort(s.begin(), s.end());
    }
    for (std::size_t j = 0; j < i_sets.size(); ++j) {
      for (int i : i_sets[j]) {
        if (i < 0 || i >= n) {
          throw DimensionError("IndexAssignment: index out of range");
        }
        if (a.owner_[static_cast<std::size_t>(i)] >= 0) {
          throw DimensionError("IndexAssignment: I sets overlap at index " + std::to_string(i + 1));
        }
        if (!std::binary_search(j_sets[j].begin(), j_sets[j].end(), i)) {
          throw DimensionError("IndexAssignment: I_" + std::to_string(j + 1) + " not contained in J_" +
                               std::to_string(j + 1));
        }
        a.owner_[static_cast<std::size_t>(i)] = static_cast<int>(j);
      }
    }
    for (int i = 0; i < n; ++i) {
      if (a.owner_[static_cast<std::size_t>(i)] < 0) {
        throw DimensionError("IndexAssignment: index " + std::to_string(i + 1) + " has no owner");
      }
    }
    a.j_ = std::move(j_sets);
    a.i_ = std::move(i_sets);
    return a;
  }

  int n() const { return n_; }
  int N() const { return static_cast<int>(i_.size()); }
  const std::vector<IndexSet>& J() const { return j_; }
  const std::vector<IndexSet>& I() const { return i_; }
  const IndexSet& J(int j) const { return j_[static_cast<std::size_t>(j)]; }
  const IndexSet& I(int j) const { return i_[static_cast<std::size_t>(j)]; }
  int n_j(int j) const { return static_cast<int>(I(j).size()); }
  /// The sensor j with i in I_j.
  int owner(int i) const { return owner_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& owners() const { return owner_; }

private:
  int n_ = 0;
  std::vector<IndexSet> j_;
  std::vector<IndexSet> i_;
  std::vector<int> owner_;
};

struct IndexSetsResult {
  std::vector<IndexSet> J;
  std::optional<IndexAssignment> assignment;
  IndexSet uncoverable;  ///< i with H(v_{j,k})(i) = 0 for every j, k
};

/// J_j = {i : exists k, |H(v_{j,k})(i)| > tol}. Each i goes to the sensor
/// with the loudest max_k |H(v_{j,k})(i)|, smallest j on ties.
inline IndexSetsResult build_index_sets(const Scenario& s, double tol = kDefaultTol) {
  const int n = s.n();
  IndexSetsResult res;
  res.J.assign(static_cast<std::size_t>(s.N()), IndexSet{});
  Eigen::MatrixXd loud = Eigen::MatrixXd::Zero(s.N(), n);
  for (int j = 0; j < s.N(); ++j) {
    for (int k = 0; k < s.K(); ++k) {
      loud.row(j) = loud.row(j).cwiseMax(s.health_image(j, k).cwiseAbs().transpose());
    }
    for (int i = 0; i < n; ++i) {
      if (loud(j, i) > tol) {
        res.J[static_cast<std::size_t>(j)].push_back(i);
      }
    }
  }
  std::vector<IndexSet> owned(static_cast<std::size_t>(s.N()));
  for (int i = 0; i < n; ++i) {
    int best = -1;
    for (int j = 0; j < s.N(); ++j) {
      if (loud(j, i) > tol && (best < 0 || loud(j, i) > loud(best, i))) {
        best = j;
      }
    }
    if (best < 0) {
      res.uncoverable.push_back(i);
    } else {
      owned[static_cast<std::size_t>(best)].push_back(i);
    }
  }
  if (res.uncoverable.empty()) {
    res.assignment = IndexAssignment::make(n, res.J, std::move(owned));
  }
  return res;
}

inline IndexSetsResult build_index_sets(const Scenario& s, const Factorization& /*fac*/,
                                        double tol = kDefaultTol) {
  return build_index_sets(s, tol);
}

// ---------------------------------------------------------------------------
// Predicates on a separated factorization

inline bool is_i_radiative(const Factorization& fac, int i, double tol = kDefaultTol) {
  return std::any_of(fac.alpha.begin(), fac.alpha.end(),
                     [&](const ComplexVector& a) { return std::abs(a[i]) > tol; });
}

inline bool is_i_dominant(const Factorization& fac, int i, double tol = kDefaultTol) {
  return std::any_of(fac.gamma.begin(), fac.gamma.end(),
                     [&](const ComplexVector& g) { return std::abs(g[i]) > tol; });
}

/// Some j_i with |gamma_{j_i}(i)| > (N-1) |gamma_l(i)| for every l != j_i.
inline bool is_strongly_i_dominant(const Factorization& fac, int i, int n_sensors,
                                   double tol = kDefaultTol) {
  const int count = static_cast<int>(fac.gamma.size());
  for (int j = 0; j < count; ++j) {
    const double top = std::abs(fac.gamma[static_cast<std::size_t>(j)][i]);
    if (top <= tol) {
      continue;
    }
    bool wins = true;
    for (int l = 0; l < count && wins; ++l) {
      if (l != j && !(top > (n_sensors - 1) * std::abs(fac.gamma[static_cast<std::size_t>(l)][i]))) {
        wins = false;
      }
    }
    if (wins) {
      return true;
    }
  }
  return false;
}

/// Indices i failing the per-i predicate; empty means it holds for all i.
template <typename Pred>
IndexSet failing_indices(int n, Pred pred) {
  IndexSet out;
  for (int i = 0; i < n; ++i) {
    if (!pred(i)) {
      out.push_back(i);
    }
  }
  return out;
}

/// Owned indices i in I_j that no other sensor hears: the j-disjoint witnesses.
inline IndexSet disjoint_indices(const Factorization& fac, const IndexAssignment& assign, int j,
                                 double tol = kDefaultTol) {
  IndexSet out;
  for (int i : assign.I(j)) {
    bool heard = false;
    for (int jp = 0; jp < fac.N() && !heard; ++jp) {
      heard = jp != j && std::abs(fac.gamma[static_cast<std::size_t>(jp)][i]) > tol;
    }
    if (!heard) {
      out.push_back(i);
    }
  }
  return out;
}

/// Vacuously true when I_j is empty.
inline bool is_j_harmonious(const Factorization& fac, const IndexAssignment& assign, int j,
                            double tol = kDefaultTol) {
  return disjoint_indices(fac, assign, j, tol).empty();
}

inline bool is_harmonious(const Factorization& fac, const IndexAssignment& assign, double tol = kDefaultTol) {
  for (int j = 0; j < assign.N(); ++j) {
    if (!is_j_harmonious(fac, assign, j, tol)) {
      return false;
    }
  }
  return true;
}

enum class SensorCondition { operational, non_operational, undefined };

inline std::string to_string(SensorCondition c) {
  switch (c) {
    case SensorCondition::operational: return "operational";
    case SensorCondition::non_operational: return "non_operational";
    case SensorCondition::undefined: return "undefined";
  }
  return "unknown";
}

struct SensorStatus {
  SensorCondition condition = SensorCondition::undefined;
  std::vector<int> ell;      ///< positions within I_j (0-based) where gamma_j vanishes
  std::vector<int> indices;  ///< the corresponding health coordinates i
};

inline SensorStatus sensor_status(const Factorization& fac, const IndexAssignment& assign, int j,
                                  double tol = kDefaultTol) {
  SensorStatus st;
  const auto& owned = assign.I(j);
  if (owned.empty()) {
    return st;
  }
  for (std::size_t l = 0; l < owned.size(); ++l) {
    if (std::abs(fac.gamma[static_cast<std::size_t>(j)][owned[l]]) <= tol) {
      st.ell.push_back(static_cast<int>(l));
      st.indices.push_back(owned[l]);
    }
  }
  st.condition = st.ell.empty() ? SensorCondition::operational : SensorCondition::non_operational;
  return st;
}

// ---------------------------------------------------------------------------
// Free-space geometry

/// Received power under free-space propagation, P(d) = P(d_ref) (d_ref / d)^2.
inline double free_space_power(double power_at_ref, double ref_distance, double distance) {
  if (!(distance > 0.0) || !(ref_distance > 0.0)) {
    throw std::invalid_argument("free_space_power: distances must be positive");
  }
  const double r = ref_distance / distance;
  return power_at_ref * r * r;
}

/// Linear SNR at a sensor whose signal and noise sources sit at the given
/// distances, with both powers referenced to distance ref.
inline double free_space_snr(double signal_power_at_ref, double noise_power_at_ref, double ref,
                             double signal_distance, double noise_distance) {
  return free_space_power(signal_power_at_ref, ref, signal_distance) /
         free_space_power(noise_power_at_ref, ref, noise_distance);
}

}  // namespace reactive::scenario
