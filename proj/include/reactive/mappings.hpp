#pragma once

// Basis and magnitude-sum frame mappings from stacked sensor readings into
// health space, the projective sets X and Z, and computational checks of the
// basis / frame / projective / strong-dominance theorems.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "reactive/frame.hpp"
#include "reactive/scenario.hpp"
#include "reactive/types.hpp"

namespace reactive::mappings {

using frames::SpanCertificate;
using frames::VectorSet;
using scenario::Factorization;
using scenario::IndexAssignment;
using scenario::IndexSet;
using scenario::Scenario;

/// v_{1,k} + ... + v_{N,k} as N blocks in C^M.
struct StackedReading {
  std::vector<ComplexVector> blocks;
  int k = 0;
};

inline StackedReading stacked_reading(const Scenario& s, int k) {
  StackedReading st;
  st.k = k;
  for (int j = 0; j < s.N(); ++j) {
    st.blocks.push_back(s.reading(j, k));
  }
  return st;
}

/// H applied to every block of a stack.
inline std::vector<ComplexVector> health_blocks(const StackedReading& stack, const Scenario& s) {
  if (static_cast<int>(stack.blocks.size()) != s.N()) {
    throw DimensionError("health_blocks: stack needs one block per sensor");
  }
  std::vector<ComplexVector> out;
  out.reserve(stack.blocks.size());
  for (const auto& b : stack.blocks) {
    out.push_back(s.health().apply(b));
  }
  return out;
}

/// Basis mapping on blocks already in health space: coordinate i is read
/// from its owner's block.
inline ComplexVector basis_map_health(const std::vector<ComplexVector>& hblocks, const IndexAssignment& assign) {
  if (static_cast<int>(hblocks.size()) != assign.N()) {
    throw DimensionError("basis_map: block count differs from sensor count");
  }
  ComplexVector out(assign.n());
  for (int i = 0; i < assign.n(); ++i) {
    const auto& h = hblocks[static_cast<std::size_t>(assign.owner(i))];
    if (h.size() != assign.n()) {
      throw DimensionError("basis_map: health block dimension differs from n");
    }
    out[i] = h[i];
  }
  return out;
}

/// Magnitude-sum frame mapping on blocks already in health space.
inline ComplexVector frame_map_health(const std::vector<ComplexVector>& hblocks) {
  if (hblocks.empty()) {
    throw DimensionError("frame_map: empty stack");
  }
  const auto n = hblocks.front().size();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
  for (const auto& h : hblocks) {
    if (h.size() != n) {
      throw DimensionError("frame_map: health blocks of mixed dimension");
    }
    acc += h.cwiseAbs();
  }
  return acc.cast<Complex>();
}

inline ComplexVector basis_map(const StackedReading& stack, const Scenario& s, const IndexAssignment& assign) {
  if (assign.n() != s.n()) {
    throw DimensionError("basis_map: assignment does not cover the health space");
  }
  return basis_map_health(health_blocks(stack, s), assign);
}

inline ComplexVector frame_map(const StackedReading& stack, const Scenario& s) {
  return frame_map_health(health_blocks(stack, s));
}

/// u_{j,k}: H(v_{j,k}) restricted to I_j.
inline ComplexVector basis_map_single(int j, int k, const Scenario& s, const IndexAssignment& assign) {
  const ComplexVector h = s.health_image(j, k);
  ComplexVector u = ComplexVector::Zero(h.size());
  for (int i : assign.I(j)) {
    u[i] = h[i];
  }
  return u;
}

/// w_{j,k}(i) = |H(v_{j,k})(i)|.
inline ComplexVector frame_map_single(int j, int k, const Scenario& s) {
  return s.health_image(j, k).cwiseAbs().cast<Complex>();
}

struct MappedOutput {
  int N = 0;
  int K = 0;
  std::vector<ComplexVector> u;  ///< index j*K + k
  std::vector<ComplexVector> w;

  const ComplexVector& u_at(int j, int k) const { return u[static_cast<std::size_t>(j * K + k)]; }
  const ComplexVector& w_at(int j, int k) const { return w[static_cast<std::size_t>(j * K + k)]; }
};

inline MappedOutput mapped_outputs(const Scenario& s, const IndexAssignment& assign) {
  MappedOutput out;
  out.N = s.N();
  out.K = s.K();
  for (int j = 0; j < s.N(); ++j) {
    for (int k = 0; k < s.K(); ++k) {
      out.u.push_back(basis_map_single(j, k, s, assign));
      out.w.push_back(frame_map_single(j, k, s));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Projective sets

enum class ProjectiveKind { X_full, Z_radiative };

/// A single-coordinate vector value * e_i in C^n, from sensor j at time k.
struct ProjectiveElement {
  int i = 0;
  int j = 0;
  int k = 0;
  Complex value{0.0, 0.0};
};

struct ProjectiveSet {
  ProjectiveKind kind = ProjectiveKind::X_full;
  int n = 0;
  int N = 0;
  std::vector<ProjectiveElement> elements;
  std::vector<int> owner;  ///< owner[i] from the index assignment; empty for X

  std::size_t card() const { return elements.size(); }

  /// The elements as vectors of C^n, labeled (i, j) for Z and unlabeled for X.
  VectorSet as_vectors() const {
    std::vector<ComplexVector> vs;
    std::vector<frames::Label> labels;
    for (const auto& e : elements) {
      ComplexVector v = ComplexVector::Zero(n);
      v[e.i] = e.value;
      vs.push_back(std::move(v));
      if (kind == ProjectiveKind::Z_radiative) {
        labels.emplace_back(e.i, e.j);
      }
    }
    return VectorSet(std::move(vs), std::move(labels));
  }
};

/// k_i = argmax_k |alpha_k(i)|, smallest k on ties. Throws if i is not radiative.
inline int radiative_time(const Factorization& fac, int i, double tol = kDefaultTol) {
  int best = -1;
  double top = tol;
  for (int k = 0; k < fac.K(); ++k) {
    const double a = std::abs(fac.alpha[static_cast<std::size_t>(k)][i]);
    if (a > top) {
      top = a;
      best = k;
    }
  }
  if (best < 0) {
    throw HypothesisError("index " + std::to_string(i + 1) + " is not radiative");
  }
  return best;
}

/// X: every H(v_{j,k})(i) e_i, card nNK.
inline ProjectiveSet build_X(const Scenario& s) {
  ProjectiveSet x;
  x.kind = ProjectiveKind::X_full;
  x.n = s.n();
  x.N = s.N();
  for (int j = 0; j < s.N(); ++j) {
    for (int k = 0; k < s.K(); ++k) {
      const ComplexVector h = s.health_image(j, k);
      for (int i = 0; i < s.n(); ++i) {
        x.elements.push_back(ProjectiveElement{i, j, k, h[i]});
      }
    }
  }
  return x;
}

/// Z: H(v_{j,k_i})(i) e_i for every (i, j), card nN. Values come from the
/// scenario's readings, so a failed scenario yields the failed set.
inline ProjectiveSet build_Z(const Scenario& s, const Factorization& fac, const IndexAssignment& assign,
                             double tol = kDefaultTol) {
  if (assign.n() != s.n()) {
    throw DimensionError("build_Z: assignment does not cover the health space");
  }
  ProjectiveSet z;
  z.kind = ProjectiveKind::Z_radiative;
  z.n = s.n();
  z.N = s.N();
  z.owner = assign.owners();
  std::vector<int> k_of(static_cast<std::size_t>(s.n()));
  for (int i = 0; i < s.n(); ++i) {
    k_of[static_cast<std::size_t>(i)] = radiative_time(fac, i, tol);
  }
  for (int i = 0; i < s.n(); ++i) {
    const int k = k_of[static_cast<std::size_t>(i)];
    for (int j = 0; j < s.N(); ++j) {
      z.elements.push_back(ProjectiveElement{i, j, k, s.health_image(j, k)[i]});
    }
  }
  return z;
}

/// B'(z_{j,i}) = value e_i if i is in I_j, else 0.
inline VectorSet apply_Bprime(const ProjectiveSet& z) {
  if (z.kind != ProjectiveKind::Z_radiative) {
    throw DimensionError("apply_Bprime: expects the set Z");
  }
  std::vector<ComplexVector> vs;
  std::vector<frames::Label> labels;
  for (const auto& e : z.elements) {
    ComplexVector v = ComplexVector::Zero(z.n);
    if (z.owner[static_cast<std::size_t>(e.i)] == e.j) {
      v[e.i] = e.value;
    }
    vs.push_back(std::move(v));
    labels.emplace_back(e.i, e.j);
  }
  return VectorSet(std::move(vs), std::move(labels));
}

/// F'(z_{j,i}) = |value| e_i.
inline VectorSet apply_Fprime(const ProjectiveSet& z) {
  std::vector<ComplexVector> vs;
  std::vector<frames::Label> labels;
  for (const auto& e : z.elements) {
    ComplexVector v = ComplexVector::Zero(z.n);
    v[e.i] = std::abs(e.value);
    vs.push_back(std::move(v));
    if (z.kind == ProjectiveKind::Z_radiative) {
      labels.emplace_back(e.i, e.j);
    }
  }
  return VectorSet(std::move(vs), std::move(labels));
}

/// Number of distinct vectors in a set (exact comparison).
inline std::size_t distinct_count(const VectorSet& vs) {
  std::vector<ComplexVector> seen;
  for (const auto& v : vs) {
    if (std::none_of(seen.begin(), seen.end(), [&](const ComplexVector& u) { return u == v; })) {
      seen.push_back(v);
    }
  }
  return seen.size();
}

// ---------------------------------------------------------------------------
// Theorem reports

struct HypothesisCheck {
  std::string name;
  bool holds = true;
  std::vector<int> failing;  ///< 0-based indices where the predicate fails
};

struct DominanceMargin {
  int i = 0;
  int j_i = 0;       ///< dominant sensor
  int k_i = 0;       ///< loudest time
  double top = 0.0;  ///< |gamma_{j_i}(i)|
  double rival = 0.0;  ///< (N-1) * max_{l != j_i} |gamma_l(i)|
  bool strict() const { return top > rival; }
};

struct TheoremReport {
  std::string theorem;
  std::string claim;
  std::optional<int> failed_sensor;
  std::vector<HypothesisCheck> hypotheses;
  bool hypotheses_hold = true;
  /// Set only when the hypotheses hold: whether the claim was verified.
  std::optional<bool> conclusion_verified;
  SpanCertificate span;
  std::size_t card = 0;
  std::size_t distinct_card = 0;
  std::size_t nonzero_count = 0;
  IndexSet uncovered;  ///< coordinates with no nonzero element
  std::vector<ComplexVector> basis;  ///< extracted per-i witnesses
  std::vector<DominanceMargin> margins;
  /// Strong-dominance check only: whether the extracted basis is independent.
  std::optional<bool> basis_independent;

  bool passed() const { return conclusion_verified.value_or(false); }
};

namespace detail {

inline HypothesisCheck check_all(std::string name, int n, const std::function<bool(int)>& pred) {
  HypothesisCheck h;
  h.name = std::move(name);
  h.failing = scenario::failing_indices(n, pred);
  h.holds = h.failing.empty();
  return h;
}

inline void finalize(TheoremReport& r) {
  r.hypotheses_hold = std::all_of(r.hypotheses.begin(), r.hypotheses.end(),
                                  [](const HypothesisCheck& h) { return h.holds; });
}

inline std::vector<HypothesisCheck> radiative_dominant(const Factorization& fac, int n, double tol) {
  return {check_all("radiative", n, [&](int i) { return scenario::is_i_radiative(fac, i, tol); }),
          check_all("dominant", n, [&](int i) { return scenario::is_i_dominant(fac, i, tol); })};
}

inline HypothesisCheck assignment_check(const Scenario& s, const IndexAssignment& assign, double tol) {
  HypothesisCheck h;
  h.name = "assignment_consistent";
  for (int i = 0; i < assign.n(); ++i) {
    const int j = assign.owner(i);
    bool heard = false;
    for (int k = 0; k < s.K() && !heard; ++k) {
      heard = std::abs(s.health_image(j, k)[i]) > tol;
    }
    if (!heard) {
      h.failing.push_back(i);
    }
  }
  h.holds = h.failing.empty() && assign.n() == s.n() && assign.N() == s.N();
  return h;
}

inline IndexSet uncovered_coordinates(const VectorSet& vs, double tol) {
  IndexSet out;
  for (Eigen::Index i = 0; i < vs.dim(); ++i) {
    const bool hit = std::any_of(vs.begin(), vs.end(), [&](const ComplexVector& v) { return std::abs(v[i]) > tol; });
    if (!hit) {
      out.push_back(static_cast<int>(i));
    }
  }
  return out;
}

inline std::size_t nonzero_count(const VectorSet& vs) {
  return static_cast<std::size_t>(
      std::count_if(vs.begin(), vs.end(), [](const ComplexVector& v) { return v.cwiseAbs().maxCoeff() > 0.0; }));
}

/// For each i, the element of largest modulus at i.
inline std::vector<ComplexVector> per_index_basis(const VectorSet& vs, double tol) {
  std::vector<ComplexVector> out;
  for (Eigen::Index i = 0; i < vs.dim(); ++i) {
    const ComplexVector* best = nullptr;
    double top = tol;
    for (const auto& v : vs) {
      if (std::abs(v[i]) > top) {
        top = std::abs(v[i]);
        best = &v;
      }
    }
    if (best != nullptr) {
      out.push_back(*best);
    }
  }
  return out;
}

inline void check_sensor(const Scenario& s, std::optional<int> failed) {
  if (failed && (*failed < 0 || *failed >= s.N())) {
    throw DimensionError("failed sensor index out of range");
  }
}

}  // namespace detail

/// B'(Z) is a basis of C^n plus 0. With a failed sensor that owns
/// coordinates the check flips: B'(Z) must not span.
///
/// Hypotheses are checked on the healthy factorization; failure zeroes the
/// sensor's readings before Z is built.
inline TheoremReport verify_thm_basis(const Scenario& s, const Factorization& fac, const IndexAssignment& assign,
                                      double tol = kDefaultTol, std::optional<int> failed = std::nullopt) {
  detail::check_sensor(s, failed);
  TheoremReport r;
  r.theorem = "basis";
  r.failed_sensor = failed;
  r.hypotheses = detail::radiative_dominant(fac, s.n(), tol);
  r.hypotheses.push_back(detail::assignment_check(s, assign, tol));
  detail::finalize(r);

  const bool owns = failed && assign.n_j(*failed) > 0;
  r.claim = owns ? "B'(Z) does not span C^n after sensor failure"
                 : "B'(Z) is a basis of C^n together with the zero vector";
  if (!r.hypotheses_hold) {
    return r;
  }
  const Scenario data = failed ? scenario::fail_sensor(s, *failed) : s;
  const VectorSet img = apply_Bprime(build_Z(data, fac, assign, tol));
  r.span = frames::span_certificate(img, tol, frames::SpanThreshold::relative);
  r.card = img.size();
  r.distinct_card = distinct_count(img);
  r.nonzero_count = detail::nonzero_count(img);
  r.uncovered = detail::uncovered_coordinates(img, 0.0);
  r.basis = detail::per_index_basis(img, 0.0);
  if (owns) {
    r.conclusion_verified = !r.span.spans && r.span.rank <= s.n() - 1;
  } else {
    r.conclusion_verified =
        r.span.spans && r.nonzero_count == static_cast<std::size_t>(s.n()) && r.uncovered.empty();
  }
  return r;
}

/// F'(Z) contains a multiplicative frame for C^n; with a failed sensor j
/// this additionally needs the scenario to be j-harmonious.
inline TheoremReport verify_thm_frame(const Scenario& s, const Factorization& fac, const IndexAssignment& assign,
                                      double tol = kDefaultTol, std::optional<int> failed = std::nullopt) {
  detail::check_sensor(s, failed);
  TheoremReport r;
  r.theorem = "frame";
  r.failed_sensor = failed;
  r.claim = "F'(Z) contains a multiplicative frame for C^n";
  r.hypotheses = detail::radiative_dominant(fac, s.n(), tol);
  r.hypotheses.push_back(detail::assignment_check(s, assign, tol));
  if (failed) {
    HypothesisCheck h;
    h.name = "harmonious_" + std::to_string(*failed + 1);
    h.failing = scenario::disjoint_indices(fac, assign, *failed, tol);
    h.holds = h.failing.empty();
    r.hypotheses.push_back(std::move(h));
  }
  detail::finalize(r);

  // Radiativity is needed to build Z at all; without it there is nothing to run.
  if (!r.hypotheses.front().holds) {
    return r;
  }
  const Scenario data = failed ? scenario::fail_sensor(s, *failed) : s;
  const VectorSet img = apply_Fprime(build_Z(data, fac, assign, tol));
  r.span = frames::span_certificate(img, tol, frames::SpanThreshold::relative);
  r.card = img.size();
  r.distinct_card = distinct_count(img);
  r.nonzero_count = detail::nonzero_count(img);
  r.uncovered = detail::uncovered_coordinates(img, 0.0);
  r.basis = detail::per_index_basis(img, 0.0);
  if (r.hypotheses_hold) {
    r.conclusion_verified = r.span.spans && r.uncovered.empty();
  }
  return r;
}

/// The full projective set X spans C^n (with a failed j-harmonious sensor
/// as well).
inline TheoremReport verify_thm_projective(const Scenario& s, const Factorization& fac,
                                           double tol = kDefaultTol, std::optional<int> failed = std::nullopt,
                                           const IndexAssignment* assign = nullptr) {
  detail::check_sensor(s, failed);
  TheoremReport r;
  r.theorem = "projective";
  r.failed_sensor = failed;
  r.claim = "X spans C^n";
  r.hypotheses = detail::radiative_dominant(fac, s.n(), tol);
  if (failed) {
    HypothesisCheck h;
    h.name = "harmonious_" + std::to_string(*failed + 1);
    if (assign == nullptr) {
      h.holds = false;
    } else {
      h.failing = scenario::disjoint_indices(fac, *assign, *failed, tol);
      h.holds = h.failing.empty();
    }
    r.hypotheses.push_back(std::move(h));
  }
  detail::finalize(r);

  const Scenario data = failed ? scenario::fail_sensor(s, *failed) : s;
  const VectorSet img = build_X(data).as_vectors();
  r.span = frames::span_certificate(img, tol, frames::SpanThreshold::relative);
  r.card = img.size();
  r.distinct_card = distinct_count(img);
  r.nonzero_count = detail::nonzero_count(img);
  r.uncovered = detail::uncovered_coordinates(img, tol);
  r.basis = detail::per_index_basis(img, tol);
  if (r.hypotheses_hold) {
    r.conclusion_verified = r.span.spans;
  }
  return r;
}

/// Optional per-sensor weights overriding loudness when choosing j_i
/// (e.g. sensor SNRs). Empty means plain loudness.
struct StrongOptions {
  std::vector<double> sensor_weights;
};

/// {w_{j,k}} is a multiplicative frame for C^n when N > 1, n <= N and every
/// i is radiative and strongly dominant. The report's basis holds
/// w_{j_i, k_i'} for each i; it is independent when the j_i are distinct,
/// but not necessarily otherwise, so independence is reported separately.
inline TheoremReport verify_thm_strong(const Scenario& s, const Factorization& fac, double tol = kDefaultTol,
                                       const StrongOptions& opts = {}) {
  const int n = s.n();
  const int n_s = s.N();
  TheoremReport r;
  r.theorem = "strong";
  r.claim = "{w_jk} is a multiplicative frame for C^n";
  r.hypotheses.push_back(HypothesisCheck{"N>1", n_s > 1, {}});
  r.hypotheses.push_back(HypothesisCheck{"n<=N", n <= n_s, {}});
  r.hypotheses.push_back(
      detail::check_all("radiative", n, [&](int i) { return scenario::is_i_radiative(fac, i, tol); }));
  r.hypotheses.push_back(detail::check_all(
      "strongly_dominant", n, [&](int i) { return scenario::is_strongly_i_dominant(fac, i, n_s, tol); }));
  detail::finalize(r);

  if (!opts.sensor_weights.empty() && static_cast<int>(opts.sensor_weights.size()) != n_s) {
    throw DimensionError("verify_thm_strong: need one weight per sensor");
  }
  auto weight = [&](int j) { return opts.sensor_weights.empty() ? 1.0 : opts.sensor_weights[static_cast<std::size_t>(j)]; };

  std::vector<ComplexVector> w;
  std::vector<frames::Label> labels;
  for (int j = 0; j < n_s; ++j) {
    for (int k = 0; k < s.K(); ++k) {
      w.push_back(frame_map_single(j, k, s));
      labels.emplace_back(j, k);
    }
  }
  const VectorSet wset(w, labels);
  r.span = frames::span_certificate(wset, tol, frames::SpanThreshold::relative);
  r.card = wset.size();
  r.distinct_card = distinct_count(wset);
  r.nonzero_count = detail::nonzero_count(wset);
  r.uncovered = detail::uncovered_coordinates(wset, tol);

  bool extracted = true;
  for (int i = 0; i < n; ++i) {
    DominanceMargin m;
    m.i = i;
    double top = -1.0;
    for (int j = 0; j < n_s; ++j) {
      const double g = weight(j) * std::abs(fac.gamma[static_cast<std::size_t>(j)][i]);
      if (g > top) {
        top = g;
        m.j_i = j;
      }
    }
    m.top = std::abs(fac.gamma[static_cast<std::size_t>(m.j_i)][i]);
    for (int l = 0; l < n_s; ++l) {
      if (l != m.j_i) {
        m.rival = std::max(m.rival, (n_s - 1) * std::abs(fac.gamma[static_cast<std::size_t>(l)][i]));
      }
    }
    try {
      m.k_i = radiative_time(fac, i, tol);
      r.basis.push_back(w[static_cast<std::size_t>(m.j_i * s.K() + m.k_i)]);
    } catch (const HypothesisError&) {
      extracted = false;
    }
    r.margins.push_back(m);
  }
  if (extracted && !r.basis.empty()) {
    const auto cert = frames::span_certificate(VectorSet(r.basis), tol, frames::SpanThreshold::relative);
    r.basis_independent = cert.spans && static_cast<int>(r.basis.size()) == n;
  }
  if (r.hypotheses_hold) {
    r.conclusion_verified = r.span.spans;
  }
  return r;
}

}  // namespace reactive::mappings
