#pragma once

// JSON codecs for vector sets, scenarios, factorizations and theorem
// reports. Indices are 1-based on disk and 0-based in memory.

#include <algorithm>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "reactive/frame.hpp"
#include "reactive/mappings.hpp"
#include "reactive/scenario.hpp"
#include "reactive/types.hpp"

namespace reactive::io {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Scalars and vectors

/// Real values are written as plain numbers.
inline json complex_to_json(Complex z) {
  if (z.imag() == 0.0) {
    return z.real();
  }
  return json{{"re", z.real()}, {"im", z.imag()}};
}

/// Accepts {"re": x, "im": y} (either key optional) or a plain number.
inline Complex complex_from_json(const json& j) {
  if (j.is_number()) {
    return {j.get<double>(), 0.0};
  }
  if (j.is_object()) {
    for (const auto& [key, value] : j.items()) {
      if (key != "re" && key != "im") {
        throw ConfigError("complex number has unknown key '" + key + "'");
      }
      if (!value.is_number()) {
        throw ConfigError("complex component '" + key + "' is not a number");
      }
    }
    return {j.value("re", 0.0), j.value("im", 0.0)};
  }
  throw ConfigError("expected a number or {\"re\", \"im\"} object");
}

inline json vector_to_json(const ComplexVector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    a.push_back(complex_to_json(v[i]));
  }
  return a;
}

inline ComplexVector vector_from_json(const json& j) {
  if (!j.is_array()) {
    throw ConfigError("expected an array of complex numbers");
  }
  ComplexVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = complex_from_json(j[i]);
  }
  return v;
}

inline json vectors_to_json(const std::vector<ComplexVector>& vs) {
  json a = json::array();
  for (const auto& v : vs) {
    a.push_back(vector_to_json(v));
  }
  return a;
}

inline std::vector<ComplexVector> vectors_from_json(const json& j, Eigen::Index dim) {
  if (!j.is_array()) {
    throw ConfigError("expected an array of vectors");
  }
  std::vector<ComplexVector> out;
  for (const auto& e : j) {
    out.push_back(vector_from_json(e));
    if (dim >= 0 && out.back().size() != dim) {
      throw ConfigError("vector " + std::to_string(out.size()) + " has length " +
                        std::to_string(out.back().size()) + ", expected " + std::to_string(dim));
    }
  }
  return out;
}

/// 0-based set -> 1-based array.
inline json index_set_to_json(const std::vector<int>& s) {
  json a = json::array();
  for (int i : s) {
    a.push_back(i + 1);
  }
  return a;
}

/// Sorted, without repeats.
inline std::vector<int> index_set_from_json(const json& j, int upper, const std::string& what) {
  if (!j.is_array()) {
    throw ConfigError(what + " must be an array of 1-based indices");
  }
  std::vector<int> out;
  for (const auto& e : j) {
    if (!e.is_number_integer()) {
      throw ConfigError(what + " contains a non-integer");
    }
    const auto v = e.get<long long>();
    if (v < 1 || v > upper) {
      throw ConfigError(what + " index " + std::to_string(v) + " outside 1.." + std::to_string(upper));
    }
    out.push_back(static_cast<int>(v - 1));
  }
  std::sort(out.begin(), out.end());
  if (std::adjacent_find(out.begin(), out.end()) != out.end()) {
    throw ConfigError(what + " repeats an index");
  }
  return out;
}

inline const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw ConfigError(std::string("missing field '") + key + "'");
  }
  return j.at(key);
}

inline int require_positive_int(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_number_integer() || v.get<long long>() <= 0) {
    throw ConfigError(std::string("field '") + key + "' must be a positive integer");
  }
  return v.get<int>();
}

// ---------------------------------------------------------------------------
// VectorSet: {"dim": n, "vectors": [[z, ...], ...], "labels": [[j, k], ...]}

inline json vector_set_to_json(const frames::VectorSet& vs) {
  json j{{"dim", vs.dim()}, {"vectors", vectors_to_json(vs.vectors())}};
  if (vs.has_labels()) {
    json labels = json::array();
    for (const auto& [a, b] : vs.labels()) {
      labels.push_back({a, b});
    }
    j["labels"] = labels;
  }
  return j;
}

inline frames::VectorSet vector_set_from_json(const json& j) {
  const int dim = require_positive_int(j, "dim");
  auto vs = vectors_from_json(require(j, "vectors"), dim);
  std::vector<frames::Label> labels;
  if (j.contains("labels")) {
    for (const auto& l : j.at("labels")) {
      if (!l.is_array() || l.size() != 2 || !l[0].is_number_integer() || !l[1].is_number_integer()) {
        throw ConfigError("labels must be [j, k] integer pairs");
      }
      labels.emplace_back(l[0].get<int>(), l[1].get<int>());
    }
  }
  return frames::VectorSet(std::move(vs), std::move(labels));
}

// ---------------------------------------------------------------------------
// Scenario
//
// {"M", "N", "K", "covering": [[f...] per sensor], "partition": [...],
//  "readings": [[v_{j,1}, ..., v_{j,K}] per sensor],
//  "health": {"selection": [[i, f, scale], ...]} | {"matrix": [[...] per row]} | {"identity": true},
//  "factorization": {"gamma_hat": [...], "alpha_hat": [...]}}   (optional)

inline json health_map_to_json(const scenario::HealthMap& h) {
  switch (h.kind()) {
    case scenario::HealthMapKind::selection_matrix: {
      json rows = json::array();
      for (std::size_t i = 0; i < h.rows().size(); ++i) {
        const auto& r = h.rows()[i];
        rows.push_back({static_cast<int>(i) + 1, r.f + 1, complex_to_json(r.scale)});
      }
      return json{{"selection", rows}};
    }
    case scenario::HealthMapKind::general_linear: {
      json rows = json::array();
      for (Eigen::Index i = 0; i < h.matrix().rows(); ++i) {
        rows.push_back(vector_to_json(h.matrix().row(i).transpose()));
      }
      return json{{"matrix", rows}};
    }
    case scenario::HealthMapKind::opaque:
      break;
  }
  throw IoError("opaque health maps cannot be serialized");
}

inline scenario::HealthMap health_map_from_json(const json& j, int m) {
  if (!j.is_object()) {
    throw ConfigError("health must be an object");
  }
  if (j.contains("identity")) {
    return scenario::HealthMap::identity(m);
  }
  if (j.contains("selection")) {
    const json& rows = j.at("selection");
    if (!rows.is_array() || rows.empty()) {
      throw ConfigError("health.selection must be a nonempty array");
    }
    std::vector<scenario::SelectionRow> out(rows.size());
    std::vector<bool> seen(rows.size(), false);
    for (const auto& r : rows) {
      if (!r.is_array() || (r.size() != 2 && r.size() != 3) || !r[0].is_number_integer() ||
          !r[1].is_number_integer()) {
        throw ConfigError("health.selection rows are [i, f] or [i, f, scale]");
      }
      const auto i = r[0].get<long long>();
      const auto f = r[1].get<long long>();
      if (i < 1 || i > static_cast<long long>(rows.size()) || seen[static_cast<std::size_t>(i - 1)]) {
        throw ConfigError("health.selection row index " + std::to_string(i) + " is out of range or repeated");
      }
      if (f < 1 || f > m) {
        throw ConfigError("health.selection parameter " + std::to_string(f) + " outside 1.." + std::to_string(m));
      }
      seen[static_cast<std::size_t>(i - 1)] = true;
      out[static_cast<std::size_t>(i - 1)] =
          scenario::SelectionRow{static_cast<int>(f - 1), r.size() == 3 ? complex_from_json(r[2]) : Complex(1.0)};
    }
    return scenario::HealthMap::selection(m, std::move(out));
  }
  if (j.contains("matrix")) {
    const auto rows = vectors_from_json(j.at("matrix"), m);
    if (rows.empty()) {
      throw ConfigError("health.matrix is empty");
    }
    ComplexMatrix a(static_cast<Eigen::Index>(rows.size()), m);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      a.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    }
    return scenario::HealthMap::linear(std::move(a));
  }
  throw ConfigError("health needs one of 'identity', 'selection' or 'matrix'");
}

inline json factorization_to_json(const scenario::Factorization& fac) {
  json j{{"gamma_hat", vectors_to_json(fac.gamma_hat)}, {"alpha_hat", vectors_to_json(fac.alpha_hat)}};
  if (!fac.gamma.empty()) {
    j["gamma"] = vectors_to_json(fac.gamma);
    j["alpha"] = vectors_to_json(fac.alpha);
  }
  return j;
}

inline scenario::Factorization factorization_from_json(const json& j, int m, int n_s, int k_t) {
  scenario::Factorization fac;
  fac.gamma_hat = vectors_from_json(require(j, "gamma_hat"), m);
  fac.alpha_hat = vectors_from_json(require(j, "alpha_hat"), m);
  if (static_cast<int>(fac.gamma_hat.size()) != n_s || static_cast<int>(fac.alpha_hat.size()) != k_t) {
    throw ConfigError("factorization needs N gamma_hat and K alpha_hat vectors");
  }
  return fac;
}

struct ScenarioDocument {
  scenario::Scenario scenario;
  std::optional<scenario::Factorization> factorization;  ///< pre-separable factors, if supplied
};

inline json scenario_to_json(const scenario::Scenario& s, const std::optional<scenario::Factorization>& fac = {}) {
  json cover = json::array();
  json part = json::array();
  json readings = json::array();
  for (int j = 0; j < s.N(); ++j) {
    cover.push_back(index_set_to_json(s.covering()[static_cast<std::size_t>(j)]));
    part.push_back(index_set_to_json(s.partition()[static_cast<std::size_t>(j)]));
    json row = json::array();
    for (int k = 0; k < s.K(); ++k) {
      row.push_back(vector_to_json(s.reading(j, k)));
    }
    readings.push_back(row);
  }
  json out{{"M", s.M()},           {"N", s.N()},         {"K", s.K()},
           {"covering", cover},    {"partition", part},  {"readings", readings},
           {"health", health_map_to_json(s.health())}};
  if (fac) {
    out["factorization"] = factorization_to_json(*fac);
  }
  return out;
}

inline ScenarioDocument scenario_from_json(const json& j) {
  const int m = require_positive_int(j, "M");
  const int n_s = require_positive_int(j, "N");
  const int k_t = require_positive_int(j, "K");
  auto sets = [&](const char* key) {
    const json& a = require(j, key);
    if (!a.is_array() || a.size() != static_cast<std::size_t>(n_s)) {
      throw ConfigError(std::string("'") + key + "' needs one index set per sensor");
    }
    std::vector<scenario::IndexSet> out;
    for (std::size_t s = 0; s < a.size(); ++s) {
      out.push_back(index_set_from_json(a[s], m, std::string(key) + "[" + std::to_string(s + 1) + "]"));
    }
    return out;
  };
  auto cover = sets("covering");
  auto part = sets("partition");
  const json& r = require(j, "readings");
  if (!r.is_array() || r.size() != static_cast<std::size_t>(n_s)) {
    throw ConfigError("'readings' needs one row per sensor");
  }
  std::vector<ComplexVector> readings;
  for (std::size_t s = 0; s < r.size(); ++s) {
    auto row = vectors_from_json(r[s], m);
    if (row.size() != static_cast<std::size_t>(k_t)) {
      throw ConfigError("readings[" + std::to_string(s + 1) + "] needs K vectors");
    }
    for (auto& v : row) {
      readings.push_back(std::move(v));
    }
  }
  auto health = j.contains("health") ? health_map_from_json(j.at("health"), m) : scenario::HealthMap::identity(m);
  ScenarioDocument doc{scenario::Scenario(m, n_s, k_t, std::move(cover), std::move(part), std::move(readings),
                                          std::move(health)),
                       std::nullopt};
  if (j.contains("factorization")) {
    doc.factorization = factorization_from_json(j.at("factorization"), m, n_s, k_t);
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Reports

inline json span_to_json(const frames::SpanCertificate& c) {
  json j{{"spans", c.spans}, {"sigma_min", c.sigma_min}, {"sigma_max", c.sigma_max}, {"rank", c.rank}};
  j["witness"] = c.witness ? vector_to_json(*c.witness) : json(nullptr);
  return j;
}

inline json theorem_report_to_json(const mappings::TheoremReport& r) {
  json hyps = json::array();
  for (const auto& h : r.hypotheses) {
    hyps.push_back({{"name", h.name}, {"holds", h.holds}, {"failing", index_set_to_json(h.failing)}});
  }
  json margins = json::array();
  for (const auto& m : r.margins) {
    margins.push_back({{"i", m.i + 1},
                       {"sensor", m.j_i + 1},
                       {"time", m.k_i + 1},
                       {"top", m.top},
                       {"rival", m.rival},
                       {"strict", m.strict()}});
  }
  json j{{"theorem", r.theorem},
         {"claim", r.claim},
         {"failed_sensor", r.failed_sensor ? json(*r.failed_sensor + 1) : json(nullptr)},
         {"hypotheses", hyps},
         {"hypotheses_hold", r.hypotheses_hold},
         {"conclusion_verified", r.conclusion_verified ? json(*r.conclusion_verified) : json(nullptr)},
         {"passed", r.passed()},
         {"span", span_to_json(r.span)},
         {"card", r.card},
         {"distinct_card", r.distinct_card},
         {"nonzero_count", r.nonzero_count},
         {"uncovered", index_set_to_json(r.uncovered)},
         {"basis", vectors_to_json(r.basis)},
         {"margins", margins}};
  if (r.basis_independent) {
    j["basis_independent"] = *r.basis_independent;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Files

/// Parses a JSON file; parse errors carry the byte offset.
inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path);
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError(path + ": parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write " + path);
  }
  out << text;
  if (!out) {
    throw IoError("write failed for " + path);
  }
}

inline void write_json_file(const std::string& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

inline ScenarioDocument read_scenario_file(const std::string& path) {
  const json j = read_json_file(path);
  try {
    return scenario_from_json(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  } catch (const DimensionError& e) {
    throw ConfigError(path + ": " + e.what());
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace reactive::io
