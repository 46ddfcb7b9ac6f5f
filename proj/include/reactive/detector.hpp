#pragma once

// Threshold detector on the 28-dimensional health space, applied to basis
// and frame mapping outputs, and the condition / SNR-sweep statistics.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "reactive/mappings.hpp"
#include "reactive/rng.hpp"
#include "reactive/scenario.hpp"
#include "reactive/turbine.hpp"
#include "reactive/types.hpp"

namespace reactive::detector {

using turbine::kEngines;
using turbine::kHealthDim;
using turbine::kLinesPerEngine;

enum class MappingKind { basis, frame };

inline std::string to_string(MappingKind k) { return k == MappingKind::basis ? "basis" : "frame"; }

struct Baseline {
  MappingKind kind = MappingKind::basis;
  Eigen::VectorXd mu;  ///< per-coordinate nominal magnitude, all positive
};

struct DetectorThresholds {
  double fault_hi = 2.0;
  double dead_lo = 0.1;

  void validate() const {
    if (!(dead_lo > 0.0 && dead_lo < 1.0 && fault_hi > 1.0) || !std::isfinite(fault_hi)) {
      throw ConfigError("thresholds need 0 < dead_lo < 1 < fault_hi");
    }
  }
};

enum class Condition { normal, fault, failure };

inline std::string to_string(Condition c) {
  switch (c) {
    case Condition::normal: return "normal";
    case Condition::fault: return "fault";
    case Condition::failure: return "failure";
  }
  return "unknown";
}

inline Condition condition_of(const turbine::EngineState& st) {
  switch (st.kind) {
    case turbine::EngineState::Kind::normal: return Condition::normal;
    case turbine::EngineState::Kind::gear_fault: return Condition::fault;
    case turbine::EngineState::Kind::catastrophic_failure: return Condition::failure;
  }
  return Condition::normal;
}

/// Per-engine verdicts; several engines may report at once.
struct Verdict {
  std::array<Condition, kEngines> engines{};

  Condition engine(int e) const { return engines[static_cast<std::size_t>(e)]; }

  /// Compact form, e.g. "N N F X" (Normal, Normal, Fault, failure X).
  std::string code() const {
    std::string s;
    for (int e = 0; e < kEngines; ++e) {
      if (e > 0) {
        s += ' ';
      }
      const Condition c = engine(e);
      s += c == Condition::normal ? 'N' : (c == Condition::fault ? 'F' : 'X');
    }
    return s;
  }
};

/// Mapped magnitudes of one sample's per-sensor health images.
inline Eigen::VectorXd map_sample(const std::vector<ComplexVector>& health, const scenario::IndexAssignment& assign,
                                  MappingKind kind) {
  const ComplexVector out = kind == MappingKind::basis ? mappings::basis_map_health(health, assign)
                                                       : mappings::frame_map_health(health);
  return out.cwiseAbs();
}

inline Verdict detect(const Eigen::VectorXd& magnitudes, const Baseline& base, const DetectorThresholds& th) {
  if (magnitudes.size() != kHealthDim || base.mu.size() != kHealthDim) {
    throw DimensionError("detect: expected 28 coordinates");
  }
  Verdict v;
  for (int e = 0; e < kEngines; ++e) {
    bool all_dead = true;
    bool any_high = false;
    for (int l = 0; l < kLinesPerEngine; ++l) {
      const int i = e * kLinesPerEngine + l;
      all_dead = all_dead && magnitudes[i] < th.dead_lo * base.mu[i];
      any_high = any_high || magnitudes[i] > th.fault_hi * base.mu[i];
    }
    v.engines[static_cast<std::size_t>(e)] =
        all_dead ? Condition::failure : (any_high ? Condition::fault : Condition::normal);
  }
  return v;
}

inline Verdict detect(const ComplexVector& health, const Baseline& base, const DetectorThresholds& th) {
  return detect(Eigen::VectorXd(health.cwiseAbs()), base, th);
}

/// Mean mapped magnitude over a noise-free, all-normal dataset.
inline Baseline calibrate(const turbine::Dataset& ds, const scenario::IndexAssignment& assign, MappingKind kind) {
  if (ds.noise_sigma != 0.0) {
    throw ConfigError("calibrate: calibration data must be noise-free");
  }
  for (const auto& s : ds.samples) {
    for (const auto& e : ds.states.at(static_cast<std::size_t>(s.state)).engines) {
      if (e.kind != turbine::EngineState::Kind::normal) {
        throw ConfigError("calibrate: calibration data must be all-normal");
      }
    }
  }
  if (ds.samples.empty()) {
    throw ConfigError("calibrate: no samples");
  }
  Baseline b;
  b.kind = kind;
  b.mu = Eigen::VectorXd::Zero(kHealthDim);
  for (const auto& s : ds.samples) {
    b.mu += map_sample(s.health, assign, kind);
  }
  b.mu /= static_cast<double>(ds.samples.size());
  for (int i = 0; i < kHealthDim; ++i) {
    if (!(b.mu[i] > 0.0)) {
      throw ConfigError("calibrate: baseline coordinate " + std::to_string(i + 1) +
                        " is zero; line bins are mis-specified");
    }
  }
  return b;
}

/// Noise-free all-normal calibration run for a fleet and mixing matrix.
inline turbine::Dataset calibration_dataset(const std::vector<turbine::EngineModel>& fleet,
                                            const turbine::MixingMatrix& mix, turbine::SimConfig cfg, int samples = 4) {
  cfg.noise_sigma = 0.0;
  cfg.snr_db.reset();
  cfg.failed_sensors.clear();
  cfg.samples_per_state = samples;
  cfg.keep_spectra = false;
  return turbine::generate_dataset(fleet, mix, cfg, {turbine::FaultState::all_normal()});
}

// ---------------------------------------------------------------------------
// Scoring

/// Engine-1 tallies for one (pipeline, dataset, state) cell.
struct CellResult {
  std::size_t samples = 0;
  std::size_t normal = 0;
  std::size_t fault = 0;
  std::size_t failure = 0;
  std::size_t other_engine_alarms = 0;  ///< samples with a non-normal verdict on engines 2..4

  double pct(std::size_t c) const { return samples == 0 ? 0.0 : 100.0 * static_cast<double>(c) / static_cast<double>(samples); }
  std::size_t count(Condition c) const {
    return c == Condition::normal ? normal : (c == Condition::fault ? fault : failure);
  }
  /// Percentage whose engine-1 verdict equals the truth.
  double correct_pct(Condition truth) const { return pct(count(truth)); }
  /// Percentage reporting anything other than normal.
  double alarm_pct() const { return pct(fault + failure); }
  /// Under true failure, fault or failure both count.
  double combined_pct() const { return pct(fault + failure); }

  void add(const Verdict& v) {
    ++samples;
    switch (v.engine(0)) {
      case Condition::normal: ++normal; break;
      case Condition::fault: ++fault; break;
      case Condition::failure: ++failure; break;
    }
    for (int e = 1; e < kEngines; ++e) {
      if (v.engine(e) != Condition::normal) {
        ++other_engine_alarms;
        break;
      }
    }
  }
};

struct Pipelines {
  scenario::IndexAssignment assign;
  Baseline basis;
  Baseline frame;
  DetectorThresholds thresholds;

  const Baseline& baseline(MappingKind k) const { return k == MappingKind::basis ? basis : frame; }
};

inline Pipelines calibrate_pipelines(const turbine::Dataset& calibration, const DetectorThresholds& th) {
  th.validate();
  Pipelines p;
  p.assign = turbine::index_assignment();
  p.basis = calibrate(calibration, p.assign, MappingKind::basis);
  p.frame = calibrate(calibration, p.assign, MappingKind::frame);
  p.thresholds = th;
  return p;
}

struct SampleVerdicts {
  int state = 0;
  int index = 0;
  Verdict basis;
  Verdict frame;
};

inline std::vector<SampleVerdicts> classify_dataset(const turbine::Dataset& ds, const Pipelines& p) {
  std::vector<SampleVerdicts> out;
  out.reserve(ds.samples.size());
  for (const auto& s : ds.samples) {
    SampleVerdicts v;
    v.state = s.state;
    v.index = s.index;
    v.basis = detect(map_sample(s.health, p.assign, MappingKind::basis), p.basis, p.thresholds);
    v.frame = detect(map_sample(s.health, p.assign, MappingKind::frame), p.frame, p.thresholds);
    out.push_back(v);
  }
  return out;
}

/// One dataset of the Figure-7 grid: a noise level and a sensor condition.
struct ConditionData {
  std::string noise;   ///< "low" or "high"
  std::string sensor;  ///< "good" or "s1_failed"
  const turbine::Dataset* data = nullptr;
};

struct ConditionRow {
  std::string state;   ///< fault state name
  Condition truth = Condition::normal;
  std::string sensor;
  std::map<std::string, CellResult> cells;  ///< key "<pipeline>-<noise>"
};

struct DetectionReport {
  DetectorThresholds thresholds;
  std::vector<ConditionRow> rows;  ///< state-major, then sensor condition
  std::map<std::string, std::vector<SampleVerdicts>> verdicts;  ///< key "<noise>/<sensor>"

  const ConditionRow& row(const std::string& state, const std::string& sensor) const {
    for (const auto& r : rows) {
      if (r.state == state && r.sensor == sensor) {
        return r;
      }
    }
    throw ConfigError("no row for " + state + "/" + sensor);
  }
};

/// Scores every dataset of the grid with both pipelines. The datasets must
/// share one list of fault states.
inline DetectionReport run_conditions(const std::vector<ConditionData>& grid, const Pipelines& p) {
  if (grid.empty()) {
    throw ConfigError("run_conditions: no datasets");
  }
  DetectionReport rep;
  rep.thresholds = p.thresholds;
  const auto& states = grid.front().data->states;
  std::vector<std::string> sensors;
  for (const auto& g : grid) {
    if (g.data == nullptr) {
      throw ConfigError("run_conditions: missing dataset for " + g.noise + "/" + g.sensor);
    }
    if (g.data->states.size() != states.size()) {
      throw ConfigError("run_conditions: datasets disagree on fault states");
    }
    if (std::find(sensors.begin(), sensors.end(), g.sensor) == sensors.end()) {
      sensors.push_back(g.sensor);
    }
  }
  for (std::size_t si = 0; si < states.size(); ++si) {
    for (const auto& sensor : sensors) {
      ConditionRow r;
      r.state = states[si].name;
      r.truth = condition_of(states[si].engines.front());
      r.sensor = sensor;
      rep.rows.push_back(r);
    }
  }
  for (const auto& g : grid) {
    auto verdicts = classify_dataset(*g.data, p);
    for (const auto& v : verdicts) {
      const std::size_t ri = static_cast<std::size_t>(v.state) * sensors.size() +
                             static_cast<std::size_t>(std::find(sensors.begin(), sensors.end(), g.sensor) - sensors.begin());
      auto& row = rep.rows[ri];
      row.cells["basis-" + g.noise].add(v.basis);
      row.cells["frame-" + g.noise].add(v.frame);
    }
    rep.verdicts[g.noise + "/" + g.sensor] = std::move(verdicts);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// SNR sweep

struct SweepPoint {
  double snr_db = 0.0;
  MappingKind pipeline = MappingKind::basis;
  std::string sensor;  ///< "good" or "s1_failed"
  double p_detect = 0.0;  ///< P(engine-1 verdict normal) on normal data
  double p_fa = 0.0;      ///< P(engine-1 verdict failure) on normal data
  double p_alarm = 0.0;   ///< P(engine-1 verdict fault or failure)
  std::size_t samples = 0;
};

struct SnrGrid {
  double lo = -20.0;
  double hi = 0.0;
  double step = 1.0;

  std::vector<double> points() const {
    if (!(step > 0.0) || hi < lo || !std::isfinite(lo) || !std::isfinite(hi)) {
      throw ConfigError("snr grid needs lo <= hi and step > 0");
    }
    std::vector<double> out;
    const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= count; ++i) {
      out.push_back(lo + static_cast<double>(i) * step);
    }
    if (out.empty()) {
      throw ConfigError("snr grid is empty");
    }
    return out;
  }
};

/// Normal-state data at every SNR, with all sensors good and with sensor 1
/// failed; the same noise streams are used for both sensor conditions.
inline std::vector<SweepPoint> snr_sweep(const std::vector<turbine::EngineModel>& fleet,
                                         const turbine::MixingMatrix& mix, const turbine::SimConfig& base_cfg,
                                         const SnrGrid& grid, const DetectorThresholds& th, int failed_sensor = 0) {
  const auto snrs = grid.points();
  const Pipelines p = calibrate_pipelines(calibration_dataset(fleet, mix, base_cfg), th);
  std::vector<SweepPoint> out;
  for (std::size_t pi = 0; pi < snrs.size(); ++pi) {
    for (const bool failed : {false, true}) {
      turbine::SimConfig cfg = base_cfg;
      cfg.snr_db = snrs[pi];
      cfg.rng_seed = rng::derive_key(base_cfg.rng_seed, {0x737765ULL, pi});
      cfg.failed_sensors.clear();
      if (failed) {
        cfg.failed_sensors.insert(failed_sensor);
      }
      cfg.keep_spectra = false;
      const auto ds = turbine::generate_dataset(fleet, mix, cfg, {turbine::FaultState::all_normal()});
      CellResult basis;
      CellResult frame;
      for (const auto& v : classify_dataset(ds, p)) {
        basis.add(v.basis);
        frame.add(v.frame);
      }
      for (const auto kind : {MappingKind::basis, MappingKind::frame}) {
        const CellResult& c = kind == MappingKind::basis ? basis : frame;
        SweepPoint sp;
        sp.snr_db = snrs[pi];
        sp.pipeline = kind;
        sp.sensor = failed ? "s" + std::to_string(failed_sensor + 1) + "_failed" : "good";
        sp.samples = c.samples;
        sp.p_detect = static_cast<double>(c.normal) / static_cast<double>(c.samples);
        sp.p_fa = static_cast<double>(c.failure) / static_cast<double>(c.samples);
        sp.p_alarm = static_cast<double>(c.fault + c.failure) / static_cast<double>(c.samples);
        out.push_back(sp);
      }
    }
  }
  return out;
}

}  // namespace reactive::detector
