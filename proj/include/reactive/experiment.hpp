#pragma once

// Run configuration for the turbine experiments, the four-condition dataset
// bundle, and the results / sweep file formats.

#include <algorithm>
#include <filesystem>
#include <iterator>
#include <string>
#include <utility>
#include <vector>

#include "reactive/dataset_io.hpp"
#include "reactive/detector.hpp"

namespace reactive::io {

inline constexpr const char* kBundleFormat = "reactive-bundle/1";

/// Every field has a default; a config file only lists what it overrides.
struct RunConfig {
  std::uint64_t seed = 1;
  int samples_per_state = 1024;
  int dft_size = 8192;
  double sample_rate = 32768.0;
  turbine::MixingMatrix mixing = turbine::MixingMatrix::uniform(0.1);
  turbine::MixingMatrix sweep_mixing = turbine::MixingMatrix::uniform(0.5623);
  double low_noise_snr_db = 6.0;
  double high_noise_snr_db = -12.0;
  int failed_sensor = 0;  ///< 0-based sensor removed in the failed-sensor conditions
  int gear = 0;           ///< 0-based gear index of the gear-fault state
  double gear_multiplier = 10.0;
  int calibration_samples = 4;
  bool keep_spectra = false;
  detector::DetectorThresholds thresholds;
  detector::SnrGrid sweep_grid;
  int sweep_samples = 128;

  void validate() const {
    if (samples_per_state <= 0 || sweep_samples <= 0 || calibration_samples <= 0) {
      throw ConfigError("sample counts must be positive");
    }
    if (failed_sensor < 0 || failed_sensor >= turbine::kSensors) {
      throw ConfigError("failed_sensor must be 1..4");
    }
    turbine::EngineState::gear_fault(gear, gear_multiplier);
    mixing.validate();
    sweep_mixing.validate();
    thresholds.validate();
    sweep_grid.points();
    base_sim().validate();
  }

  turbine::SimConfig base_sim() const {
    turbine::SimConfig c;
    c.dft_size = dft_size;
    c.sample_rate = sample_rate;
    c.rng_seed = seed;
    c.samples_per_state = samples_per_state;
    c.keep_spectra = keep_spectra;
    return c;
  }

  std::string failed_label() const { return "s" + std::to_string(failed_sensor + 1) + "_failed"; }
};

inline json run_config_to_json(const RunConfig& c) {
  return json{{"seed", c.seed},
              {"samples_per_state", c.samples_per_state},
              {"dft_size", c.dft_size},
              {"sample_rate", c.sample_rate},
              {"mixing", mixing_to_json(c.mixing)},
              {"sweep_mixing", mixing_to_json(c.sweep_mixing)},
              {"low_noise_snr_db", c.low_noise_snr_db},
              {"high_noise_snr_db", c.high_noise_snr_db},
              {"snr_reference", kSnrReference},
              {"failed_sensor", c.failed_sensor + 1},
              {"gear", c.gear + 1},
              {"gear_multiplier", c.gear_multiplier},
              {"calibration_samples", c.calibration_samples},
              {"keep_spectra", c.keep_spectra},
              {"thresholds", {{"fault_hi", c.thresholds.fault_hi}, {"dead_lo", c.thresholds.dead_lo}}},
              {"sweep", {{"lo", c.sweep_grid.lo}, {"hi", c.sweep_grid.hi}, {"step", c.sweep_grid.step},
                         {"samples", c.sweep_samples}}}};
}

inline RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) {
    throw ConfigError("config must be a JSON object");
  }
  RunConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "seed") {
        c.seed = v.get<std::uint64_t>();
      } else if (key == "samples_per_state") {
        c.samples_per_state = v.get<int>();
      } else if (key == "dft_size") {
        c.dft_size = v.get<int>();
      } else if (key == "sample_rate") {
        c.sample_rate = v.get<double>();
      } else if (key == "mixing") {
        c.mixing = mixing_from_json(v);
      } else if (key == "sweep_mixing") {
        c.sweep_mixing = mixing_from_json(v);
      } else if (key == "low_noise_snr_db") {
        c.low_noise_snr_db = v.get<double>();
      } else if (key == "high_noise_snr_db") {
        c.high_noise_snr_db = v.get<double>();
      } else if (key == "failed_sensor") {
        c.failed_sensor = v.get<int>() - 1;
      } else if (key == "gear") {
        c.gear = v.get<int>() - 1;
      } else if (key == "gear_multiplier") {
        c.gear_multiplier = v.get<double>();
      } else if (key == "calibration_samples") {
        c.calibration_samples = v.get<int>();
      } else if (key == "keep_spectra") {
        c.keep_spectra = v.get<bool>();
      } else if (key == "thresholds") {
        c.thresholds.fault_hi = v.value("fault_hi", c.thresholds.fault_hi);
        c.thresholds.dead_lo = v.value("dead_lo", c.thresholds.dead_lo);
      } else if (key == "sweep") {
        c.sweep_grid.lo = v.value("lo", c.sweep_grid.lo);
        c.sweep_grid.hi = v.value("hi", c.sweep_grid.hi);
        c.sweep_grid.step = v.value("step", c.sweep_grid.step);
        c.sweep_samples = v.value("samples", c.sweep_samples);
      } else if (key == "snr_reference") {
        // Echoed for readers; not an input.
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

inline RunConfig read_run_config(const std::string& path) {
  const json j = read_json_file(path);
  try {
    return run_config_from_json(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

/// Parses "LO:HI:STEP".
inline detector::SnrGrid parse_snr_range(const std::string& text) {
  detector::SnrGrid g;
  std::vector<double> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(':', start);
    const std::string piece = text.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    char* end = nullptr;
    const double v = std::strtod(piece.c_str(), &end);
    if (piece.empty() || *end != '\0') {
      throw ConfigError("--snr-range expects LO:HI:STEP, got '" + text + "'");
    }
    parts.push_back(v);
    if (pos == std::string::npos) {
      break;
    }
    start = pos + 1;
  }
  if (parts.size() != 3) {
    throw ConfigError("--snr-range expects LO:HI:STEP, got '" + text + "'");
  }
  g.lo = parts[0];
  g.hi = parts[1];
  g.step = parts[2];
  g.points();
  return g;
}

// ---------------------------------------------------------------------------
// Four-condition bundle

struct ConditionSpec {
  std::string noise;   ///< "low" or "high"
  std::string sensor;  ///< "good" or "s<j>_failed"
  turbine::SimConfig sim;

  std::string name() const { return noise + "_" + sensor; }
};

/// Conditions in canonical order: low/good, low/failed, high/good, high/failed.
/// Each condition draws its noise from its own sub-seed.
inline std::vector<ConditionSpec> condition_specs(const RunConfig& c) {
  std::vector<ConditionSpec> out;
  std::uint64_t tag = 0;
  for (const auto& [noise, snr] : {std::pair<const char*, double>{"low", c.low_noise_snr_db},
                                   std::pair<const char*, double>{"high", c.high_noise_snr_db}}) {
    for (const bool failed : {false, true}) {
      ConditionSpec s;
      s.noise = noise;
      s.sensor = failed ? c.failed_label() : "good";
      s.sim = c.base_sim();
      s.sim.snr_db = snr;
      s.sim.rng_seed = rng::derive_key(c.seed, {0x636f6e64ULL, tag++});
      if (failed) {
        s.sim.failed_sensors.insert(c.failed_sensor);
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

struct Bundle {
  RunConfig config;
  std::vector<ConditionSpec> conditions;
  std::vector<turbine::Dataset> datasets;  ///< parallel to conditions
};

inline Bundle generate_bundle(const RunConfig& c) {
  Bundle b;
  b.config = c;
  b.conditions = condition_specs(c);
  const auto states = turbine::standard_states(c.gear, c.gear_multiplier);
  for (const auto& spec : b.conditions) {
    b.datasets.push_back(turbine::generate_dataset(turbine::default_fleet(), c.mixing, spec.sim, states));
  }
  return b;
}

inline void write_bundle(const std::filesystem::path& dir, const Bundle& b) {
  json conds = json::array();
  for (std::size_t i = 0; i < b.conditions.size(); ++i) {
    const auto& spec = b.conditions[i];
    write_dataset(dir / spec.name(), b.datasets[i]);
    conds.push_back({{"name", spec.name()},
                     {"noise", spec.noise},
                     {"sensor", spec.sensor},
                     {"snr_db", *spec.sim.snr_db},
                     {"dir", spec.name()}});
  }
  write_json_file((dir / "bundle.json").string(),
                  json{{"format", kBundleFormat}, {"config", run_config_to_json(b.config)}, {"conditions", conds}});
}

inline Bundle read_bundle(const std::filesystem::path& dir) {
  const json j = read_json_file((dir / "bundle.json").string());
  Bundle b;
  try {
    if (require(j, "format").get<std::string>() != kBundleFormat) {
      throw ConfigError("unsupported bundle format");
    }
    b.config = run_config_from_json(require(j, "config"));
    const auto expected = condition_specs(b.config);
    const json& conds = require(j, "conditions");
    if (!conds.is_array() || conds.size() != expected.size()) {
      throw ConfigError("bundle must list " + std::to_string(expected.size()) + " conditions");
    }
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (require(conds[i], "name").get<std::string>() != expected[i].name()) {
        throw ConfigError("missing condition " + expected[i].name());
      }
      b.conditions.push_back(expected[i]);
      b.datasets.push_back(read_dataset(dir / require(conds[i], "dir").get<std::string>()));
    }
  } catch (const json::exception& e) {
    throw ConfigError((dir / "bundle.json").string() + ": " + e.what());
  }
  return b;
}

// ---------------------------------------------------------------------------
// Detection results

inline detector::Pipelines calibrated_pipelines(const RunConfig& c) {
  return detector::calibrate_pipelines(
      detector::calibration_dataset(turbine::default_fleet(), c.mixing, c.base_sim(), c.calibration_samples),
      c.thresholds);
}

inline detector::DetectionReport detect_bundle(const Bundle& b) {
  std::vector<detector::ConditionData> grid;
  for (std::size_t i = 0; i < b.conditions.size(); ++i) {
    grid.push_back({b.conditions[i].noise, b.conditions[i].sensor, &b.datasets[i]});
  }
  return detector::run_conditions(grid, calibrated_pipelines(b.config));
}

inline const std::vector<std::string>& result_columns() {
  static const std::vector<std::string> cols{"basis-low", "frame-low", "basis-high", "frame-high"};
  return cols;
}

/// Figure-7 layout: one row per (engine state, sensor condition), correct
/// detection percentages per pipeline and noise level, plus the frame
/// pipeline's fault-or-failure rate on failure rows.
inline std::string results_csv(const detector::DetectionReport& rep) {
  std::string out = "state,sensor";
  for (const auto& c : result_columns()) {
    out += "," + c;
  }
  out += ",frame-low-combined,frame-high-combined\n";
  for (const auto& r : rep.rows) {
    out += r.state + "," + r.sensor;
    for (const auto& c : result_columns()) {
      out += "," + fmt_double(r.cells.at(c).correct_pct(r.truth));
    }
    for (const char* c : {"frame-low", "frame-high"}) {
      out += ",";
      if (r.truth == detector::Condition::failure) {
        out += fmt_double(r.cells.at(c).combined_pct());
      }
    }
    out += "\n";
  }
  return out;
}

inline json results_json(const detector::DetectionReport& rep, const RunConfig& c) {
  json rows = json::array();
  for (const auto& r : rep.rows) {
    json cells = json::object();
    for (const auto& [key, cell] : r.cells) {
      cells[key] = {{"samples", cell.samples},
                    {"normal", cell.normal},
                    {"fault", cell.fault},
                    {"failure", cell.failure},
                    {"other_engine_alarms", cell.other_engine_alarms},
                    {"correct_pct", cell.correct_pct(r.truth)},
                    {"false_alarm_pct", r.truth == detector::Condition::normal ? cell.alarm_pct() : 0.0},
                    {"combined_pct", cell.combined_pct()}};
    }
    rows.push_back({{"state", r.state}, {"truth", detector::to_string(r.truth)}, {"sensor", r.sensor},
                    {"cells", cells}});
  }
  json verdicts = json::object();
  for (const auto& [key, list] : rep.verdicts) {
    json a = json::array();
    for (const auto& v : list) {
      a.push_back({v.state + 1, v.index + 1, v.basis.code(), v.frame.code()});
    }
    verdicts[key] = a;
  }
  return json{{"config", run_config_to_json(c)},
              {"scoring", "engine-1 verdict against the engine-1 ground truth"},
              {"rows", rows},
              {"verdict_columns", {"state", "sample", "basis", "frame"}},
              {"verdicts", verdicts}};
}

// ---------------------------------------------------------------------------
// Sweep

inline std::string sweep_csv(const std::vector<detector::SweepPoint>& pts) {
  std::string out = "snr_db,pipeline,sensor_condition,p_detect,p_fa\n";
  for (const auto& p : pts) {
    out += fmt_double(p.snr_db) + "," + detector::to_string(p.pipeline) + "," + p.sensor + "," +
           fmt_double(p.p_detect) + "," + fmt_double(p.p_fa) + "\n";
  }
  return out;
}

/// One whitespace-separated plot file per (pipeline, sensor condition).
inline std::vector<std::pair<std::string, std::string>> sweep_plot_files(const std::vector<detector::SweepPoint>& pts) {
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& p : pts) {
    const std::string name = "sweep_" + detector::to_string(p.pipeline) + "_" + p.sensor + ".dat";
    auto it = std::find_if(files.begin(), files.end(), [&](const auto& f) { return f.first == name; });
    if (it == files.end()) {
      files.emplace_back(name, "# snr_db p_detect p_fa\n");
      it = std::prev(files.end());
    }
    it->second += fmt_double(p.snr_db) + " " + fmt_double(p.p_detect) + " " + fmt_double(p.p_fa) + "\n";
  }
  return files;
}

inline std::vector<detector::SweepPoint> run_sweep(const RunConfig& c) {
  turbine::SimConfig sim = c.base_sim();
  sim.samples_per_state = c.sweep_samples;
  return detector::snr_sweep(turbine::default_fleet(), c.sweep_mixing, sim, c.sweep_grid, c.thresholds,
                             c.failed_sensor);
}

}  // namespace reactive::io
