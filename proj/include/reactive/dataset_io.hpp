#pragma once

// Dataset directories: manifest.json, health.csv (magnitudes at the 28 line
// bins) and optional raw little-endian float64 spectra.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "reactive/json_io.hpp"
#include "reactive/turbine.hpp"

namespace reactive::io {

inline constexpr const char* kDatasetFormat = "reactive-dataset/1";
inline constexpr const char* kSnrReference =
    "10 log10((a_min^2 / 2) / sigma^2): weakest line power over per-sample noise variance";

/// Text that reads back to the same double.
inline std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline json engine_state_to_json(const turbine::EngineState& st) {
  json j{{"kind", turbine::to_string(st.kind)}};
  if (st.kind == turbine::EngineState::Kind::gear_fault) {
    j["gear"] = st.gear + 1;
    j["multiplier"] = st.multiplier;
  }
  return j;
}

inline turbine::EngineState engine_state_from_json(const json& j) {
  const std::string kind = require(j, "kind").get<std::string>();
  if (kind == "normal") {
    return turbine::EngineState::normal();
  }
  if (kind == "failure") {
    return turbine::EngineState::failure();
  }
  if (kind == "gear_fault") {
    return turbine::EngineState::gear_fault(require(j, "gear").get<int>() - 1, require(j, "multiplier").get<double>());
  }
  throw ConfigError("unknown engine state '" + kind + "'");
}

inline json fault_state_to_json(const turbine::FaultState& fs) {
  json engines = json::array();
  for (const auto& e : fs.engines) {
    engines.push_back(engine_state_to_json(e));
  }
  return json{{"name", fs.name}, {"engines", engines}};
}

inline turbine::FaultState fault_state_from_json(const json& j) {
  turbine::FaultState fs;
  fs.name = require(j, "name").get<std::string>();
  const json& e = require(j, "engines");
  if (!e.is_array() || e.size() != static_cast<std::size_t>(turbine::kEngines)) {
    throw ConfigError("fault state '" + fs.name + "' must list four engines");
  }
  for (std::size_t h = 0; h < e.size(); ++h) {
    fs.engines[h] = engine_state_from_json(e[h]);
  }
  return fs;
}

inline json engine_model_to_json(const turbine::EngineModel& m) {
  return json{{"engine_id", m.engine_id},
              {"shaft_hz", m.shaft_hz},
              {"blade_counts", m.blade_counts},
              {"gear_ratios", m.gear_ratios},
              {"line_amplitudes", m.line_amplitudes}};
}

inline turbine::EngineModel engine_model_from_json(const json& j) {
  turbine::EngineModel m;
  m.engine_id = require(j, "engine_id").get<int>();
  m.shaft_hz = require(j, "shaft_hz").get<std::array<double, 2>>();
  m.blade_counts = require(j, "blade_counts").get<std::array<int, 2>>();
  m.gear_ratios = require(j, "gear_ratios").get<std::array<double, 3>>();
  m.line_amplitudes = require(j, "line_amplitudes").get<std::array<double, turbine::kLinesPerEngine>>();
  return m;
}

inline json mixing_to_json(const turbine::MixingMatrix& mix) {
  json rows = json::array();
  for (int j = 0; j < 4; ++j) {
    rows.push_back({mix.a(j, 0), mix.a(j, 1), mix.a(j, 2), mix.a(j, 3)});
  }
  return rows;
}

/// A 4 x 4 array of rows, or a number giving every off-diagonal entry.
inline turbine::MixingMatrix mixing_from_json(const json& j) {
  if (j.is_number()) {
    return turbine::MixingMatrix::uniform(j.get<double>());
  }
  if (!j.is_array() || j.size() != 4) {
    throw ConfigError("mixing matrix must be a number or four rows");
  }
  turbine::MixingMatrix m;
  for (int r = 0; r < 4; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || row.size() != 4) {
      throw ConfigError("mixing matrix rows need four entries");
    }
    for (int c = 0; c < 4; ++c) {
      m.a(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  m.validate();
  return m;
}

inline json sim_config_to_json(const turbine::SimConfig& c) {
  json failed = json::array();
  for (int j : c.failed_sensors) {
    failed.push_back(j + 1);
  }
  return json{{"dft_size", c.dft_size},
              {"sample_rate", c.sample_rate},
              {"noise_sigma", c.noise_sigma},
              {"snr_db", c.snr_db ? json(*c.snr_db) : json(nullptr)},
              {"failed_sensors", failed},
              {"rng_seed", c.rng_seed},
              {"samples_per_state", c.samples_per_state},
              {"keep_spectra", c.keep_spectra}};
}

inline turbine::SimConfig sim_config_from_json(const json& j) {
  turbine::SimConfig c;
  c.dft_size = require(j, "dft_size").get<int>();
  c.sample_rate = require(j, "sample_rate").get<double>();
  c.noise_sigma = require(j, "noise_sigma").get<double>();
  if (!require(j, "snr_db").is_null()) {
    c.snr_db = j.at("snr_db").get<double>();
  }
  for (int s : require(j, "failed_sensors").get<std::vector<int>>()) {
    c.failed_sensors.insert(s - 1);
  }
  c.rng_seed = require(j, "rng_seed").get<std::uint64_t>();
  c.samples_per_state = require(j, "samples_per_state").get<int>();
  c.keep_spectra = require(j, "keep_spectra").get<bool>();
  c.validate();
  return c;
}

inline json dataset_manifest(const turbine::Dataset& ds) {
  json fleet = json::array();
  for (const auto& m : ds.fleet) {
    fleet.push_back(engine_model_to_json(m));
  }
  json states = json::array();
  for (const auto& s : ds.states) {
    states.push_back(fault_state_to_json(s));
  }
  json bins = json::array();
  for (std::size_t i = 0; i < ds.bins.size(); ++i) {
    const int e = static_cast<int>(i) / turbine::kLinesPerEngine;
    const int l = static_cast<int>(i) % turbine::kLinesPerEngine;
    bins.push_back({{"coordinate", i + 1},
                    {"engine", e + 1},
                    {"line", turbine::kLineNames[static_cast<std::size_t>(l)]},
                    {"bin", ds.bins[i]},
                    {"hz", ds.bins[i] * ds.cfg.bin_width()}});
  }
  json m{{"format", kDatasetFormat},
         {"config", sim_config_to_json(ds.cfg)},
         {"noise_sigma_resolved", ds.noise_sigma},
         {"snr_reference", kSnrReference},
         {"fleet", fleet},
         {"mixing", mixing_to_json(ds.mixing)},
         {"line_bins", bins},
         {"states", states},
         {"samples", ds.samples.size()},
         {"health_file", "health.csv"}};
  if (ds.cfg.keep_spectra) {
    json files = json::array();
    for (int j = 0; j < turbine::kSensors; ++j) {
      files.push_back({{"sensor", j + 1}, {"file", "spectra_s" + std::to_string(j + 1) + ".f64"}});
    }
    m["spectra"] = {{"layout", "per sample in health.csv order: dft_size pairs (re, im), float64 little-endian"},
                    {"files", files}};
  }
  return m;
}

/// Rows in canonical (state, sample, sensor) order.
inline std::string health_csv(const turbine::Dataset& ds) {
  std::string out = "state,sample,sensor";
  for (int i = 1; i <= turbine::kHealthDim; ++i) {
    out += ",h" + std::to_string(i);
  }
  out += '\n';
  for (const auto& s : ds.samples) {
    for (std::size_t j = 0; j < s.health.size(); ++j) {
      out += std::to_string(s.state + 1) + ',' + std::to_string(s.index + 1) + ',' + std::to_string(j + 1);
      for (Eigen::Index i = 0; i < s.health[j].size(); ++i) {
        out += ',';
        out += fmt_double(std::abs(s.health[j][i]));
      }
      out += '\n';
    }
  }
  return out;
}

namespace detail {

inline void put_le(std::ofstream& out, double x) {
  auto bits = std::bit_cast<std::uint64_t>(x);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) {
    b[i] = static_cast<unsigned char>(bits >> (8 * i));
  }
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline double get_le(const unsigned char* b) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  }
  return std::bit_cast<double>(bits);
}

}  // namespace detail

inline void write_dataset(const std::filesystem::path& dir, const turbine::Dataset& ds) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create " + dir.string() + ": " + ec.message());
  }
  write_json_file((dir / "manifest.json").string(), dataset_manifest(ds));
  write_text_file((dir / "health.csv").string(), health_csv(ds));
  if (ds.cfg.keep_spectra) {
    for (int j = 0; j < turbine::kSensors; ++j) {
      const auto path = dir / ("spectra_s" + std::to_string(j + 1) + ".f64");
      std::ofstream out(path, std::ios::binary);
      if (!out) {
        throw IoError("cannot write " + path.string());
      }
      for (const auto& s : ds.samples) {
        const auto& spec = s.spectra.at(static_cast<std::size_t>(j));
        for (Eigen::Index b = 0; b < spec.size(); ++b) {
          detail::put_le(out, spec[b].real());
          detail::put_le(out, spec[b].imag());
        }
      }
      if (!out) {
        throw IoError("write failed for " + path.string());
      }
    }
  }
}

/// Reads a dataset directory. Health vectors come back as the stored
/// (real, nonnegative) magnitudes, which is all the detector uses.
inline turbine::Dataset read_dataset(const std::filesystem::path& dir) {
  const json m = read_json_file((dir / "manifest.json").string());
  turbine::Dataset ds;
  try {
    if (require(m, "format").get<std::string>() != kDatasetFormat) {
      throw ConfigError("unsupported dataset format");
    }
    ds.cfg = sim_config_from_json(require(m, "config"));
    ds.noise_sigma = require(m, "noise_sigma_resolved").get<double>();
    for (const auto& e : require(m, "fleet")) {
      ds.fleet.push_back(engine_model_from_json(e));
    }
    ds.mixing = mixing_from_json(require(m, "mixing"));
    for (const auto& s : require(m, "states")) {
      ds.states.push_back(fault_state_from_json(s));
    }
    ds.bins = turbine::line_bins(ds.fleet, ds.cfg);
    std::vector<int> stored;
    for (const auto& b : require(m, "line_bins")) {
      stored.push_back(require(b, "bin").get<int>());
    }
    if (stored != ds.bins) {
      throw ConfigError("line_bins disagree with the fleet");
    }
  } catch (const json::exception& e) {
    throw ConfigError((dir / "manifest.json").string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError((dir / "manifest.json").string() + ": " + e.what());
  }

  const auto csv_path = dir / "health.csv";
  std::ifstream in(csv_path);
  if (!in) {
    throw IoError("cannot open " + csv_path.string());
  }
  std::string line;
  std::getline(in, line);
  const std::size_t n_states = ds.states.size();
  const auto per_state = static_cast<std::size_t>(ds.cfg.samples_per_state);
  ds.samples.resize(n_states * per_state);
  std::size_t row = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    std::vector<double> fields;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0') {
        throw IoError(csv_path.string() + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
      fields.push_back(v);
    }
    if (fields.size() != 3 + static_cast<std::size_t>(turbine::kHealthDim)) {
      throw IoError(csv_path.string() + ":" + std::to_string(line_no) + ": expected 31 columns");
    }
    if (fields[0] < 1.0 || fields[1] < 1.0 || fields[2] < 1.0) {
      throw IoError(csv_path.string() + ":" + std::to_string(line_no) + ": indices are 1-based");
    }
    const auto st = static_cast<std::size_t>(fields[0]) - 1;
    const auto k = static_cast<std::size_t>(fields[1]) - 1;
    const auto j = static_cast<std::size_t>(fields[2]) - 1;
    const std::size_t want_sample = row / turbine::kSensors;
    if (st * per_state + k != want_sample || j != row % turbine::kSensors || st >= n_states) {
      throw IoError(csv_path.string() + ":" + std::to_string(line_no) + ": rows out of canonical order");
    }
    auto& s = ds.samples[want_sample];
    s.state = static_cast<int>(st);
    s.index = static_cast<int>(k);
    ComplexVector h(turbine::kHealthDim);
    for (int i = 0; i < turbine::kHealthDim; ++i) {
      h[i] = fields[3 + static_cast<std::size_t>(i)];
    }
    s.health.push_back(std::move(h));
    ++row;
  }
  if (row != ds.samples.size() * turbine::kSensors) {
    throw IoError(csv_path.string() + ": expected " + std::to_string(ds.samples.size() * turbine::kSensors) +
                  " rows, found " + std::to_string(row));
  }

  if (ds.cfg.keep_spectra) {
    const auto n = static_cast<std::size_t>(ds.cfg.dft_size);
    std::vector<unsigned char> buf(n * 16);
    for (int j = 0; j < turbine::kSensors; ++j) {
      const auto path = dir / ("spectra_s" + std::to_string(j + 1) + ".f64");
      std::ifstream sp(path, std::ios::binary);
      if (!sp) {
        throw IoError("cannot open " + path.string());
      }
      for (auto& s : ds.samples) {
        if (!sp.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
          throw IoError(path.string() + ": truncated");
        }
        ComplexVector spec(static_cast<Eigen::Index>(n));
        for (std::size_t b = 0; b < n; ++b) {
          spec[static_cast<Eigen::Index>(b)] = Complex(detail::get_le(&buf[16 * b]), detail::get_le(&buf[16 * b + 8]));
        }
        s.spectra.push_back(std::move(spec));
      }
    }
  }
  return ds;
}

}  // namespace reactive::io
