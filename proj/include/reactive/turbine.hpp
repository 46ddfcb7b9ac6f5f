#pragma once

// Synthetic four-engine turbine data: spectral line models, fault states,
// sensor mixing, white noise, blockwise DFT and projection onto the
// significant line bins.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <fftw3.h>
#include <Eigen/Dense>

#include "reactive/mappings.hpp"
#include "reactive/rng.hpp"
#include "reactive/scenario.hpp"
#include "reactive/types.hpp"

namespace reactive::turbine {

inline constexpr int kLinesPerEngine = 7;
inline constexpr int kEngines = 4;
inline constexpr int kSensors = 4;
inline constexpr int kHealthDim = kLinesPerEngine * kEngines;

inline const std::array<const char*, kLinesPerEngine> kLineNames = {"shaft1", "shaft2", "blade1", "blade2",
                                                                    "gear1",  "gear2",  "gear3"};

/// Line order: shaft 1, shaft 2, shaft 1 x blades 1, shaft 2 x blades 2,
/// shaft 1 x gear 1, shaft 2 x gear 2, shaft 2 x gear 3.
struct EngineModel {
  int engine_id = 1;
  std::array<double, 2> shaft_hz{};
  std::array<int, 2> blade_counts{};
  std::array<double, 3> gear_ratios{};
  std::array<double, kLinesPerEngine> line_amplitudes{};

  std::array<double, kLinesPerEngine> line_frequencies() const {
    return {shaft_hz[0],
            shaft_hz[1],
            shaft_hz[0] * blade_counts[0],
            shaft_hz[1] * blade_counts[1],
            shaft_hz[0] * gear_ratios[0],
            shaft_hz[1] * gear_ratios[1],
            shaft_hz[1] * gear_ratios[2]};
  }
};

/// Four engines whose 28 lines all land on 4 Hz bins at 32768 Hz / 8192
/// points, at least 8 Hz apart.
inline std::vector<EngineModel> default_fleet() {
  std::vector<EngineModel> fleet;
  for (int e = 0; e < kEngines; ++e) {
    EngineModel m;
    m.engine_id = e + 1;
    m.shaft_hz = {48.0 + 32.0 * e, 128.0 + 32.0 * e};
    m.blade_counts = {20, 24};
    m.gear_ratios = {1.5, 2.25, 3.75};
    m.line_amplitudes = {1.0, 0.8, 0.5, 0.4, 0.3, 0.25, 0.2};
    fleet.push_back(m);
  }
  return fleet;
}

struct EngineState {
  enum class Kind { normal, gear_fault, catastrophic_failure };
  Kind kind = Kind::normal;
  int gear = 0;             ///< 0-based gear index for gear_fault
  double multiplier = 1.0;  ///< gear line amplitude factor for gear_fault

  static EngineState normal() { return {}; }
  static EngineState gear_fault(int gear, double multiplier) {
    if (gear < 0 || gear > 2) {
      throw ConfigError("gear index must be 1..3");
    }
    if (!(multiplier > 0.0)) {
      throw ConfigError("gear fault multiplier must be positive");
    }
    return {Kind::gear_fault, gear, multiplier};
  }
  static EngineState failure() { return {Kind::catastrophic_failure, 0, 0.0}; }

  bool operator==(const EngineState&) const = default;
};

inline std::string to_string(EngineState::Kind k) {
  switch (k) {
    case EngineState::Kind::normal: return "normal";
    case EngineState::Kind::gear_fault: return "gear_fault";
    case EngineState::Kind::catastrophic_failure: return "failure";
  }
  return "unknown";
}

/// Per-engine states for the fleet.
struct FaultState {
  std::string name = "normal";
  std::vector<EngineState> engines = std::vector<EngineState>(kEngines);

  static FaultState all_normal() { return {}; }
  /// Everything normal except one engine.
  static FaultState single(std::string name, int engine, EngineState st) {
    FaultState f;
    f.name = std::move(name);
    f.engines.at(static_cast<std::size_t>(engine)) = st;
    return f;
  }
};

/// The three engine-1 conditions scored by the detector.
inline std::vector<FaultState> standard_states(int gear = 0, double multiplier = 10.0) {
  return {FaultState::all_normal(), FaultState::single("gear_fault", 0, EngineState::gear_fault(gear, multiplier)),
          FaultState::single("failure", 0, EngineState::failure())};
}

/// a(j, h): volume of engine h at sensor j.
struct MixingMatrix {
  Eigen::Matrix4d a = Eigen::Matrix4d::Identity();

  static MixingMatrix uniform(double off_diagonal) {
    MixingMatrix m;
    m.a.setConstant(off_diagonal);
    m.a.diagonal().setOnes();
    m.validate();
    return m;
  }

  void validate() const {
    for (int j = 0; j < 4; ++j) {
      for (int h = 0; h < 4; ++h) {
        const double v = a(j, h);
        if (!std::isfinite(v) || v < 0.0) {
          throw ConfigError("mixing matrix entries must be finite and nonnegative");
        }
        if (j == h && v != 1.0) {
          throw ConfigError("mixing matrix diagonal must be 1");
        }
        if (j != h && v > 1.0) {
          throw ConfigError("mixing matrix off-diagonal entries must be at most 1");
        }
      }
    }
  }
};

struct SimConfig {
  int dft_size = 8192;
  double sample_rate = 32768.0;
  double noise_sigma = 0.0;
  /// Overrides noise_sigma: 10 log10((a_min^2 / 2) / sigma^2) with a_min the
  /// weakest line amplitude in the fleet, i.e. per-sample signal-to-noise.
  std::optional<double> snr_db;
  std::set<int> failed_sensors;  ///< 0-based
  std::uint64_t rng_seed = 1;
  int samples_per_state = 1024;
  bool keep_spectra = false;

  void validate() const {
    if (dft_size < 2 || (dft_size & (dft_size - 1)) != 0) {
      throw ConfigError("dft_size must be a power of two");
    }
    if (!(sample_rate > 0.0)) {
      throw ConfigError("sample_rate must be positive");
    }
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
      throw ConfigError("noise_sigma must be finite and nonnegative");
    }
    if (snr_db && !std::isfinite(*snr_db)) {
      throw ConfigError("snr_db must be finite");
    }
    if (samples_per_state <= 0) {
      throw ConfigError("samples_per_state must be positive");
    }
    for (int j : failed_sensors) {
      if (j < 0 || j >= kSensors) {
        throw ConfigError("failed sensor index out of range");
      }
    }
  }

  double bin_width() const { return sample_rate / dft_size; }
};

inline double weakest_amplitude(const std::vector<EngineModel>& fleet) {
  double a = std::numeric_limits<double>::infinity();
  for (const auto& m : fleet) {
    for (double x : m.line_amplitudes) {
      a = std::min(a, x);
    }
  }
  return a;
}

inline double noise_sigma_for_snr(double snr_db, double weakest) {
  return std::sqrt((weakest * weakest / 2.0) / std::pow(10.0, snr_db / 10.0));
}

inline double resolved_sigma(const std::vector<EngineModel>& fleet, const SimConfig& cfg) {
  return cfg.snr_db ? noise_sigma_for_snr(*cfg.snr_db, weakest_amplitude(fleet)) : cfg.noise_sigma;
}

/// DFT bin of every line, engine-major; validates distinctness, Nyquist and
/// on-bin placement.
inline std::vector<int> line_bins(const std::vector<EngineModel>& fleet, const SimConfig& cfg) {
  if (fleet.size() != static_cast<std::size_t>(kEngines)) {
    throw ConfigError("fleet must have four engines");
  }
  std::vector<int> bins;
  std::set<int> seen;
  for (const auto& m : fleet) {
    for (double a : m.line_amplitudes) {
      if (!(a > 0.0) || !std::isfinite(a)) {
        throw ConfigError("line amplitudes must be positive");
      }
    }
    for (double f : m.line_frequencies()) {
      if (!(f > 0.0) || f >= cfg.sample_rate / 2.0) {
        throw ConfigError("line at " + std::to_string(f) + " Hz is not below Nyquist");
      }
      const double b = f / cfg.bin_width();
      const double r = std::round(b);
      if (std::abs(b - r) > 1e-9) {
        throw ConfigError("line at " + std::to_string(f) + " Hz does not fall on a DFT bin");
      }
      const int bin = static_cast<int>(r);
      if (!seen.insert(bin).second) {
        throw ConfigError("two lines share bin " + std::to_string(bin));
      }
      bins.push_back(bin);
    }
  }
  return bins;
}

/// Per-line starting phases of one engine, fixed by the seed.
inline std::array<double, kLinesPerEngine> line_phases(std::uint64_t seed, int engine) {
  std::array<double, kLinesPerEngine> out{};
  for (int l = 0; l < kLinesPerEngine; ++l) {
    rng::CounterStream s(rng::derive_key(seed, {0x70686173ULL, static_cast<std::uint64_t>(engine),
                                                static_cast<std::uint64_t>(l)}));
    out[static_cast<std::size_t>(l)] = 2.0 * M_PI * s.uniform01();
  }
  return out;
}

inline std::array<double, kLinesPerEngine> line_amplitudes(const EngineModel& m, const EngineState& st) {
  auto amp = m.line_amplitudes;
  if (st.kind == EngineState::Kind::catastrophic_failure) {
    amp.fill(0.0);
  } else if (st.kind == EngineState::Kind::gear_fault) {
    amp[static_cast<std::size_t>(4 + st.gear)] *= st.multiplier;
  }
  return amp;
}

/// Samples [block * n, (block + 1) * n) of sum_l a_l cos(2 pi f_l t / fs + phi_l).
/// The phase runs continuously across blocks.
inline std::vector<double> engine_signal(const EngineModel& m, const EngineState& st, std::int64_t block,
                                         const SimConfig& cfg, const std::array<double, kLinesPerEngine>& phases) {
  const int n = cfg.dft_size;
  const auto freqs = m.line_frequencies();
  const auto amp = line_amplitudes(m, st);
  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  for (int l = 0; l < kLinesPerEngine; ++l) {
    const double f = freqs[static_cast<std::size_t>(l)];
    if (f >= cfg.sample_rate / 2.0) {
      throw ConfigError("engine_signal: line above Nyquist");
    }
    const double a = amp[static_cast<std::size_t>(l)];
    if (a == 0.0) {
      continue;
    }
    const double phi = phases[static_cast<std::size_t>(l)];
    const double cycles_per_sample = f / cfg.sample_rate;
    const auto bin = static_cast<std::int64_t>(std::llround(cycles_per_sample * n));
    const bool on_bin = std::abs(cycles_per_sample * n - static_cast<double>(bin)) < 1e-9;
    for (int t = 0; t < n; ++t) {
      const std::int64_t abs_t = block * n + t;
      double theta;
      if (on_bin) {
        // Exact phase: whole cycles drop out modulo the block length.
        theta = 2.0 * M_PI * static_cast<double>((bin * (abs_t % n)) % n) / n;
      } else {
        theta = 2.0 * M_PI * std::fmod(cycles_per_sample * static_cast<double>(abs_t), 1.0);
      }
      x[static_cast<std::size_t>(t)] += a * std::cos(theta + phi);
    }
  }
  return x;
}

/// Sensor j = sum_h a(j, h) x_h + N(0, sigma^2) per sample; failed sensors
/// are identically zero. noise_key seeds the per-sensor streams.
inline std::vector<std::vector<double>> mix_and_sense(const std::vector<std::vector<double>>& engines,
                                                      const MixingMatrix& mix, double sigma,
                                                      const std::set<int>& failed, std::uint64_t noise_key) {
  if (engines.size() != static_cast<std::size_t>(kEngines)) {
    throw DimensionError("mix_and_sense: expected four engine signals");
  }
  const std::size_t n = engines.front().size();
  for (const auto& e : engines) {
    if (e.size() != n) {
      throw DimensionError("mix_and_sense: engine blocks differ in length");
    }
  }
  std::vector<std::vector<double>> out(kSensors, std::vector<double>(n, 0.0));
  for (int j = 0; j < kSensors; ++j) {
    if (failed.count(j) != 0) {
      continue;
    }
    auto& y = out[static_cast<std::size_t>(j)];
    for (int h = 0; h < kEngines; ++h) {
      const double a = mix.a(j, h);
      if (a == 0.0) {
        continue;
      }
      const auto& x = engines[static_cast<std::size_t>(h)];
      for (std::size_t t = 0; t < n; ++t) {
        y[t] += a * x[t];
      }
    }
    if (sigma > 0.0) {
      rng::CounterStream stream(rng::derive_key(noise_key, {static_cast<std::uint64_t>(j)}));
      std::normal_distribution<double> nd(0.0, sigma);
      for (std::size_t t = 0; t < n; ++t) {
        y[t] += nd(stream);
      }
    }
  }
  return out;
}

/// Unnormalized DFT X[b] = sum_t x[t] exp(-2 pi i b t / n) via FFTW.
class Dft {
public:
  explicit Dft(int n) : n_(n) {
    if (n <= 0) {
      throw DimensionError("Dft: size must be positive");
    }
    in_ = static_cast<double*>(fftw_malloc(sizeof(double) * static_cast<std::size_t>(n)));
    out_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(n / 2 + 1)));
    if (in_ == nullptr || out_ == nullptr) {
      fftw_free(in_);
      fftw_free(out_);
      throw std::bad_alloc();
    }
    forward_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(n, out_, in_, FFTW_ESTIMATE);
  }
  Dft(const Dft&) = delete;
  Dft& operator=(const Dft&) = delete;
  ~Dft() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
    fftw_free(in_);
    fftw_free(out_);
  }

  int size() const { return n_; }

  ComplexVector forward(std::span<const double> x) {
    if (x.size() != static_cast<std::size_t>(n_)) {
      throw DimensionError("dft_block: block length differs from DFT size");
    }
    std::copy(x.begin(), x.end(), in_);
    fftw_execute(forward_);
    ComplexVector out(n_);
    for (int b = 0; b <= n_ / 2; ++b) {
      out[b] = Complex(out_[b][0], out_[b][1]);
    }
    for (int b = n_ / 2 + 1; b < n_; ++b) {
      out[b] = std::conj(out[n_ - b]);
    }
    return out;
  }

  /// Inverse of forward for spectra of real blocks (Hermitian symmetric).
  std::vector<double> inverse(const ComplexVector& spectrum) {
    if (spectrum.size() != n_) {
      throw DimensionError("inverse_dft: spectrum length differs from DFT size");
    }
    for (int b = 0; b <= n_ / 2; ++b) {
      out_[b][0] = spectrum[b].real();
      out_[b][1] = spectrum[b].imag();
    }
    fftw_execute(inverse_);
    std::vector<double> x(in_, in_ + n_);
    for (double& v : x) {
      v /= n_;
    }
    return x;
  }

private:
  int n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

namespace detail {

inline Dft& cached_dft(int n) {
  thread_local std::map<int, std::unique_ptr<Dft>> cache;
  auto& slot = cache[n];
  if (!slot) {
    slot = std::make_unique<Dft>(n);
  }
  return *slot;
}

}  // namespace detail

inline ComplexVector dft_block(std::span<const double> block, int dft_size = 8192) {
  if (block.size() != static_cast<std::size_t>(dft_size)) {
    throw DimensionError("dft_block: block length differs from DFT size");
  }
  return detail::cached_dft(dft_size).forward(block);
}

inline std::vector<double> inverse_dft(const ComplexVector& spectrum) {
  return detail::cached_dft(static_cast<int>(spectrum.size())).inverse(spectrum);
}

/// Values of the spectrum at the given bins, in order.
inline ComplexVector health_project(const ComplexVector& spectrum, const std::vector<int>& bins) {
  std::set<int> seen;
  ComplexVector out(static_cast<Eigen::Index>(bins.size()));
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const int b = bins[i];
    if (b < 0 || b >= spectrum.size()) {
      throw DimensionError("health_project: bin out of range");
    }
    if (!seen.insert(b).second) {
      throw DimensionError("health_project: duplicate bin");
    }
    out[static_cast<Eigen::Index>(i)] = spectrum[b];
  }
  return out;
}

/// The selection health map C^dft_size -> C^28.
inline scenario::HealthMap health_map(const std::vector<int>& bins, int dft_size) {
  return scenario::HealthMap::projection(dft_size, bins);
}

// ---------------------------------------------------------------------------
// Datasets

struct Sample {
  int state = 0;   ///< index into Dataset::states
  int index = 0;   ///< sample number within the state
  std::vector<ComplexVector> health;   ///< per sensor, C^28
  std::vector<ComplexVector> spectra;  ///< per sensor, C^dft_size; empty unless kept
};

struct Dataset {
  std::vector<EngineModel> fleet;
  MixingMatrix mixing;
  SimConfig cfg;
  double noise_sigma = 0.0;  ///< resolved per-sample noise standard deviation
  std::vector<FaultState> states;
  std::vector<int> bins;
  std::vector<Sample> samples;  ///< ordered by (state, sample)
};

/// All samples for every state; deterministic in cfg.rng_seed. Each sample's
/// noise is keyed by (seed, state, sample, sensor).
inline Dataset generate_dataset(const std::vector<EngineModel>& fleet, const MixingMatrix& mix,
                                const SimConfig& cfg, const std::vector<FaultState>& states) {
  cfg.validate();
  mix.validate();
  if (states.empty()) {
    throw ConfigError("generate_dataset: no states");
  }
  Dataset ds;
  ds.fleet = fleet;
  ds.mixing = mix;
  ds.cfg = cfg;
  ds.states = states;
  ds.bins = line_bins(fleet, cfg);
  ds.noise_sigma = resolved_sigma(fleet, cfg);
  ds.samples.reserve(states.size() * static_cast<std::size_t>(cfg.samples_per_state));

  std::vector<std::array<double, kLinesPerEngine>> phases;
  for (int e = 0; e < kEngines; ++e) {
    phases.push_back(line_phases(cfg.rng_seed, e));
  }
  Dft& dft = detail::cached_dft(cfg.dft_size);

  for (std::size_t si = 0; si < states.size(); ++si) {
    const auto& st = states[si];
    if (st.engines.size() != static_cast<std::size_t>(kEngines)) {
      throw ConfigError("fault state must list four engines");
    }
    // line_bins guarantees on-bin lines, so every block repeats block 0.
    std::vector<std::vector<double>> engines;
    for (int e = 0; e < kEngines; ++e) {
      engines.push_back(engine_signal(fleet[static_cast<std::size_t>(e)], st.engines[static_cast<std::size_t>(e)], 0,
                                      cfg, phases[static_cast<std::size_t>(e)]));
    }
    for (int k = 0; k < cfg.samples_per_state; ++k) {
      const std::uint64_t key =
          rng::derive_key(cfg.rng_seed, {static_cast<std::uint64_t>(si), static_cast<std::uint64_t>(k)});
      const auto sensors = mix_and_sense(engines, mix, ds.noise_sigma, cfg.failed_sensors, key);
      Sample s;
      s.state = static_cast<int>(si);
      s.index = k;
      for (const auto& y : sensors) {
        ComplexVector spec = dft.forward(y);
        s.health.push_back(health_project(spec, ds.bins));
        if (cfg.keep_spectra) {
          s.spectra.push_back(std::move(spec));
        }
      }
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

/// Engine-major index assignment: sensor j owns engine j's seven lines and
/// hears every line.
inline scenario::IndexAssignment index_assignment() {
  std::vector<scenario::IndexSet> j_sets(kSensors);
  std::vector<scenario::IndexSet> i_sets(kSensors);
  for (int j = 0; j < kSensors; ++j) {
    for (int i = 0; i < kHealthDim; ++i) {
      j_sets[static_cast<std::size_t>(j)].push_back(i);
    }
    for (int l = 0; l < kLinesPerEngine; ++l) {
      i_sets[static_cast<std::size_t>(j)].push_back(j * kLinesPerEngine + l);
    }
  }
  return scenario::IndexAssignment::make(kHealthDim, std::move(j_sets), std::move(i_sets));
}

/// Samples of one state as a sensing scenario. Parameters are the 28 line
/// bins (health map = identity), or the full spectrum with the line-bin
/// selection map when spectra were kept. Each sensor covers everything and
/// is primarily responsible for its own engine's lines.
inline scenario::Scenario as_scenario(const Dataset& ds, int state, bool full_spectrum = false) {
  std::vector<const Sample*> picked;
  for (const auto& s : ds.samples) {
    if (s.state == state) {
      picked.push_back(&s);
    }
  }
  if (picked.empty()) {
    throw ConfigError("as_scenario: no samples for state");
  }
  if (full_spectrum && picked.front()->spectra.empty()) {
    throw ConfigError("as_scenario: dataset was generated without spectra");
  }
  const int m = full_spectrum ? ds.cfg.dft_size : kHealthDim;
  const int k_t = static_cast<int>(picked.size());
  std::vector<ComplexVector> readings;
  for (int j = 0; j < kSensors; ++j) {
    for (const Sample* s : picked) {
      readings.push_back(full_spectrum ? s->spectra[static_cast<std::size_t>(j)] : s->health[static_cast<std::size_t>(j)]);
    }
  }
  std::vector<scenario::IndexSet> cover(kSensors);
  std::vector<scenario::IndexSet> part(kSensors);
  std::vector<bool> owned(static_cast<std::size_t>(m), false);
  for (int j = 0; j < kSensors; ++j) {
    cover[static_cast<std::size_t>(j)].resize(static_cast<std::size_t>(m));
    std::iota(cover[static_cast<std::size_t>(j)].begin(), cover[static_cast<std::size_t>(j)].end(), 0);
    for (int l = 0; l < kLinesPerEngine; ++l) {
      const int i = j * kLinesPerEngine + l;
      const int f = full_spectrum ? ds.bins[static_cast<std::size_t>(i)] : i;
      part[static_cast<std::size_t>(j)].push_back(f);
      owned[static_cast<std::size_t>(f)] = true;
    }
  }
  for (int f = 0; f < m; ++f) {
    if (!owned[static_cast<std::size_t>(f)]) {
      part[0].push_back(f);
    }
  }
  scenario::HealthMap h = full_spectrum ? health_map(ds.bins, m) : scenario::HealthMap::identity(m);
  return scenario::Scenario(m, kSensors, k_t, std::move(cover), std::move(part), std::move(readings), std::move(h));
}

/// The generator's own factorization of a noise-free state in health
/// coordinates: gamma_hat_j(i) = a(j, engine(i)) (zero for failed sensors),
/// alpha_hat_k(i) = that engine's clean line value.
inline scenario::Factorization ground_truth_factorization(const Dataset& ds, int state) {
  const auto& st = ds.states.at(static_cast<std::size_t>(state));
  scenario::Factorization fac;
  for (int j = 0; j < kSensors; ++j) {
    ComplexVector g(kHealthDim);
    for (int i = 0; i < kHealthDim; ++i) {
      g[i] = ds.cfg.failed_sensors.count(j) != 0 ? 0.0 : ds.mixing.a(j, i / kLinesPerEngine);
    }
    fac.gamma_hat.push_back(g);
  }
  const double half = ds.cfg.dft_size / 2.0;
  ComplexVector alpha(kHealthDim);
  for (int e = 0; e < kEngines; ++e) {
    const auto amp = line_amplitudes(ds.fleet[static_cast<std::size_t>(e)], st.engines[static_cast<std::size_t>(e)]);
    const auto ph = line_phases(ds.cfg.rng_seed, e);
    for (int l = 0; l < kLinesPerEngine; ++l) {
      alpha[e * kLinesPerEngine + l] = std::polar(amp[static_cast<std::size_t>(l)] * half, ph[static_cast<std::size_t>(l)]);
    }
  }
  for (const auto& s : ds.samples) {
    if (s.state == state) {
      fac.alpha_hat.push_back(alpha);
    }
  }
  fac.gamma = fac.gamma_hat;
  fac.alpha = fac.alpha_hat;
  return fac;
}

}  // namespace reactive::turbine
