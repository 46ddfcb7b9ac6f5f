#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "oracles.hpp"
#include "reactive/turbine.hpp"

using namespace reactive;
using namespace reactive::turbine;

namespace {

constexpr int kN = 8192;

SimConfig quiet(int samples = 4) {
  SimConfig c;
  c.samples_per_state = samples;
  return c;
}

double half_n() { return kN / 2.0; }

std::vector<std::vector<double>> engine_blocks(const FaultState& fs, const SimConfig& cfg) {
  const auto fleet = default_fleet();
  std::vector<std::vector<double>> out;
  for (int e = 0; e < kEngines; ++e) {
    out.push_back(engine_signal(fleet[static_cast<std::size_t>(e)], fs.engines[static_cast<std::size_t>(e)], 0, cfg,
                                line_phases(cfg.rng_seed, e)));
  }
  return out;
}

}  // namespace

TEST(Fleet, LinesAreDistinctOnBinAndBelowNyquist) {
  const auto bins = line_bins(default_fleet(), quiet());
  ASSERT_EQ(bins.size(), 28u);
  auto sorted = bins;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(std::adjacent_find(sorted.begin(), sorted.end()), sorted.end());
  for (std::size_t a = 1; a < sorted.size(); ++a) {
    EXPECT_GE(sorted[a] - sorted[a - 1], 2);
  }
  EXPECT_LT(sorted.back(), kN / 2);
}

TEST(Fleet, RejectsAboveNyquistAndOffBin) {
  auto fleet = default_fleet();
  fleet[0].shaft_hz[0] = 20000.0;
  EXPECT_THROW(line_bins(fleet, quiet()), ConfigError);
  fleet = default_fleet();
  fleet[1].shaft_hz[0] = 50.0;
  EXPECT_THROW(line_bins(fleet, quiet()), ConfigError);
  fleet = default_fleet();
  fleet[1] = fleet[0];
  EXPECT_THROW(line_bins(fleet, quiet()), ConfigError);
}

TEST(Config, Validation) {
  SimConfig c;
  c.dft_size = 1000;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SimConfig{};
  c.noise_sigma = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SimConfig{};
  c.failed_sensors = {4};
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(MixingMatrix::uniform(1.5), ConfigError);
  MixingMatrix m;
  m.a(2, 2) = 0.5;
  EXPECT_THROW(m.validate(), ConfigError);
  EXPECT_THROW(EngineState::gear_fault(3, 2.0), ConfigError);
}

TEST(Dft, ImpulseGivesAllOnes) {
  std::vector<double> x(kN, 0.0);
  x[0] = 1.0;
  const auto spec = dft_block(x);
  EXPECT_LT((spec - ComplexVector::Ones(kN)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Dft, OnBinCosine) {
  const int b = 37;
  const double a = 2.5;
  std::vector<double> x(kN);
  for (int t = 0; t < kN; ++t) {
    x[static_cast<std::size_t>(t)] = a * std::cos(2.0 * M_PI * ((b * t) % kN) / kN);
  }
  const auto spec = dft_block(x);
  EXPECT_NEAR(std::abs(spec[b]), a * half_n(), 1e-8);
  EXPECT_NEAR(std::abs(spec[kN - b]), a * half_n(), 1e-8);
  double rest = 0.0;
  for (int k = 0; k < kN; ++k) {
    if (k != b && k != kN - b) {
      rest = std::max(rest, std::abs(spec[k]));
    }
  }
  EXPECT_LT(rest, 1e-8);
}

TEST(Dft, MatchesNaiveDft) {
  oracle::Gen g(11);
  for (int n : {1, 2, 8, 64, 256}) {
    std::vector<double> x(static_cast<std::size_t>(n));
    for (auto& v : x) {
      v = g.normal();
    }
    const auto fast = dft_block(x, n);
    const auto slow = oracle::naive_dft(x);
    for (int b = 0; b < n; ++b) {
      EXPECT_LT(std::abs(fast[b] - slow[static_cast<std::size_t>(b)]), 1e-9 * n) << n << " " << b;
    }
  }
}

TEST(Dft, RoundTrip) {
  oracle::Gen g(12);
  std::vector<double> x(kN);
  for (auto& v : x) {
    v = g.normal();
  }
  const auto back = inverse_dft(dft_block(x));
  double err = 0.0;
  double norm = 0.0;
  for (int t = 0; t < kN; ++t) {
    err = std::max(err, std::abs(back[static_cast<std::size_t>(t)] - x[static_cast<std::size_t>(t)]));
    norm = std::max(norm, std::abs(x[static_cast<std::size_t>(t)]));
  }
  EXPECT_LE(err, 1e-9 * norm);
}

TEST(Dft, WrongLength) {
  std::vector<double> x(100);
  EXPECT_THROW(dft_block(x), DimensionError);
  Dft d(8);
  EXPECT_THROW(d.inverse(ComplexVector::Zero(7)), DimensionError);
  EXPECT_THROW(Dft(0), DimensionError);
}

TEST(EngineSignal, NormalPeaksAtItsSevenBins) {
  const auto cfg = quiet();
  const auto fleet = default_fleet();
  const auto bins = line_bins(fleet, cfg);
  for (int e = 0; e < kEngines; ++e) {
    const auto x = engine_signal(fleet[static_cast<std::size_t>(e)], EngineState::normal(), 0, cfg,
                                 line_phases(cfg.rng_seed, e));
    const auto mag = dft_block(x).head(kN / 2).cwiseAbs().eval();
    std::vector<int> order(kN / 2);
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + 7, order.end(), [&](int a, int b) { return mag[a] > mag[b]; });
    std::vector<int> top(order.begin(), order.begin() + 7);
    std::vector<int> want(bins.begin() + e * 7, bins.begin() + e * 7 + 7);
    std::sort(top.begin(), top.end());
    std::sort(want.begin(), want.end());
    EXPECT_EQ(top, want);
    EXPECT_LT(mag[order[7]], 1e-6);
    for (int l = 0; l < 7; ++l) {
      EXPECT_NEAR(mag[bins[static_cast<std::size_t>(e * 7 + l)]],
                  fleet[0].line_amplitudes[static_cast<std::size_t>(l)] * half_n(), 1e-6);
    }
  }
}

TEST(EngineSignal, FailureIsZero) {
  const auto cfg = quiet();
  const auto x = engine_signal(default_fleet()[2], EngineState::failure(), 5, cfg, line_phases(1, 2));
  EXPECT_TRUE(std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; }));
}

TEST(EngineSignal, GearFaultScalesItsLine) {
  const auto cfg = quiet();
  const auto fleet = default_fleet();
  const auto bins = line_bins(fleet, cfg);
  const auto ph = line_phases(cfg.rng_seed, 0);
  const auto normal = dft_block(engine_signal(fleet[0], EngineState::normal(), 0, cfg, ph));
  for (int g = 0; g < 3; ++g) {
    const auto faulty = dft_block(engine_signal(fleet[0], EngineState::gear_fault(g, 3.0), 0, cfg, ph));
    for (int l = 0; l < 7; ++l) {
      const int b = bins[static_cast<std::size_t>(l)];
      const double ratio = std::abs(faulty[b]) / std::abs(normal[b]);
      EXPECT_NEAR(ratio, l == 4 + g ? 3.0 : 1.0, 1e-9);
    }
  }
}

TEST(EngineSignal, PhaseRunsAcrossBlocks) {
  const auto cfg = quiet();
  const auto fleet = default_fleet();
  const auto ph = line_phases(cfg.rng_seed, 1);
  const auto b0 = engine_signal(fleet[1], EngineState::normal(), 0, cfg, ph);
  const auto b7 = engine_signal(fleet[1], EngineState::normal(), 7, cfg, ph);
  for (int t = 0; t < kN; t += 97) {
    EXPECT_NEAR(b0[static_cast<std::size_t>(t)], b7[static_cast<std::size_t>(t)], 1e-12);
  }
}

TEST(MixAndSense, IdentityIsolatesEngines) {
  const auto cfg = quiet();
  const auto eng = engine_blocks(FaultState::all_normal(), cfg);
  const auto sensed = mix_and_sense(eng, MixingMatrix{}, 0.0, {}, 1);
  for (int j = 0; j < kSensors; ++j) {
    EXPECT_EQ(sensed[static_cast<std::size_t>(j)], eng[static_cast<std::size_t>(j)]);
  }
}

TEST(MixAndSense, CrossTalkAtTenDbDown) {
  const auto cfg = quiet();
  const auto bins = line_bins(default_fleet(), cfg);
  MixingMatrix mix;
  mix.a(0, 1) = 0.1;
  const auto eng = engine_blocks(FaultState::all_normal(), cfg);
  const auto sensed = mix_and_sense(eng, mix, 0.0, {}, 1);
  const auto s1 = dft_block(sensed[0]);
  const auto s2 = dft_block(sensed[1]);
  for (int l = 0; l < 7; ++l) {
    const int b = bins[static_cast<std::size_t>(7 + l)];
    EXPECT_NEAR(std::abs(s1[b]) / std::abs(s2[b]), 0.1, 1e-9);
  }
}

TEST(MixAndSense, FailedSensorIsZeroEvenWithNoise) {
  const auto cfg = quiet();
  const auto eng = engine_blocks(FaultState::all_normal(), cfg);
  const auto sensed = mix_and_sense(eng, MixingMatrix::uniform(0.1), 3.0, {0}, 99);
  EXPECT_TRUE(std::all_of(sensed[0].begin(), sensed[0].end(), [](double v) { return v == 0.0; }));
  EXPECT_FALSE(std::all_of(sensed[1].begin(), sensed[1].end(), [](double v) { return v == 0.0; }));
}

TEST(MixAndSense, NoiseHasRequestedSpread) {
  const std::vector<std::vector<double>> zero(kEngines, std::vector<double>(kN, 0.0));
  const auto sensed = mix_and_sense(zero, MixingMatrix{}, 2.0, {}, 5);
  for (const auto& y : sensed) {
    double m = 0.0;
    double v = 0.0;
    for (double x : y) {
      m += x;
    }
    m /= kN;
    for (double x : y) {
      v += (x - m) * (x - m);
    }
    v /= kN - 1;
    EXPECT_NEAR(std::sqrt(v), 2.0, 0.1);
    EXPECT_NEAR(m, 0.0, 0.1);
  }
  EXPECT_NE(sensed[0], sensed[1]);
}

TEST(MixAndSense, ShapeErrors) {
  EXPECT_THROW(mix_and_sense(std::vector<std::vector<double>>(3, std::vector<double>(4)), MixingMatrix{}, 0, {}, 1),
               DimensionError);
  std::vector<std::vector<double>> ragged(4, std::vector<double>(4));
  ragged[2].resize(5);
  EXPECT_THROW(mix_and_sense(ragged, MixingMatrix{}, 0, {}, 1), DimensionError);
}

TEST(HealthProject, ZeroSpectrumAndErrors) {
  const auto bins = line_bins(default_fleet(), quiet());
  EXPECT_EQ(health_project(ComplexVector::Zero(kN), bins), ComplexVector::Zero(28));
  EXPECT_THROW(health_project(ComplexVector::Zero(kN), {1, 2, kN}), DimensionError);
  EXPECT_THROW(health_project(ComplexVector::Zero(kN), {1, 2, 1}), DimensionError);
  EXPECT_THROW(health_project(ComplexVector::Zero(kN), {-1}), DimensionError);
}

TEST(HealthProject, PermutationCommutes) {
  oracle::Gen g(21);
  const auto spec = g.vector(kN);
  auto bins = line_bins(default_fleet(), quiet());
  const auto base = health_project(spec, bins);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> perm(bins.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), g.engine());
    std::vector<int> pb;
    for (int p : perm) {
      pb.push_back(bins[static_cast<std::size_t>(p)]);
    }
    const auto out = health_project(spec, pb);
    for (std::size_t i = 0; i < perm.size(); ++i) {
      EXPECT_EQ(out[static_cast<Eigen::Index>(i)], base[perm[i]]);
    }
  }
}

TEST(HealthProject, SingleEngineActiveHasSevenCoordinates) {
  for (int active = 0; active < kEngines; ++active) {
    FaultState fs;
    for (int e = 0; e < kEngines; ++e) {
      if (e != active) {
        fs.engines[static_cast<std::size_t>(e)] = EngineState::failure();
      }
    }
    const auto ds = generate_dataset(default_fleet(), MixingMatrix::uniform(0.1), quiet(1), {fs});
    for (int j = 0; j < kSensors; ++j) {
      const auto& h = ds.samples[0].health[static_cast<std::size_t>(j)];
      for (int i = 0; i < 28; ++i) {
        if (i / 7 == active) {
          EXPECT_GT(std::abs(h[i]), 1.0);
        } else {
          EXPECT_LT(std::abs(h[i]), 1e-8);
        }
      }
    }
  }
}

TEST(Dataset, CountsAndLabels) {
  auto cfg = quiet(16);
  const auto ds = generate_dataset(default_fleet(), MixingMatrix::uniform(0.1), cfg, standard_states());
  ASSERT_EQ(ds.samples.size(), 48u);
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    EXPECT_EQ(ds.samples[i].state, static_cast<int>(i / 16));
    EXPECT_EQ(ds.samples[i].index, static_cast<int>(i % 16));
    EXPECT_EQ(ds.samples[i].health.size(), 4u);
    EXPECT_TRUE(ds.samples[i].spectra.empty());
  }
  EXPECT_EQ(ds.states[1].engines[0].kind, EngineState::Kind::gear_fault);
  EXPECT_EQ(ds.states[2].engines[0].kind, EngineState::Kind::catastrophic_failure);
}

TEST(Dataset, Deterministic) {
  auto cfg = quiet(3);
  cfg.snr_db = -5.0;
  cfg.rng_seed = 77;
  const auto a = generate_dataset(default_fleet(), MixingMatrix::uniform(0.1), cfg, standard_states());
  const auto b = generate_dataset(default_fleet(), MixingMatrix::uniform(0.1), cfg, standard_states());
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    for (int j = 0; j < 4; ++j) {
      EXPECT_EQ(a.samples[i].health[static_cast<std::size_t>(j)], b.samples[i].health[static_cast<std::size_t>(j)]);
    }
  }
  cfg.rng_seed = 78;
  const auto c = generate_dataset(default_fleet(), MixingMatrix::uniform(0.1), cfg, standard_states());
  EXPECT_NE(a.samples[0].health[0], c.samples[0].health[0]);
}

TEST(Dataset, SampleNoiseIndependentOfRunLength) {
  auto cfg = quiet(2);
  cfg.noise_sigma = 1.0;
  const auto short_run = generate_dataset(default_fleet(), MixingMatrix::uniform(0.1), cfg, standard_states());
  cfg.samples_per_state = 5;
  const auto long_run = generate_dataset(default_fleet(), MixingMatrix::uniform(0.1), cfg, standard_states());
  // (state 1, sample 1) is the same in both runs.
  EXPECT_EQ(short_run.samples[3].health[2], long_run.samples[6].health[2]);
}

TEST(Dataset, NoiseFreeHealthIsConstant) {
  const auto ds = generate_dataset(default_fleet(), MixingMatrix::uniform(0.1), quiet(6), {FaultState::all_normal()});
  for (const auto& s : ds.samples) {
    for (int j = 0; j < 4; ++j) {
      EXPECT_LT((s.health[static_cast<std::size_t>(j)] - ds.samples[0].health[static_cast<std::size_t>(j)])
                    .cwiseAbs()
                    .maxCoeff(),
                1e-9);
    }
  }
}

TEST(Dataset, SnrSetsSigma) {
  auto cfg = quiet(1);
  cfg.snr_db = 0.0;
  const auto ds = generate_dataset(default_fleet(), MixingMatrix{}, cfg, {FaultState::all_normal()});
  EXPECT_NEAR(ds.noise_sigma, 0.2 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(noise_sigma_for_snr(-20.0, 0.2), 10.0 * 0.2 / std::sqrt(2.0), 1e-12);
}

TEST(Dataset, KeepsSpectraConsistentWithHealth) {
  auto cfg = quiet(1);
  cfg.keep_spectra = true;
  cfg.noise_sigma = 0.5;
  const auto ds = generate_dataset(default_fleet(), MixingMatrix::uniform(0.1), cfg, {FaultState::all_normal()});
  for (int j = 0; j < 4; ++j) {
    const auto& spec = ds.samples[0].spectra[static_cast<std::size_t>(j)];
    ASSERT_EQ(spec.size(), kN);
    EXPECT_EQ(health_project(spec, ds.bins), ds.samples[0].health[static_cast<std::size_t>(j)]);
  }
}

TEST(Separability, RankOneAtEveryLine) {
  const auto ds = generate_dataset(default_fleet(), MixingMatrix::uniform(0.1), quiet(8), standard_states());
  for (int st = 0; st < 3; ++st) {
    const auto s = as_scenario(ds, st);
    const auto r = scenario::factor_readings(s, 1e-9);
    ASSERT_TRUE(std::holds_alternative<scenario::Factorization>(r)) << st;
    const auto& fac = std::get<scenario::Factorization>(r);
    EXPECT_LT(scenario::factorization_residual(s, fac), 1e-9 * kN);
  }
}

TEST(Separability, GroundTruthFactorizationReproducesReadings) {
  auto cfg = quiet(3);
  cfg.failed_sensors = {0};
  const auto ds = generate_dataset(default_fleet(), MixingMatrix::uniform(0.1), cfg, standard_states());
  for (int st = 0; st < 3; ++st) {
    const auto s = as_scenario(ds, st);
    const auto fac = ground_truth_factorization(ds, st);
    EXPECT_LT(scenario::factorization_residual(s, fac), 1e-8 * kN);
    // Line values differ across f, so only the re-gauged form is constant.
    EXPECT_FALSE(scenario::check_separability_constant_alpha(s, fac, 1e-9));
    const auto gauged = scenario::constant_alpha_gauge(fac, 1e-9);
    ASSERT_TRUE(gauged.has_value());
    EXPECT_TRUE(scenario::check_separability_constant_alpha(s, *gauged, 1e-9));
    EXPECT_LT(scenario::factorization_residual(s, *gauged), 1e-8 * kN);
  }
}

TEST(Separability, FullSpectrumScenario) {
  auto cfg = quiet(2);
  cfg.keep_spectra = true;
  const auto ds = generate_dataset(default_fleet(), MixingMatrix::uniform(0.1), cfg, {FaultState::all_normal()});
  const auto s = as_scenario(ds, 0, true);
  EXPECT_EQ(s.M(), kN);
  EXPECT_EQ(s.n(), 28);
  EXPECT_TRUE(scenario::validate_scenario(s).valid());
  const auto r = scenario::factor_readings(s, 1e-9);
  ASSERT_TRUE(std::holds_alternative<scenario::Factorization>(r));
  EXPECT_THROW(as_scenario(generate_dataset(default_fleet(), MixingMatrix{}, quiet(1), {FaultState::all_normal()}), 0, true),
               ConfigError);
}

TEST(Harmony, PositiveMixingIsHarmonious) {
  const auto ds = generate_dataset(default_fleet(), MixingMatrix::uniform(0.1), quiet(2), {FaultState::all_normal()});
  const auto fac = ground_truth_factorization(ds, 0);
  const auto assign = index_assignment();
  EXPECT_TRUE(scenario::is_harmonious(fac, assign));
  EXPECT_TRUE(scenario::validate_scenario(as_scenario(ds, 0)).valid());
}

TEST(Harmony, IdentityMixingIsDisjoint) {
  const auto ds = generate_dataset(default_fleet(), MixingMatrix{}, quiet(2), {FaultState::all_normal()});
  const auto fac = ground_truth_factorization(ds, 0);
  const auto assign = index_assignment();
  for (int j = 0; j < 4; ++j) {
    EXPECT_FALSE(scenario::is_j_harmonious(fac, assign, j));
    EXPECT_EQ(scenario::disjoint_indices(fac, assign, j).size(), 7u);
  }
}

TEST(Status, SensorFailureVersusEngineFailure) {
  const auto assign = index_assignment();
  {
    auto cfg = quiet(2);
    cfg.failed_sensors = {0};
    const auto ds = generate_dataset(default_fleet(), MixingMatrix::uniform(0.1), cfg, {FaultState::all_normal()});
    const auto fac = ground_truth_factorization(ds, 0);
    EXPECT_EQ(scenario::sensor_status(fac, assign, 0).condition, scenario::SensorCondition::non_operational);
    EXPECT_EQ(scenario::sensor_status(fac, assign, 0).indices.size(), 7u);
    for (int j = 1; j < 4; ++j) {
      EXPECT_EQ(scenario::sensor_status(fac, assign, j).condition, scenario::SensorCondition::operational);
    }
  }
  {
    const auto ds = generate_dataset(default_fleet(), MixingMatrix::uniform(0.1), quiet(2), standard_states());
    const auto fac = ground_truth_factorization(ds, 2);
    for (int j = 0; j < 4; ++j) {
      EXPECT_EQ(scenario::sensor_status(fac, assign, j).condition, scenario::SensorCondition::operational);
    }
    for (int i = 0; i < 7; ++i) {
      EXPECT_EQ(fac.alpha[0][i], Complex(0.0));
      EXPECT_FALSE(scenario::is_i_radiative(fac, i));
    }
    EXPECT_TRUE(scenario::is_i_radiative(fac, 7));
  }
}

TEST(Energy, ScalesWithSquaredMixing) {
  FaultState fs;
  for (int e = 1; e < kEngines; ++e) {
    fs.engines[static_cast<std::size_t>(e)] = EngineState::failure();
  }
  oracle::Gen g(31);
  double ref = -1.0;
  for (int trial = 0; trial < 6; ++trial) {
    MixingMatrix mix;
    for (int j = 1; j < 4; ++j) {
      mix.a(j, 0) = g.uniform(0.05, 1.0);
    }
    const auto ds = generate_dataset(default_fleet(), mix, quiet(1), {fs});
    for (int j = 0; j < 4; ++j) {
      const double e = ds.samples[0].health[static_cast<std::size_t>(j)].squaredNorm();
      const double a = mix.a(j, 0);
      if (ref < 0.0) {
        ref = e;
      }
      EXPECT_NEAR(e / (a * a), ref, 1e-9 * ref);
    }
  }
}
