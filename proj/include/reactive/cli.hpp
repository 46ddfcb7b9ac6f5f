#pragma once

// The reactive command line: validate, theorems, generate, detect, sweep.
// Exit codes: 0 success, 1 domain violation, 2 I/O or parse error.

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "reactive/experiment.hpp"
#include "reactive/json_io.hpp"
#include "reactive/mappings.hpp"
#include "reactive/scenario.hpp"

namespace reactive::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitIo = 2;

enum class Separability { neither, pre_separable, separable };

inline std::string to_string(Separability s) {
  switch (s) {
    case Separability::neither: return "not pre-separable";
    case Separability::pre_separable: return "pre-separable";
    case Separability::separable: return "separable";
  }
  return "unknown";
}

/// Everything the scenario commands derive from a scenario file.
struct Analysis {
  io::ScenarioDocument doc;
  scenario::ValidityReport validity;
  Separability separability = Separability::neither;
  std::optional<scenario::NotPreSeparable> not_pre_separable;
  std::optional<scenario::Factorization> factorization;  ///< separated, when separable
  std::string separation_error;
  std::optional<scenario::IndexAssignment> assignment;
  scenario::IndexSet uncoverable;
};

/// Uses the file's factorization when it reproduces the readings, otherwise
/// factors the readings directly.
inline Analysis analyze(io::ScenarioDocument doc, double tol) {
  Analysis a{std::move(doc), {}, {}, {}, {}, {}, {}, {}};
  const auto& s = a.doc.scenario;
  a.validity = scenario::validate_scenario(s);

  std::optional<scenario::Factorization> pre;
  if (a.doc.factorization) {
    const double scale = std::max(1.0, scenario::detail::max_modulus(s.readings()));
    if (scenario::factorization_residual(s, *a.doc.factorization) <= tol * scale * 10.0) {
      pre = a.doc.factorization;
    }
  }
  if (!pre) {
    auto r = scenario::factor_readings(s, tol);
    if (auto* bad = std::get_if<scenario::NotPreSeparable>(&r)) {
      a.not_pre_separable = *bad;
    } else {
      pre = std::get<scenario::Factorization>(std::move(r));
    }
  }
  if (pre) {
    a.separability = Separability::pre_separable;
    try {
      a.factorization = scenario::separate(s, *pre, tol);
      a.separability = Separability::separable;
    } catch (const NotSeparableError& e) {
      a.separation_error = e.what();
    }
  }
  auto sets = scenario::build_index_sets(s, tol);
  a.assignment = std::move(sets.assignment);
  a.uncoverable = std::move(sets.uncoverable);
  return a;
}

namespace detail {

inline std::string yes_no(bool b) { return b ? "yes" : "no"; }

inline std::string one_based(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out += (i ? ", " : "") + std::to_string(v[i] + 1);
  }
  return out;
}

inline void print_header(std::ostream& out, const Analysis& a) {
  const auto& s = a.doc.scenario;
  out << "scenario: M=" << s.M() << " N=" << s.N() << " K=" << s.K() << " n=" << s.n()
      << " health=" << scenario::to_string(s.health().kind()) << "\n";
  out << "valid: " << yes_no(a.validity.valid()) << "\n";
  for (const auto& v : a.validity.violations) {
    out << "  violation " << scenario::to_string(v.kind) << ": " << v.message << "\n";
  }
  out << "separability: " << to_string(a.separability);
  if (a.not_pre_separable) {
    out << " (offending f: " << one_based(a.not_pre_separable->offending) << ")";
  }
  if (!a.separation_error.empty()) {
    out << " (" << a.separation_error << ")";
  }
  out << "\n";
}

inline void print_predicates(std::ostream& out, const Analysis& a, double tol) {
  if (!a.factorization) {
    return;
  }
  const auto& s = a.doc.scenario;
  const auto& fac = *a.factorization;
  out << "predicates:\n  " << std::left << std::setw(5) << "i" << std::setw(11) << "radiative" << std::setw(10)
      << "dominant" << "strongly_dominant\n";
  for (int i = 0; i < s.n(); ++i) {
    out << "  " << std::setw(5) << i + 1 << std::setw(11) << yes_no(scenario::is_i_radiative(fac, i, tol))
        << std::setw(10) << yes_no(scenario::is_i_dominant(fac, i, tol))
        << yes_no(scenario::is_strongly_i_dominant(fac, i, s.N(), tol)) << "\n";
  }
  if (!a.assignment) {
    out << "index sets: no assignment (coordinates heard by no sensor: " << one_based(a.uncoverable) << ")\n";
    return;
  }
  out << "index sets:\n  " << std::setw(5) << "j" << std::setw(20) << "I_j" << "harmonious\n";
  for (int j = 0; j < s.N(); ++j) {
    const auto dis = scenario::disjoint_indices(fac, *a.assignment, j, tol);
    out << "  " << std::setw(5) << j + 1 << std::setw(20) << ("{" + one_based(a.assignment->I(j)) + "}")
        << (dis.empty() ? "yes" : "no (only sensor " + std::to_string(j + 1) + " hears " + one_based(dis) + ")")
        << "\n";
  }
  out << std::right;
}

inline void print_report(std::ostream& out, const mappings::TheoremReport& r) {
  out << r.theorem << ": " << r.claim << "\n";
  for (const auto& h : r.hypotheses) {
    out << "  hypothesis " << h.name << ": " << yes_no(h.holds);
    if (!h.failing.empty()) {
      out << " (fails at " << one_based(h.failing) << ")";
    }
    out << "\n";
  }
  out << "  span: " << yes_no(r.span.spans) << " (rank " << r.span.rank << ", sigma_min " << r.span.sigma_min
      << ", sigma_max " << r.span.sigma_max << ", " << r.card << " elements, " << r.distinct_card << " distinct)\n";
  if (!r.uncovered.empty()) {
    out << "  uncovered coordinates: " << one_based(r.uncovered) << "\n";
  }
  for (const auto& m : r.margins) {
    out << "  margin i=" << m.i + 1 << ": sensor " << m.j_i + 1 << " |gamma|=" << m.top << " vs (N-1)*rival=" << m.rival
        << (m.strict() ? " strict" : " not strict") << "\n";
  }
  if (r.basis_independent) {
    out << "  extracted basis independent: " << yes_no(*r.basis_independent) << "\n";
  }
  out << "  conclusion: "
      << (r.conclusion_verified ? (*r.conclusion_verified ? "verified" : "NOT verified") : "not applicable") << "\n";
}

}  // namespace detail

struct ScenarioOptions {
  std::string path;
  double tol = kDefaultTol;
};

inline int cmd_validate(const ScenarioOptions& opt, std::ostream& out) {
  const Analysis a = analyze(io::read_scenario_file(opt.path), opt.tol);
  detail::print_header(out, a);
  detail::print_predicates(out, a, opt.tol);
  return a.validity.valid() ? kExitOk : kExitDomain;
}

struct TheoremOptions {
  ScenarioOptions scenario;
  std::optional<int> fail_sensor;  ///< 0-based
  std::string out_dir;
  bool strict = false;  ///< every conclusion is demanded, so unmet hypotheses fail
};

inline std::vector<mappings::TheoremReport> run_theorems(const Analysis& a, std::optional<int> failed, double tol) {
  const auto& s = a.doc.scenario;
  const auto& fac = *a.factorization;
  std::vector<mappings::TheoremReport> reports;
  if (a.assignment) {
    reports.push_back(mappings::verify_thm_basis(s, fac, *a.assignment, tol, failed));
    reports.push_back(mappings::verify_thm_frame(s, fac, *a.assignment, tol, failed));
  }
  reports.push_back(
      mappings::verify_thm_projective(s, fac, tol, failed, a.assignment ? &*a.assignment : nullptr));
  // Strong dominance concerns the healthy sensor array.
  reports.push_back(mappings::verify_thm_strong(s, fac, tol));
  return reports;
}

inline int cmd_theorems(const TheoremOptions& opt, std::ostream& out) {
  const Analysis a = analyze(io::read_scenario_file(opt.scenario.path), opt.scenario.tol);
  detail::print_header(out, a);
  const auto& s = a.doc.scenario;
  if (opt.fail_sensor && (*opt.fail_sensor < 0 || *opt.fail_sensor >= s.N())) {
    throw ConfigError("--fail-sensor must be 1.." + std::to_string(s.N()));
  }
  if (!a.validity.valid() || !a.factorization) {
    out << "theorems: not run (scenario must be valid and separable)\n";
    return kExitDomain;
  }
  if (!a.assignment) {
    out << "basis, frame: not run (coordinates heard by no sensor: " << detail::one_based(a.uncoverable) << ")\n";
  }
  const auto reports = run_theorems(a, opt.fail_sensor, opt.scenario.tol);
  bool ok = true;
  io::json list = io::json::array();
  for (const auto& r : reports) {
    detail::print_report(out, r);
    list.push_back(io::theorem_report_to_json(r));
    if (r.hypotheses_hold ? !r.passed() : opt.strict) {
      ok = false;
    }
  }
  if (!opt.out_dir.empty()) {
    std::filesystem::create_directories(opt.out_dir);
    io::write_json_file((std::filesystem::path(opt.out_dir) / "theorems.json").string(),
                        io::json{{"scenario", opt.scenario.path},
                                 {"failed_sensor", opt.fail_sensor ? io::json(*opt.fail_sensor + 1) : io::json(nullptr)},
                                 {"tolerance", opt.scenario.tol},
                                 {"reports", list}});
  }
  return ok ? kExitOk : kExitDomain;
}

struct RunOptions {
  std::string config_path;
  std::string out_dir;
  std::string dataset_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> snr_range;
  std::optional<int> fail_sensor;  ///< 0-based
};

inline io::RunConfig load_config(const RunOptions& opt) {
  io::RunConfig c = opt.config_path.empty() ? io::RunConfig{} : io::read_run_config(opt.config_path);
  if (opt.seed) {
    c.seed = *opt.seed;
  }
  if (opt.fail_sensor) {
    c.failed_sensor = *opt.fail_sensor;
  }
  if (opt.snr_range) {
    c.sweep_grid = io::parse_snr_range(*opt.snr_range);
  }
  c.validate();
  return c;
}

inline std::filesystem::path require_out(const RunOptions& opt) {
  if (opt.out_dir.empty()) {
    throw ConfigError("--out DIR is required");
  }
  std::error_code ec;
  std::filesystem::create_directories(opt.out_dir, ec);
  if (ec) {
    throw IoError("cannot create " + opt.out_dir + ": " + ec.message());
  }
  return opt.out_dir;
}

inline int cmd_generate(const RunOptions& opt, std::ostream& out) {
  const auto c = load_config(opt);
  const auto dir = require_out(opt);
  const auto b = io::generate_bundle(c);
  io::write_bundle(dir, b);
  for (std::size_t i = 0; i < b.conditions.size(); ++i) {
    out << b.conditions[i].name() << ": " << b.datasets[i].samples.size() << " samples, sigma "
        << b.datasets[i].noise_sigma << "\n";
  }
  out << "wrote " << dir.string() << "\n";
  return kExitOk;
}

inline void print_results(std::ostream& out, const detector::DetectionReport& rep) {
  out << std::left << std::setw(12) << "state" << std::setw(11) << "sensor";
  for (const auto& c : io::result_columns()) {
    out << std::setw(12) << c;
  }
  out << "\n" << std::fixed << std::setprecision(1);
  for (const auto& r : rep.rows) {
    out << std::setw(12) << r.state << std::setw(11) << r.sensor;
    for (const auto& c : io::result_columns()) {
      const auto& cell = r.cells.at(c);
      std::ostringstream ss;
      ss << std::fixed << std::setprecision(1) << cell.correct_pct(r.truth);
      if (r.truth == detector::Condition::failure && c.rfind("frame", 0) == 0) {
        ss << "/" << cell.combined_pct();
      }
      out << std::setw(12) << ss.str();
    }
    out << "\n";
  }
  out << std::right << std::defaultfloat << std::setprecision(6);
}

/// Detects on a generated bundle (--dataset) or on a fresh in-memory run.
inline int cmd_detect(const RunOptions& opt, std::ostream& out) {
  io::Bundle b;
  if (!opt.dataset_dir.empty()) {
    if (!opt.config_path.empty() || opt.seed || opt.fail_sensor) {
      throw ConfigError("--dataset carries its own config; drop --config/--seed/--fail-sensor");
    }
    b = io::read_bundle(opt.dataset_dir);
  } else {
    b = io::generate_bundle(load_config(opt));
  }
  const auto dir = require_out(opt);
  const auto rep = io::detect_bundle(b);
  io::write_text_file((dir / "results.csv").string(), io::results_csv(rep));
  io::write_json_file((dir / "results.json").string(), io::results_json(rep, b.config));
  print_results(out, rep);
  out << "wrote " << (dir / "results.csv").string() << "\n";
  return kExitOk;
}

inline int cmd_sweep(const RunOptions& opt, std::ostream& out) {
  const auto c = load_config(opt);
  const auto dir = require_out(opt);
  const auto pts = io::run_sweep(c);
  io::write_text_file((dir / "sweep.csv").string(), io::sweep_csv(pts));
  for (const auto& [name, text] : io::sweep_plot_files(pts)) {
    io::write_text_file((dir / name).string(), text);
  }
  io::write_json_file((dir / "sweep.json").string(),
                      io::json{{"config", io::run_config_to_json(c)}, {"points", c.sweep_grid.points().size()}});
  out << pts.size() / 4 << " SNR points, wrote " << (dir / "sweep.csv").string() << "\n";
  return kExitOk;
}

/// Parses and dispatches; args exclude the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reactive sensing: scenario checks, theorem verifiers and the turbine detector experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "0.1.0");

  ScenarioOptions sopt;
  TheoremOptions topt;
  RunOptions ropt;
  int fail_sensor_1 = 0;

  auto* validate = app.add_subcommand("validate", "Check a scenario file and print its predicate table");
  validate->add_option("scenario", sopt.path, "Scenario JSON file");
  validate->add_option("--config", sopt.path, "Scenario JSON file");
  validate->add_option("--tol", sopt.tol, "Numerical tolerance")->check(CLI::PositiveNumber);

  auto* theorems = app.add_subcommand("theorems", "Run the basis, frame, projective and strong-dominance verifiers");
  theorems->add_option("scenario", topt.scenario.path, "Scenario JSON file");
  theorems->add_option("--config", topt.scenario.path, "Scenario JSON file");
  theorems->add_option("--tol", topt.scenario.tol, "Numerical tolerance")->check(CLI::PositiveNumber);
  auto* fs_opt = theorems->add_option("--fail-sensor", fail_sensor_1, "Zero sensor J (1-based) before mapping")
                     ->check(CLI::PositiveNumber);
  theorems->add_option("--out", topt.out_dir, "Directory for theorems.json");
  theorems->add_flag("--strict", topt.strict, "Treat unmet hypotheses as failures");

  auto add_run_options = [&](CLI::App* sub, bool with_snr) {
    sub->add_option("--config", ropt.config_path, "Run config JSON (defaults when omitted)");
    sub->add_option("--out", ropt.out_dir, "Output directory")->required();
    sub->add_option("--seed", ropt.seed, "Override the config seed");
    sub->add_option("--fail-sensor", ropt.fail_sensor, "Sensor J (1-based) removed in the failed conditions")
        ->check(CLI::Range(1, 4))
        ->transform([](std::string v) { return std::to_string(std::stoi(v) - 1); });
    if (with_snr) {
      sub->add_option("--snr-range", ropt.snr_range, "SNR grid LO:HI:STEP in dB");
    }
  };
  auto* generate = app.add_subcommand("generate", "Simulate the four-condition turbine dataset bundle");
  add_run_options(generate, false);
  auto* detect = app.add_subcommand("detect", "Score both pipelines over the four conditions");
  add_run_options(detect, false);
  detect->add_option("--dataset", ropt.dataset_dir, "Bundle directory written by generate");
  auto* sweep = app.add_subcommand("sweep", "Detection and false-alarm curves over an SNR grid");
  add_run_options(sweep, true);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitIo;
  }

  try {
    if (validate->parsed()) {
      if (sopt.path.empty()) {
        throw ConfigError("validate needs a scenario file");
      }
      return cmd_validate(sopt, out);
    }
    if (theorems->parsed()) {
      if (topt.scenario.path.empty()) {
        throw ConfigError("theorems needs a scenario file");
      }
      if (fs_opt->count() > 0) {
        topt.fail_sensor = fail_sensor_1 - 1;
      }
      return cmd_theorems(topt, out);
    }
    if (generate->parsed()) {
      return cmd_generate(ropt, out);
    }
    if (detect->parsed()) {
      return cmd_detect(ropt, out);
    }
    if (sweep->parsed()) {
      return cmd_sweep(ropt, out);
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  }
  return kExitIo;
}

}  // namespace reactive::cli
