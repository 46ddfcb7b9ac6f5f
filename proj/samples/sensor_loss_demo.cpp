// Loses one sensor two ways: on the small four-sensor scenario, where the
// verifiers show the basis mapping going blind and the frame mapping
// surviving, and on the turbine array, where the detectors do the same.

#include <iostream>

#include "reactive/reactive.hpp"

using namespace reactive;

int main(int argc, char** argv) {
  const std::string path = argc > 1 ? argv[1] : REACTIVE_SAMPLES_DIR "/harmonious.json";
  const auto doc = io::read_scenario_file(path);
  const auto& s = doc.scenario;
  const auto fac = scenario::separate(s, *doc.factorization);
  const auto sets = scenario::build_index_sets(s);
  if (!sets.assignment) {
    std::cerr << "scenario has coordinates no sensor hears\n";
    return 1;
  }
  for (const auto& r : {mappings::verify_thm_basis(s, fac, *sets.assignment, kDefaultTol, 0),
                        mappings::verify_thm_frame(s, fac, *sets.assignment, kDefaultTol, 0)}) {
    std::cout << r.theorem << " after losing sensor 1: spans " << (r.span.spans ? "yes" : "no") << ", rank "
              << r.span.rank << " of " << s.n() << "\n";
  }

  io::RunConfig cfg;
  cfg.samples_per_state = 16;
  const auto bundle = io::generate_bundle(cfg);
  const auto rep = io::detect_bundle(bundle);
  std::cout << "\nturbine, normal engines, sensor 1 failed, low noise:\n";
  const auto& row = rep.row("normal", "s1_failed");
  for (const auto* col : {"basis-low", "frame-low"}) {
    std::cout << "  " << col << " calls it normal in " << row.cells.at(col).correct_pct(row.truth) << "% of samples\n";
  }
  return 0;
}
