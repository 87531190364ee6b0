// Attacker models: gray-region screening with a tau-inaccurate delay estimate and
// the false-path sizing attack, plus cost estimates for brute-force attacks.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tcam/netlist.hpp"
#include "tcam/timing.hpp"
#include "tcam/wp_record.hpp"
#include "tcam/workflow.hpp"

namespace tcam {

struct SizingOutcome {
  std::vector<std::string> path;
  bool success = false;
  double delay_before = 0, delay_after = 0;
  std::vector<std::vector<std::string>> blocking;  // irreducible set of true-path limits
  std::string why;
};

struct AttackReport {
  // screening of sampled single-period paths
  int definitely_single = 0, definitely_wp = 0, suspicious_true = 0, suspicious_false = 0;
  // point estimates of suspicious paths on either side of T
  int estimates_below_T = 0, estimates_above_T = 0;
  // constructed records
  int records_checked = 0, records_suspicious = 0, records_definitely_single = 0, records_definitely_wp = 0;
  // sizing attack
  int attempted = 0, failed = 0;
  std::vector<SizingOutcome> outcomes;
  bool sized_checked = false, sized_equivalent = true;
  long sized_violations = 0;
  // brute-force cost estimates
  int test_vector_budget = 0;
  int simulation_exponent = 0;
};

/// Gray status of a record: both its shortest and longest two-wave bounds (the
/// latter with t_su) must have T inside their gray regions.
Gray record_gray(const WpRecord& r, const TimingConfig& cfg);

/// Draws attacker estimates d * u, u uniform in [1 - tau, 1 + tau], for every
/// sampled path and record. Classification follows the gray region of each path.
AttackReport screen(const Netlist& n, const std::vector<WaveCut>& cuts, const std::vector<WpRecord>& records,
                    const TimingConfig& cfg, std::uint64_t noise_seed);

/// One MILP per false path: size and delay its gates into [T + t_h, 2T - t_su]
/// while every true path sharing a gate stays within T - t_su. Successful sizings
/// are applied together to a copy that is then simulated against n.
AttackReport sizing_attack(const Netlist& n, const std::vector<Path>& false_paths, const std::vector<Path>& true_paths,
                           const TimingConfig& cfg, std::uint64_t seed, int sim_cycles = 500);

/// Samples suspicious false paths and critical true paths the way an attacker would.
void attack_sample(const Netlist& n, const std::vector<WaveCut>& cuts, const TimingConfig& cfg, std::uint64_t seed,
                   int limit, std::vector<Path>& false_paths, std::vector<Path>& true_paths);

std::string attack_to_json(const AttackReport& r);

}  // namespace tcam
