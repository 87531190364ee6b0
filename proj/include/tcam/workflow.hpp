// Top-level construction loop: candidate ordering, both construction flows,
// blocking of nearby flip-flops, target counting and the summary metrics.
#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "tcam/netlist.hpp"
#include "tcam/timing.hpp"
#include "tcam/wp_record.hpp"

namespace tcam {

/// Flip-flops by decreasing (longest fan-in path + longest fan-out path), ties by id.
std::vector<NodeId> sort_candidates(const Netlist& n, const TimingConfig& cfg);

/// Drops flip-flops with more than fanio_threshold source or sink flip-flops.
std::vector<NodeId> filter_candidates(const std::vector<NodeId>& order, const Netlist& n, const TimingConfig& cfg);

/// Threshold for blocking nearby flip-flops; cfg.dis_t when set.
double distance_threshold(const Netlist& n, const TimingConfig& cfg, const Placement* placement = nullptr);

struct SiteOutcome {
  std::string ff;
  bool false_phase = true;
  bool ok = false;
  std::string method;
  std::string why;
  int n_wpt = 0, n_wpf = 0;
};

struct ConstructionState {
  std::set<std::string> blocked;   // F_w
  std::vector<std::string> order;  // F_n
  int remaining_wpf = 0, remaining_wpt = 0;
  std::vector<WpRecord> records;
  std::vector<WaveCut> cuts;
  int n_d = 0;
  int n_f_candidates = 0;  // qualifying false pairs seen by the false phase
  double dis_t = 0;
  std::vector<SiteOutcome> sites;
};

struct ConstructionResult {
  Netlist netlist;
  ConstructionState state;
};

/// equivalence_cycles: cycles per trial of the per-site sanity simulation (0 skips it).
ConstructionResult construct(const Netlist& n, const TimingConfig& cfg, std::uint64_t seed,
                             const Placement* placement = nullptr, int equivalence_cycles = 300);

struct Screening {
  int n_t = 0, n_f = 0;  // suspicious single-period true/false paths
  int definitely_single = 0, definitely_wp = 0;
  int two_wave_unrecorded = 0;  // paths through cuts without a record
  int sampled = 0;
  bool exact = true;
};

struct ScreenedPath {
  Path path;
  double delay;  // launch offset + stage delays, typical
  Gray gray;
  bool true_path;  // single-period view; only evaluated for suspicious paths
};

/// Classifies sampled launch->capture paths on their typical delay plus t_su.
/// Paths through cuts are left out. kept receives the classified paths.
Screening screen_paths(const Netlist& n, const std::vector<WaveCut>& cuts, const std::vector<WpRecord>& records,
                       const TimingConfig& cfg, std::uint64_t seed, std::vector<ScreenedPath>* kept = nullptr);

struct Metrics {
  int n_wpt = 0, n_wpf = 0;
  Screening screening;
  int n_t_prime = 0, n_f_prime = 0;
  int n_f_candidates = 0;
  double n_p = 0;
  int n_d = 0, n_r = 0;
  int removal_sites = 0, duplication_sites = 0;
  int gates_before = 0, gates_after = 0, ffs_before = 0, ffs_after = 0;
  int remaining_wpf = 0, remaining_wpt = 0;
};

Metrics report(const ConstructionState& state, const Netlist& before, const Netlist& after, const TimingConfig& cfg,
               std::uint64_t seed);

/// runtime < 0 leaves the field out, which keeps reports byte-identical across runs.
std::string metrics_to_json(const Metrics& m, double runtime = -1);

/// Records plus the full cut list.
std::string ground_truth_json(const std::vector<WpRecord>& records, const std::vector<WaveCut>& cuts);
void ground_truth_from_json(const std::string& text, std::vector<WpRecord>& records, std::vector<WaveCut>& cuts);

}  // namespace tcam
