// Static sensitization of combinational paths.
#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "tcam/netlist.hpp"
#include "tcam/sat.hpp"
#include "tcam/timing.hpp"

namespace tcam {

struct SideLiteral {
  NodeId gate;
  int pin;
  NodeId net;  // driver of the side input
  bool value;  // required non-controlling value
};

struct SensitizationCondition {
  sat::Cnf cnf;
  std::vector<SideLiteral> side;
  std::map<NodeId, int> var_of;       // net driver -> CNF variable
  std::vector<NodeId> free_nets;      // cone leaves (inputs and flip-flop outputs)
  bool has_xor = false;               // an XOR/XNOR on the path left side inputs unconstrained
};

/// Flip-flops in `transparent` are treated as wires (Q follows D), which gives the
/// single-period view of a path that crosses them.
SensitizationCondition build_condition(const Netlist& n, const Path& p, const std::set<NodeId>& transparent = {});

enum class PathStatus { True, False, Unknown };

PathStatus sensitize(const Netlist& n, const Path& p, long decision_limit = 1000000,
                     const std::set<NodeId>& transparent = {});

/// Unknown (resource limit) counts as true.
bool is_true_path(const Netlist& n, const Path& p, long decision_limit = 1000000,
                  const std::set<NodeId>& transparent = {});

struct PathPair {
  Path left;    // launch -> ff
  Path right;   // ff -> capture
  Path merged;  // launch -> capture with ff in the middle
  double delay;     // typical, including launch offset
  double reach_lo;  // with all gates at their fastest size and no inserted delay
  double reach_hi;  // with all gates at their slowest size and xi_max each
  bool merged_false;
  bool xor_flag;
};

Path merge(const Path& left, const Path& right);

/// Delay bounds a merged path can be tuned to: fastest sizes without inserted
/// delay up to slowest sizes with xi_max on every gate.
std::pair<double, double> reachable_delay(const Netlist& n, const Path& merged, const TimingConfig& cfg);

/// Upper bound on a two-wave arrival that still sits in the window and the gray region.
double wave_upper(const TimingConfig& cfg);
/// Lower bound on a two-wave arrival.
double wave_lower(const TimingConfig& cfg);

struct PairScan {
  int n_candidates = 0;  // qualifying pairs
  std::vector<PathPair> pairs;
  int left_sampled = 0, right_sampled = 0;
  int left_false = 0, right_false = 0;
  bool truncated = false;
};

/// Samples true paths on both sides of ff and pairs them. With want_false the
/// merged path must be false in the single-period view, otherwise true. A pair
/// qualifies when its delay can be tuned into the two-wave window.
PairScan scan_pairs(const Netlist& n, NodeId ff, const TimingConfig& cfg, std::uint64_t seed, bool want_false);

PairScan check_wp_false_paths(const Netlist& n, NodeId ff, const TimingConfig& cfg, std::uint64_t seed);

}  // namespace tcam
