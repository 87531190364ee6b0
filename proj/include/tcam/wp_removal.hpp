// Flip-flop removal flow: local retiming, removal indicators, sizing and inserted
// delay chosen by one MILP so the selected paths run with two waves.
#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "tcam/falsepath.hpp"
#include "tcam/milp.hpp"
#include "tcam/netlist.hpp"
#include "tcam/timing.hpp"
#include "tcam/wp_record.hpp"

namespace tcam {

struct RemovalRegion {
  NodeId ff = kNoNode;
  NodeId root = kNoNode;  // D driver of ff
  bool root_movable = false;
  std::vector<NodeId> left;   // gates the flip-flop may move across, topological order
  std::vector<NodeId> right;  // combinational forward cone of ff, topological order
  std::vector<PathPair> relevant;
  std::set<NodeId> sized;  // gates with a size choice
  std::string skip;        // reason the region cannot be modelled
  bool usable() const { return skip.empty(); }
};

RemovalRegion build_region(const Netlist& n, NodeId ff, std::vector<PathPair> relevant,
                           const std::vector<WaveCut>& cuts, const TimingConfig& cfg);

enum class EdgeRole { Launch, Entry, Internal, FlipFlop, Right, Side };

struct ModelEdge {
  Pin to;           // sink gate and pin
  NodeId from;      // driver seen at the pin (may be a flip-flop)
  NodeId src;       // combinational source behind any flip-flops
  int weight = 0;
  EdgeRole role = EdgeRole::Side;
  int y = -1;       // removal indicator, -1 if removal is impossible
  bool relevant = false;
};

struct RemovalModel {
  milp::Model m;
  std::map<NodeId, int> lag, xi, late, early, wlate, wearly, wave;
  std::map<NodeId, std::vector<int>> size;  // one binary per size level
  std::vector<ModelEdge> edges;
  bool leftward = false;
};

/// leftward: no removal, no inserted delay or resizing; the objective prefers
/// moving the flip-flop towards its inputs.
RemovalModel build_removal_model(const Netlist& n, const RemovalRegion& region, const std::vector<WaveCut>& cuts,
                                 const TimingConfig& cfg, bool leftward = false);

/// Outcome of one construction attempt at a flip-flop.
struct Construction {
  bool ok = false;
  std::string why;
  Netlist netlist;
  std::vector<WaveCut> new_cuts;
  std::vector<std::string> removed;  // flip-flops gone from the netlist
  std::vector<std::string> created;  // flip-flops added by retiming
  std::vector<WpRecord> records;
  double xi_added = 0;
  int duplicated = 0;
  int pairs_used = 0;
  milp::Solution sol;
};

Construction apply_removal_solution(const Netlist& n, const RemovalRegion& region, const RemovalModel& model,
                                    const milp::Solution& sol, const std::vector<WaveCut>& cuts,
                                    const TimingConfig& cfg);

/// Builds and solves the removal model, dropping the longest pair on infeasibility.
Construction try_removal(const Netlist& n, NodeId ff, const std::vector<PathPair>& pairs,
                         const std::vector<WaveCut>& cuts, const TimingConfig& cfg);

}  // namespace tcam
