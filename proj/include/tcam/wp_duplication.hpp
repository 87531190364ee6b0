// Duplication flow: copy the logic around a flip-flop without the flip-flop,
// tune the copy into the two-wave window and anchor what can be shared.
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tcam/falsepath.hpp"
#include "tcam/milp.hpp"
#include "tcam/netlist.hpp"
#include "tcam/timing.hpp"
#include "tcam/wp_record.hpp"
#include "tcam/wp_removal.hpp"

namespace tcam {

/// Pair paths by node name, so they survive netlist edits.
struct NamedPath {
  std::vector<std::string> nodes;
  std::vector<int> pins;
};

NamedPath named(const Netlist& n, const Path& p);

/// Moves ff towards its inputs where that keeps every path single-period.
/// Returns the input netlist unchanged when nothing moves or the move fails checks.
Netlist leftward_retime(const Netlist& n, NodeId ff, const std::vector<WaveCut>& cuts, const TimingConfig& cfg,
                        std::vector<std::string>* created = nullptr);

struct DuplicationPlan {
  std::string site;
  std::vector<NodeId> phi;       // flip-flops the copy bypasses
  std::vector<NodeId> captures;  // flip-flops whose D moves to the copy
  std::vector<NodeId> right;     // copied gates downstream of phi, topological order
  std::vector<NodeId> left;      // copy candidates upstream of phi, topological order
  std::set<Pin> cut_pins;        // right-copy pins that read a phi flip-flop
  std::set<NodeId> sized;
  std::vector<std::vector<std::string>> relevant_keys;
  std::string skip;
  bool usable() const { return skip.empty(); }
};

/// relevant: merged paths (with the site flip-flop in the middle) by name.
DuplicationPlan plan_duplication(const Netlist& n, const std::string& site, const std::vector<NamedPath>& relevant,
                                 const std::vector<WaveCut>& cuts, const TimingConfig& cfg);

struct DuplicationModel {
  milp::Model m;
  std::map<NodeId, int> anchor, xi, late, early, wlate, wearly;
  std::map<NodeId, std::vector<int>> size;
};

/// fixed_anchors pins chosen anchor variables (1: use the original gate).
DuplicationModel build_duplication_model(const Netlist& n, const DuplicationPlan& plan,
                                         const std::vector<WaveCut>& cuts, const TimingConfig& cfg,
                                         const std::map<NodeId, int>* fixed_anchors = nullptr);

Construction apply_duplication(const Netlist& n, const DuplicationPlan& plan, const DuplicationModel& model,
                               const milp::Solution& sol, const std::vector<WaveCut>& cuts, const TimingConfig& cfg);

Construction try_duplication(const Netlist& n, NodeId ff, const std::vector<PathPair>& pairs,
                             const std::vector<WaveCut>& cuts, const TimingConfig& cfg);

struct RepairReport {
  bool ok = false;
  int iterations = 0;
  std::vector<std::string> actions;
  std::string why;
};

/// Re-checks all captures in lookup mode (and typical mode) and nudges sizes and
/// inserted delays of `editable` gates until both pass or the iteration cap hits.
RepairReport verify_and_repair(Netlist& n, const std::vector<WaveCut>& cuts, const TimingConfig& cfg,
                               const std::set<std::string>& editable);

}  // namespace tcam
