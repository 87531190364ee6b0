// Retiming algebra over the weight view and flip-flop materialization.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "tcam/netlist.hpp"
#include "tcam/timing.hpp"

namespace tcam {

/// Integer lag per gate; absent gates and all ports have lag 0.
using RetimingAssignment = std::map<NodeId, int>;

int lag(const RetimingAssignment& r, NodeId g);

int retimed_weight(const Netlist& n, const RetimingAssignment& r, const WeightedEdge& e);

/// Number of flip-flops strictly between launch and capture.
int path_weight(const Netlist& n, const Path& p);
/// Sum of retimed weights over the connections of p.
int retimed_path_weight(const Netlist& n, const RetimingAssignment& r, const Path& p);

struct LegalityReport {
  bool legal = true;
  std::vector<std::string> violations;
};

LegalityReport is_legal(const Netlist& n, const RetimingAssignment& r, const TimingConfig& cfg);

/// Rebuilds flip-flop chains so edge i of wv carries weights[i] flip-flops.
/// Sources whose branch weights are unchanged keep their flip-flops untouched;
/// rebuilt chains reuse original names by depth and mark new ones is_retimed.
Netlist materialize(const Netlist& n, const WeightView& wv, const std::vector<int>& weights,
                    std::vector<std::string>* created = nullptr);

Netlist apply_retiming(const Netlist& n, const RetimingAssignment& r, std::vector<std::string>* created = nullptr);

/// Sum over gates of r(g) * (fan-in edges - fan-out edges); equals the change of
/// the weight-view total.
int flipflop_delta(const Netlist& n, const RetimingAssignment& r);

std::string retiming_to_json(const Netlist& n, const RetimingAssignment& r);
RetimingAssignment retiming_from_json(const Netlist& n, const std::string& text);

}  // namespace tcam
