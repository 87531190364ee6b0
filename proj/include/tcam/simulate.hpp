// Event-driven gate-level simulation with inertial delays, plus a cycle-based
// reference evaluator.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tcam/netlist.hpp"
#include "tcam/timing.hpp"

namespace tcam {

struct TimingViolation {
  int cycle;  // clock edge index
  NodeId flipflop;
  bool setup;    // false: hold
  double slack;  // negative
};

struct SimTrace {
  std::vector<std::vector<bool>> inputs;   // [cycle][input]
  std::vector<std::vector<bool>> outputs;  // [cycle][output], sampled at the following edge
  std::vector<TimingViolation> violations;
};

/// Input vector k is applied at kT; at edge k (k >= 1) outputs are sampled into
/// outputs[k-1], then flip-flops capture D and drive Q at kT + t_cq.
/// init is indexed like n.flipflops(); empty means all zero.
SimTrace simulate(const Netlist& n, const std::vector<std::vector<bool>>& inputs, const TimingConfig& cfg,
                  const std::vector<bool>& init = {});

/// Zero-delay synchronous evaluation with the same cycle/output convention.
SimTrace simulate_cycles(const Netlist& n, const std::vector<std::vector<bool>>& inputs,
                         const std::vector<bool>& init = {});

/// Settled value of every node for the given flip-flop state and input vector.
std::vector<bool> settle(const Netlist& n, const std::vector<bool>& ff_state, const std::vector<bool>& in);

/// Fixpoint of the next-state function from all-zero with all inputs at 0;
/// all-zero if none is reached.
std::vector<bool> reset_state(const Netlist& n, bool* found = nullptr);

std::vector<std::vector<bool>> random_inputs(const Netlist& n, int cycles, std::uint64_t seed);

struct Equivalence {
  bool equivalent = true;
  int trial = -1;
  int cycle = -1;
  std::string output;
  long violations = 0;  // in b after warm-up
  std::string detail;
};

/// Random traces on both netlists, compared from cycle `warmup` on. b starts in
/// the state matching a's reset fixpoint (flip-flops take the value of their
/// combinational driver, matched by name; "_dup" copies follow their originals).
Equivalence equivalence_check(const Netlist& a, const Netlist& b, int cycles, int trials, std::uint64_t seed,
                              int warmup, const TimingConfig& cfg);

/// Initial state for b aligned to a's reset fixpoint.
std::vector<bool> aligned_state(const Netlist& a, const Netlist& b);

}  // namespace tcam
