#include "tcam/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>

#include <fmt/format.h>

namespace tcam {

namespace {

struct Event {
  double t;
  std::uint64_t seq;
  NodeId node;
  bool value;
  std::uint32_t token;
  bool operator>(const Event& o) const { return t != o.t ? t > o.t : seq > o.seq; }
};

bool eval_gate(const Netlist& n, NodeId g, const std::vector<char>& val) {
  const auto& node = n.node(g);
  switch (node.gate) {
    case GateKind::And:
    case GateKind::Nand: {
      bool v = true;
      for (NodeId f : node.fanin) v = v && val[f];
      return node.gate == GateKind::And ? v : !v;
    }
    case GateKind::Or:
    case GateKind::Nor: {
      bool v = false;
      for (NodeId f : node.fanin) v = v || val[f];
      return node.gate == GateKind::Or ? v : !v;
    }
    case GateKind::Xor:
    case GateKind::Xnor: {
      bool v = false;
      for (NodeId f : node.fanin) v ^= static_cast<bool>(val[f]);
      return node.gate == GateKind::Xor ? v : !v;
    }
    case GateKind::Not: return !val[node.fanin[0]];
    case GateKind::Buf: return val[node.fanin[0]];
  }
  return false;
}

class EventSim {
public:
  EventSim(const Netlist& n, const TimingConfig& cfg) : n_(n), cfg_(cfg), val_(n.size(), 0), token_(n.size(), 0),
                                                         pending_(n.size(), 0), pending_val_(n.size(), 0) {}

  SimTrace run(const std::vector<std::vector<bool>>& inputs, const std::vector<bool>& init) {
    SimTrace tr;
    tr.inputs = inputs;
    const auto ins = n_.inputs();
    const auto outs = n_.outputs();
    const auto ffs = n_.flipflops();
    const int K = static_cast<int>(inputs.size());
    cycles_ = K;
    viol_ = &tr.violations;
    std::vector<bool> state(ffs.size(), false);
    for (std::size_t i = 0; i < ffs.size() && i < init.size(); ++i) state[i] = init[i];
    const auto settled = settle(n_, state, std::vector<bool>(ins.size(), false));
    for (NodeId id = 0; id < n_.size(); ++id) val_[id] = settled[id];

    apply_inputs(ins, inputs.empty() ? std::vector<bool>{} : inputs[0], 0.0);
    std::vector<char> captured(ffs.size());
    for (int k = 1; k <= K; ++k) {
      const double edge = k * cfg_.T;
      drain(edge);
      std::vector<bool> sample(outs.size());
      for (std::size_t o = 0; o < outs.size(); ++o) sample[o] = val_[n_.node(outs[o]).fanin[0]];
      tr.outputs.push_back(std::move(sample));
      for (std::size_t i = 0; i < ffs.size(); ++i) captured[i] = val_[n_.node(ffs[i]).fanin[0]];
      for (std::size_t i = 0; i < ffs.size(); ++i)
        if (captured[i] != val_[ffs[i]]) push({edge + cfg_.t_cq, seq_++, ffs[i], captured[i] != 0, 0});
      if (k < K) apply_inputs(ins, inputs[static_cast<std::size_t>(k)], edge);
    }
    return tr;
  }

private:
  void push(Event e) { q_.push(e); }

  void apply_inputs(const std::vector<NodeId>& ins, const std::vector<bool>& vec, double t) {
    for (std::size_t i = 0; i < ins.size() && i < vec.size(); ++i)
      if (static_cast<bool>(val_[ins[i]]) != vec[i]) change(ins[i], vec[i], t);
  }

  void drain(double until) {
    while (!q_.empty() && q_.top().t < until) {
      const Event e = q_.top();
      q_.pop();
      if (n_.is_gate(e.node)) {
        if (e.token != token_[e.node]) continue;
        pending_[e.node] = 0;
      }
      if (static_cast<bool>(val_[e.node]) == e.value) continue;
      change(e.node, e.value, e.t);
    }
  }

  void change(NodeId id, bool v, double t) {
    val_[id] = v;
    for (const Pin& p : n_.fanout(id)) {
      const auto& s = n_.node(p.node);
      if (s.kind == NodeKind::Gate) {
        const bool nv = eval_gate(n_, p.node, val_);
        if (pending_[p.node]) {
          if (static_cast<bool>(pending_val_[p.node]) == nv) continue;
          ++token_[p.node];
          pending_[p.node] = 0;
        }
        if (nv != static_cast<bool>(val_[p.node])) {
          pending_[p.node] = 1;
          pending_val_[p.node] = nv;
          push({t + n_.stage_delay(p.node, p.pin), seq_++, p.node, nv, token_[p.node]});
        }
      } else if (s.kind == NodeKind::FlipFlop) {
        check(p.node, t);
      }
    }
  }

  void check(NodeId ff, double t) {
    const long k = std::lround(t / cfg_.T);
    if (k < 1 || k > cycles_) return;
    const double edge = static_cast<double>(k) * cfg_.T;
    if (t < edge) {
      if (t > edge - cfg_.t_su) viol_->push_back({static_cast<int>(k), ff, true, (edge - cfg_.t_su) - t});
    } else if (t < edge + cfg_.t_h) {
      viol_->push_back({static_cast<int>(k), ff, false, t - (edge + cfg_.t_h)});
    }
  }

  const Netlist& n_;
  const TimingConfig& cfg_;
  std::vector<char> val_;
  std::vector<std::uint32_t> token_;
  std::vector<char> pending_, pending_val_;
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> q_;
  std::uint64_t seq_ = 0;
  int cycles_ = 0;
  std::vector<TimingViolation>* viol_ = nullptr;
};

}  // namespace

namespace {

struct Levelized {
  std::vector<NodeId> ins, ffs, outs, order;
  explicit Levelized(const Netlist& n) : ins(n.inputs()), ffs(n.flipflops()), outs(n.outputs()), order(n.topo_gates()) {}

  void settle(const Netlist& n, const std::vector<bool>& ff_state, const std::vector<bool>& in,
              std::vector<char>& val) const {
    val.assign(n.size(), 0);
    for (std::size_t i = 0; i < ins.size() && i < in.size(); ++i) val[ins[i]] = in[i];
    for (std::size_t i = 0; i < ffs.size() && i < ff_state.size(); ++i) val[ffs[i]] = ff_state[i];
    for (NodeId g : order) val[g] = eval_gate(n, g, val);
    for (NodeId o : outs) val[o] = val[n.node(o).fanin[0]];
  }
};

}  // namespace

std::vector<bool> settle(const Netlist& n, const std::vector<bool>& ff_state, const std::vector<bool>& in) {
  std::vector<char> val;
  Levelized(n).settle(n, ff_state, in, val);
  return {val.begin(), val.end()};
}

SimTrace simulate(const Netlist& n, const std::vector<std::vector<bool>>& inputs, const TimingConfig& cfg,
                  const std::vector<bool>& init) {
  EventSim sim(n, cfg);
  return sim.run(inputs, init);
}

SimTrace simulate_cycles(const Netlist& n, const std::vector<std::vector<bool>>& inputs, const std::vector<bool>& init) {
  SimTrace tr;
  tr.inputs = inputs;
  const Levelized lv(n);
  std::vector<bool> state(lv.ffs.size(), false);
  for (std::size_t i = 0; i < lv.ffs.size() && i < init.size(); ++i) state[i] = init[i];
  std::vector<char> val;
  for (const auto& vec : inputs) {
    lv.settle(n, state, vec, val);
    std::vector<bool> o(lv.outs.size());
    for (std::size_t i = 0; i < lv.outs.size(); ++i) o[i] = val[lv.outs[i]];
    tr.outputs.push_back(std::move(o));
    for (std::size_t i = 0; i < lv.ffs.size(); ++i) state[i] = val[n.node(lv.ffs[i]).fanin[0]];
  }
  return tr;
}

std::vector<bool> reset_state(const Netlist& n, bool* found) {
  const Levelized lv(n);
  const std::vector<bool> zeros_in(lv.ins.size(), false);
  std::vector<bool> s(lv.ffs.size(), false);
  std::vector<char> val;
  for (int it = 0; it < 4096; ++it) {
    lv.settle(n, s, zeros_in, val);
    std::vector<bool> next(lv.ffs.size());
    for (std::size_t i = 0; i < lv.ffs.size(); ++i) next[i] = val[n.node(lv.ffs[i]).fanin[0]];
    if (next == s) {
      if (found) *found = true;
      return s;
    }
    s = std::move(next);
  }
  if (found) *found = false;
  return std::vector<bool>(lv.ffs.size(), false);
}

std::vector<std::vector<bool>> random_inputs(const Netlist& n, int cycles, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t w = n.inputs().size();
  std::vector<std::vector<bool>> v(static_cast<std::size_t>(cycles), std::vector<bool>(w));
  for (auto& row : v)
    for (std::size_t i = 0; i < w; ++i) row[i] = (rng() >> 17) & 1U;
  return v;
}

std::vector<bool> aligned_state(const Netlist& a, const Netlist& b) {
  bool found = false;
  const auto sa = reset_state(a, &found);
  const auto bff = b.flipflops();
  std::vector<bool> out(bff.size(), false);
  if (!found) return out;
  const auto val = settle(a, sa, std::vector<bool>(a.inputs().size(), false));
  for (std::size_t i = 0; i < bff.size(); ++i) {
    std::string name = b.node(comb_driver(b, bff[i]).first).name;
    for (;;) {
      if (auto id = a.find(name)) {
        out[i] = val[*id];
        break;
      }
      const auto pos = name.rfind("_dup");
      if (pos == std::string::npos) break;
      name = name.substr(0, pos);
    }
  }
  return out;
}

Equivalence equivalence_check(const Netlist& a, const Netlist& b, int cycles, int trials, std::uint64_t seed,
                              int warmup, const TimingConfig& cfg) {
  const auto names = [](const Netlist& n, const std::vector<NodeId>& ids) {
    std::vector<std::string> v;
    for (NodeId id : ids) v.push_back(n.node(id).name);
    return v;
  };
  if (names(a, a.inputs()) != names(b, b.inputs()) || names(a, a.outputs()) != names(b, b.outputs()))
    throw NetlistError("I/O signature mismatch");
  Equivalence eq;
  bool fa = false;
  const auto init_a = reset_state(a, &fa);
  const auto init_b = aligned_state(a, b);
  const bool a_clean = check_captures(a, {}, cfg).empty();
  for (int tr = 0; tr < trials; ++tr) {
    const auto in = random_inputs(a, cycles, seed + static_cast<std::uint64_t>(tr) * 7919);
    const auto ta = a_clean ? simulate_cycles(a, in, init_a) : simulate(a, in, cfg, init_a);
    const auto tb = simulate(b, in, cfg, init_b);
    for (const auto& v : tb.violations)
      if (v.cycle > warmup) ++eq.violations;
    if (eq.equivalent) {
      for (int k = warmup; k < cycles; ++k) {
        if (ta.outputs[static_cast<std::size_t>(k)] != tb.outputs[static_cast<std::size_t>(k)]) {
          eq.equivalent = false;
          eq.trial = tr;
          eq.cycle = k;
          const auto& oa = ta.outputs[static_cast<std::size_t>(k)];
          const auto& ob = tb.outputs[static_cast<std::size_t>(k)];
          for (std::size_t o = 0; o < oa.size(); ++o)
            if (oa[o] != ob[o]) {
              eq.output = a.node(a.outputs()[o]).name;
              break;
            }
          eq.detail = fmt::format("trial {} cycle {} output {}", tr, k, eq.output);
          break;
        }
      }
    }
  }
  if (eq.violations > 0) {
    if (eq.equivalent) eq.detail = fmt::format("{} timing violations", eq.violations);
    eq.equivalent = false;
  }
  return eq;
}

}  // namespace tcam
