#include "tcam/falsepath.hpp"

#include <algorithm>
#include <functional>

namespace tcam {

namespace {

class Encoder {
public:
  Encoder(const Netlist& n, const std::set<NodeId>& transparent, SensitizationCondition& c)
      : n_(n), transparent_(transparent), c_(c) {}

  NodeId resolve(NodeId id) const {
    std::size_t guard = 0;
    while (n_.is_ff(id) && transparent_.count(id)) {
      id = n_.node(id).fanin[0];
      if (++guard > n_.size()) throw NetlistError("transparent flip-flop ring");
    }
    return id;
  }

  int var(NodeId net) {
    net = resolve(net);
    auto it = c_.var_of.find(net);
    if (it != c_.var_of.end()) return it->second;
    const int v = c_.cnf.new_var();
    c_.var_of[net] = v;
    if (n_.is_gate(net)) {
      encode(net, v);
    } else {
      c_.free_nets.push_back(net);
    }
    return v;
  }

private:
  void encode(NodeId g, int o) {
    const auto& node = n_.node(g);
    std::vector<int> in;
    for (NodeId f : node.fanin) in.push_back(var(f));
    auto& cnf = c_.cnf;
    switch (node.gate) {
      case GateKind::Buf:
        cnf.add({o, -in[0]});
        cnf.add({-o, in[0]});
        break;
      case GateKind::Not:
        cnf.add({o, in[0]});
        cnf.add({-o, -in[0]});
        break;
      case GateKind::And:
      case GateKind::Nand: {
        const int out = node.gate == GateKind::And ? o : -o;
        std::vector<int> big{out};
        for (int i : in) {
          cnf.add({-out, i});
          big.push_back(-i);
        }
        cnf.add(big);
        break;
      }
      case GateKind::Or:
      case GateKind::Nor: {
        const int out = node.gate == GateKind::Or ? o : -o;
        std::vector<int> big{-out};
        for (int i : in) {
          cnf.add({out, -i});
          big.push_back(i);
        }
        cnf.add(big);
        break;
      }
      case GateKind::Xor:
      case GateKind::Xnor: {
        int acc = in[0];
        for (std::size_t k = 1; k < in.size(); ++k) {
          const bool last = k + 1 == in.size();
          const int t = last ? (node.gate == GateKind::Xor ? o : -o) : cnf.new_var();
          xor2(in[k], acc, t);
          acc = t;
        }
        if (in.size() == 1) {
          const int out = node.gate == GateKind::Xor ? o : -o;
          cnf.add({out, -in[0]});
          cnf.add({-out, in[0]});
        }
        break;
      }
    }
  }

  void xor2(int a, int b, int t) {
    auto& cnf = c_.cnf;
    cnf.add({-t, a, b});
    cnf.add({-t, -a, -b});
    cnf.add({t, -a, b});
    cnf.add({t, a, -b});
  }

  const Netlist& n_;
  const std::set<NodeId>& transparent_;
  SensitizationCondition& c_;
};

}  // namespace

SensitizationCondition build_condition(const Netlist& n, const Path& p, const std::set<NodeId>& transparent) {
  SensitizationCondition c;
  Encoder enc(n, transparent, c);
  for (std::size_t k = 1; k + 1 < p.nodes.size(); ++k) {
    const NodeId id = p.nodes[k];
    if (n.is_ff(id)) {
      if (!transparent.count(id)) throw NetlistError("path contains a flip-flop: " + n.node(id).name);
      continue;
    }
    if (!n.is_gate(id)) throw NetlistError("path passes through a port: " + n.node(id).name);
    const auto& g = n.node(id);
    if (g.fanin.size() < 2) continue;
    const auto ctrl = controlling_value(g.gate);
    if (!ctrl) {
      c.has_xor = true;
      continue;
    }
    for (std::size_t q = 0; q < g.fanin.size(); ++q) {
      if (static_cast<int>(q) == p.pins[k]) continue;
      const bool want = !*ctrl;
      c.side.push_back({id, static_cast<int>(q), enc.resolve(g.fanin[q]), want});
      const int v = enc.var(g.fanin[q]);
      c.cnf.add({want ? v : -v});
    }
  }
  return c;
}

PathStatus sensitize(const Netlist& n, const Path& p, long decision_limit, const std::set<NodeId>& transparent) {
  const auto c = build_condition(n, p, transparent);
  const auto s = sat::solve(c.cnf, decision_limit);
  switch (s.result) {
    case sat::Result::Sat: return PathStatus::True;
    case sat::Result::Unsat: return PathStatus::False;
    default: return PathStatus::Unknown;
  }
}

bool is_true_path(const Netlist& n, const Path& p, long decision_limit, const std::set<NodeId>& transparent) {
  return sensitize(n, p, decision_limit, transparent) != PathStatus::False;
}

Path merge(const Path& left, const Path& right) {
  if (left.capture() != right.launch()) throw NetlistError("paths do not meet");
  Path m = left;
  m.nodes.insert(m.nodes.end(), right.nodes.begin() + 1, right.nodes.end());
  m.pins.insert(m.pins.end(), right.pins.begin() + 1, right.pins.end());
  return m;
}

std::pair<double, double> reachable_delay(const Netlist& n, const Path& merged, const TimingConfig& cfg) {
  const auto& lib = n.library();
  double lo = launch_offset(n, merged, cfg), hi = lo;
  for (std::size_t k = 1; k < merged.nodes.size(); ++k) {
    const NodeId id = merged.nodes[k];
    if (!n.is_gate(id)) continue;
    const auto& g = n.node(id);
    double mn = 1e300, mx = 0;
    const auto over = lib.instance_override(g.name);
    const int levels = over ? static_cast<int>(over->size()) : lib.size_levels(g.gate);
    for (int l = 0; l < levels; ++l) {
      double d;
      if (over) {
        const auto& row = (*over)[static_cast<std::size_t>(l)];
        d = row[std::min<std::size_t>(static_cast<std::size_t>(merged.pins[k]), row.size() - 1)];
      } else {
        d = lib.pin_delay(g.gate, l, merged.pins[k]);
      }
      mn = std::min(mn, d);
      mx = std::max(mx, d);
    }
    lo += mn;
    hi += mx + cfg.xi_max;
  }
  return {lo, hi};
}

double wave_lower(const TimingConfig& cfg) { return (cfg.T + cfg.t_h) / (1 - cfg.delta); }

double wave_upper(const TimingConfig& cfg) {
  return std::min((2 * cfg.T - cfg.t_su) / (1 + cfg.delta), cfg.T / (1 - cfg.tau) - cfg.t_su);
}

PairScan scan_pairs(const Netlist& n, NodeId ff, const TimingConfig& cfg, std::uint64_t seed, bool want_false) {
  PairScan scan;
  const auto left_all = sample_paths(n, ff, Side::Fanin, cfg.path_sample_limit, seed);
  const auto right_all = sample_paths(n, ff, Side::Fanout, cfg.path_sample_limit, seed ^ 0x9e3779b97f4a7c15ULL);
  scan.left_sampled = static_cast<int>(left_all.size());
  scan.right_sampled = static_cast<int>(right_all.size());
  std::vector<const Path*> left, right;
  for (const auto& p : left_all) {
    if (is_true_path(n, p, cfg.sat_decision_limit)) left.push_back(&p);
    else ++scan.left_false;
  }
  for (const auto& p : right_all) {
    if (is_true_path(n, p, cfg.sat_decision_limit)) right.push_back(&p);
    else ++scan.right_false;
  }
  const double lower = wave_lower(cfg), upper = wave_upper(cfg);
  const std::set<NodeId> transparent{ff};
  const long check_budget = 20000;
  long checks = 0;
  for (const Path* l : left)
    for (const Path* r : right) {
      Path m = merge(*l, *r);
      const auto [lo, hi] = reachable_delay(n, m, cfg);
      if (lo > upper || hi < lower) continue;
      if (checks++ >= check_budget) {
        scan.truncated = true;
        continue;
      }
      const auto cond = build_condition(n, m, transparent);
      const auto status = sat::solve(cond.cnf, cfg.sat_decision_limit).result;
      const bool merged_false = status == sat::Result::Unsat;
      if (merged_false != want_false) continue;
      PathPair pp;
      pp.left = *l;
      pp.right = *r;
      pp.delay = launch_offset(n, m, cfg) + path_delay(n, m);
      pp.merged = std::move(m);
      pp.reach_lo = lo;
      pp.reach_hi = hi;
      pp.merged_false = merged_false;
      pp.xor_flag = cond.has_xor;
      scan.pairs.push_back(std::move(pp));
      ++scan.n_candidates;
    }
  std::stable_sort(scan.pairs.begin(), scan.pairs.end(),
                   [](const PathPair& a, const PathPair& b) { return a.delay > b.delay; });
  return scan;
}

PairScan check_wp_false_paths(const Netlist& n, NodeId ff, const TimingConfig& cfg, std::uint64_t seed) {
  return scan_pairs(n, ff, cfg, seed, true);
}

}  // namespace tcam
