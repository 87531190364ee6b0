#include "tcam/retiming.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "json.hpp"

namespace tcam {

int lag(const RetimingAssignment& r, NodeId g) {
  const auto it = r.find(g);
  return it == r.end() ? 0 : it->second;
}

int retimed_weight(const Netlist& n, const RetimingAssignment& r, const WeightedEdge& e) {
  const int rs = n.is_gate(e.source) ? lag(r, e.source) : 0;
  const int rt = n.is_gate(e.sink) ? lag(r, e.sink) : 0;
  return e.weight + rt - rs;
}

int path_weight(const Netlist& n, const Path& p) {
  int w = 0;
  for (std::size_t k = 1; k + 1 < p.nodes.size(); ++k)
    if (n.is_ff(p.nodes[k])) ++w;
  return w;
}

int retimed_path_weight(const Netlist& n, const RetimingAssignment& r, const Path& p) {
  int total = 0;
  NodeId prev = kNoNode;
  int ffs = 0;
  for (std::size_t k = 0; k < p.nodes.size(); ++k) {
    const NodeId id = p.nodes[k];
    const bool endpoint = k == 0 || k + 1 == p.nodes.size();
    if (n.is_ff(id) && !endpoint) {
      ++ffs;
      continue;
    }
    if (prev != kNoNode) {
      const int rs = n.is_gate(prev) ? lag(r, prev) : 0;
      const int rt = n.is_gate(id) ? lag(r, id) : 0;
      total += ffs + rt - rs;
    }
    prev = id;
    ffs = 0;
  }
  return total;
}

LegalityReport is_legal(const Netlist& n, const RetimingAssignment& r, const TimingConfig& cfg) {
  LegalityReport rep;
  for (const auto& [g, v] : r)
    if (!n.is_gate(g)) {
      rep.legal = false;
      rep.violations.push_back("lag on non-gate " + n.node(g).name);
    }
  const WeightView wv = weight_view(n);
  std::vector<int> wr(wv.edges.size());
  for (std::size_t i = 0; i < wv.edges.size(); ++i) {
    wr[i] = retimed_weight(n, r, wv.edges[i]);
    if (wr[i] < 0) {
      rep.legal = false;
      rep.violations.push_back(fmt::format("negative weight {} on {} -> {}", wr[i], n.node(wv.edges[i].source).name,
                                           n.node(wv.edges[i].sink).name));
    }
  }
  if (!rep.legal) return rep;

  // zero-weight subgraph must be acyclic; longest zero-weight arrival per node
  std::vector<int> pending(n.size(), 0);
  for (std::size_t i = 0; i < wv.edges.size(); ++i)
    if (wr[i] == 0) ++pending[wv.edges[i].sink];
  std::deque<NodeId> ready;
  std::vector<double> arr(n.size(), 0.0);
  std::vector<double> ear(n.size(), std::numeric_limits<double>::infinity());
  for (NodeId id = 0; id < n.size(); ++id)
    if (pending[id] == 0 && (n.is_gate(id) || n.node(id).kind == NodeKind::Input || n.node(id).kind == NodeKind::Output))
      ready.push_back(id);
  std::size_t seen = 0, comb_total = 0;
  for (NodeId id = 0; id < n.size(); ++id)
    if (!n.is_ff(id)) ++comb_total;
  // arrivals seeded by retimed launches
  for (NodeId id = 0; id < n.size(); ++id) {
    if (!n.is_gate(id)) continue;
    double a = 0;
    bool any = false;
    for (std::size_t ei : wv.in_edges[id])
      if (wr[ei] > 0) {
        a = std::max(a, cfg.t_cq + n.stage_delay(id, wv.edges[ei].pin));
        ear[id] = std::min(ear[id], cfg.t_cq + n.stage_delay(id, wv.edges[ei].pin));
        any = true;
      }
    if (any) arr[id] = a;
  }
  while (!ready.empty()) {
    const NodeId u = ready.front();
    ready.pop_front();
    ++seen;
    for (std::size_t ei : wv.out_edges[u]) {
      const auto& e = wv.edges[ei];
      const double base = n.is_gate(u) ? arr[u] : 0.0;
      const double early = n.is_gate(u) ? ear[u] : 0.0;
      if (wr[ei] == 0) {
        const double d = n.is_gate(e.sink) ? n.stage_delay(e.sink, e.pin) : 0.0;
        arr[e.sink] = std::max(arr[e.sink], base + d);
        ear[e.sink] = std::min(ear[e.sink], early + d);
        if (--pending[e.sink] == 0) ready.push_back(e.sink);
      }
      if (wr[ei] > 0 && early < cfg.t_h - 1e-9) {
        rep.legal = false;
        rep.violations.push_back(fmt::format("hold violated after {}: {:.3f} < t_h", n.node(u).name, early));
      }
      if ((wr[ei] > 0 || n.node(e.sink).kind == NodeKind::Output) && base + cfg.t_su > cfg.T + 1e-9) {
        rep.legal = false;
        rep.violations.push_back(fmt::format("period violated at {}: {:.3f} + t_su > T", n.node(u).name, base));
      }
    }
  }
  if (seen < comb_total) {
    rep.legal = false;
    rep.violations.push_back("zero-weight cycle after retiming");
  }
  return rep;
}

Netlist materialize(const Netlist& n, const WeightView& wv, const std::vector<int>& weights,
                    std::vector<std::string>* created) {
  if (weights.size() != wv.edges.size()) throw NetlistError("weight vector size mismatch");
  for (int w : weights)
    if (w < 0) throw NetlistError("negative weight");
  Netlist out = n;
  std::vector<NodeId> doomed;
  std::set<std::string> used_names;
  for (NodeId id = 0; id < n.size(); ++id) used_names.insert(n.node(id).name);

  std::vector<std::vector<NodeId>> trees(n.size());  // flip-flops per comb source
  for (NodeId f : n.flipflops()) trees[comb_driver(n, f).first].push_back(f);

  for (NodeId u = 0; u < n.size(); ++u) {
    const auto& outs = wv.out_edges[u];
    bool changed = false;
    int maxw = 0;
    for (std::size_t ei : outs) {
      if (weights[ei] != wv.edges[ei].weight) changed = true;
      maxw = std::max(maxw, weights[ei]);
    }
    if (!changed) continue;
    // original flip-flops of this source by depth, name order within a depth
    std::map<int, std::vector<NodeId>> by_depth;
    for (NodeId f : trees[u]) by_depth[comb_driver(n, f).second].push_back(f);
    for (auto& [d, v] : by_depth)
      std::sort(v.begin(), v.end(), [&](NodeId a, NodeId b) { return n.node(a).name < n.node(b).name; });
    std::vector<NodeId> chain;
    std::set<NodeId> reused;
    NodeId prev = u;
    for (int d = 1; d <= maxw; ++d) {
      NodeId f;
      auto it = by_depth.find(d);
      if (it != by_depth.end() && !it->second.empty()) {
        f = it->second.front();
        reused.insert(f);
        out.set_driver({f, 0}, prev);
      } else {
        std::string name;
        for (int k = 0;; ++k) {
          name = fmt::format("{}_rt{}{}", n.node(u).name, d, k ? fmt::format("_{}", k) : "");
          if (!used_names.count(name)) break;
        }
        used_names.insert(name);
        f = out.add_flipflop(name, prev, true);
        if (created) created->push_back(name);
      }
      chain.push_back(f);
      prev = f;
    }
    for (std::size_t ei : outs) {
      const auto& e = wv.edges[ei];
      out.set_driver({e.sink, e.pin}, weights[ei] == 0 ? u : chain[static_cast<std::size_t>(weights[ei] - 1)]);
    }
    for (NodeId f : trees[u]) {
      if (reused.count(f)) continue;
      const int d = comb_driver(n, f).second;
      const bool dangling = std::find(wv.dangling_flipflops.begin(), wv.dangling_flipflops.end(), f) !=
                            wv.dangling_flipflops.end();
      if (dangling) {
        out.set_driver({f, 0}, d - 1 >= 1 && d - 1 <= static_cast<int>(chain.size()) ? chain[d - 2] : u);
      } else {
        doomed.push_back(f);
      }
    }
  }
  // a doomed flip-flop may still drive a dangling one; rewire those first
  for (NodeId f : out.flipflops()) {
    NodeId d = out.node(f).fanin[0];
    while (std::find(doomed.begin(), doomed.end(), d) != doomed.end()) d = n.node(d).fanin[0];
    if (d != out.node(f).fanin[0]) out.set_driver({f, 0}, d);
  }
  out.erase(doomed);
  out.validate();
  return out;
}

Netlist apply_retiming(const Netlist& n, const RetimingAssignment& r, std::vector<std::string>* created) {
  const WeightView wv = weight_view(n);
  std::vector<int> w(wv.edges.size());
  for (std::size_t i = 0; i < wv.edges.size(); ++i) {
    w[i] = retimed_weight(n, r, wv.edges[i]);
    if (w[i] < 0)
      throw NetlistError(fmt::format("illegal retiming: negative weight on {} -> {}", n.node(wv.edges[i].source).name,
                                     n.node(wv.edges[i].sink).name));
  }
  return materialize(n, wv, w, created);
}

int flipflop_delta(const Netlist& n, const RetimingAssignment& r) {
  const WeightView wv = weight_view(n);
  int delta = 0;
  for (const auto& [g, v] : r) {
    if (!n.is_gate(g)) continue;
    delta += v * (static_cast<int>(wv.in_edges[g].size()) - static_cast<int>(wv.out_edges[g].size()));
  }
  return delta;
}

std::string retiming_to_json(const Netlist& n, const RetimingAssignment& r) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [g, v] : r)
    if (v != 0) j[n.node(g).name] = v;
  return nlohmann::json{{"lags", j}}.dump(2);
}

RetimingAssignment retiming_from_json(const Netlist& n, const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  RetimingAssignment r;
  for (const auto& [name, v] : j.at("lags").items()) {
    const NodeId id = n.at(name);
    if (!n.is_gate(id)) throw NetlistError("lag on non-gate " + name);
    r[id] = v.get<int>();
  }
  return r;
}

}  // namespace tcam
