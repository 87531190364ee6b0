#include "tcam/wp_removal.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include <fmt/format.h>

#include "tcam/retiming.hpp"

namespace tcam {

using milp::LinExpr;
using milp::Sense;

namespace {

bool defined(double v) { return !std::isnan(v); }

std::set<NodeId> forward_cone(const Netlist& n, NodeId start) {
  std::set<NodeId> seen;
  std::deque<NodeId> q;
  for (const Pin& p : n.fanout(start))
    if (n.is_gate(p.node) && seen.insert(p.node).second) q.push_back(p.node);
  while (!q.empty()) {
    const NodeId g = q.front();
    q.pop_front();
    for (const Pin& p : n.fanout(g))
      if (n.is_gate(p.node) && seen.insert(p.node).second) q.push_back(p.node);
  }
  return seen;
}

std::vector<NodeId> in_topo_order(const Netlist& n, const std::set<NodeId>& s) {
  std::vector<NodeId> out;
  for (NodeId g : n.topo_gates())
    if (s.count(g)) out.push_back(g);
  return out;
}

// lhs sense rhs, enforced when the guard expression equals 1 (relaxed by M when 0)
void when_one(milp::Model& m, LinExpr lhs, Sense s, double rhs, const LinExpr& guard, double M,
              const std::string& name) {
  if (s == Sense::LE) {
    lhs += M * guard;
    m.add_constraint(lhs, Sense::LE, rhs + M, name);
  } else {
    lhs -= M * guard;
    m.add_constraint(lhs, Sense::GE, rhs - M, name);
  }
}

// enforced when the guard expression equals 0
void when_zero(milp::Model& m, LinExpr lhs, Sense s, double rhs, const LinExpr& guard, double M,
               const std::string& name) {
  if (s == Sense::LE) {
    lhs -= M * guard;
    m.add_constraint(lhs, Sense::LE, rhs, name);
  } else {
    lhs += M * guard;
    m.add_constraint(lhs, Sense::GE, rhs, name);
  }
}

}  // namespace

RemovalRegion build_region(const Netlist& n, NodeId ff, std::vector<PathPair> relevant,
                           const std::vector<WaveCut>& cuts, const TimingConfig& cfg) {
  RemovalRegion r;
  r.ff = ff;
  r.relevant = std::move(relevant);
  r.root = n.node(ff).fanin[0];
  if (!n.is_gate(r.root)) {
    r.skip = "flip-flop not driven by a gate";
    return r;
  }
  for (const Pin& p : n.fanout(ff))
    if (!n.is_gate(p.node)) {
      r.skip = "flip-flop drives a port or flip-flop directly";
      return r;
    }
  const auto right = forward_cone(n, ff);
  if (right.count(r.root)) {
    r.skip = "combinational loop through the flip-flop";
    return r;
  }
  r.right = in_topo_order(n, right);

  // movable gates: backward cone of the root whose fanout stays inside
  std::set<NodeId> left;
  const auto& root_fo = n.fanout(r.root);
  r.root_movable = root_fo.size() == 1 && root_fo[0].node == ff;
  if (r.root_movable) {
    std::map<NodeId, int> depth{{r.root, 0}};
    std::deque<NodeId> q{r.root};
    while (!q.empty()) {
      const NodeId g = q.front();
      q.pop_front();
      for (NodeId f : n.node(g).fanin)
        if (n.is_gate(f) && !depth.count(f) && depth[g] + 1 < cfg.region_depth) {
          depth[f] = depth[g] + 1;
          q.push_back(f);
        }
    }
    std::set<NodeId> cone;
    for (const auto& [g, d] : depth) cone.insert(g);
    auto order = in_topo_order(n, cone);
    std::reverse(order.begin(), order.end());
    for (NodeId g : order) {
      bool inside = true;
      for (const Pin& p : n.fanout(g))
        if (!(p.node == ff || left.count(p.node))) inside = false;
      if (inside) left.insert(g);
    }
  }
  r.left = in_topo_order(n, left);
  if (r.left.size() + r.right.size() > static_cast<std::size_t>(cfg.region_gate_cap)) {
    r.skip = fmt::format("region of {} gates exceeds cap", r.left.size() + r.right.size());
    return r;
  }

  // boundary sources of the movable part must be single-wave
  const auto wa = wave_arrivals(n, cuts, cfg);
  for (NodeId g : r.left)
    for (NodeId f : n.node(g).fanin)
      if (!left.count(f) && defined(wa.wlate[f])) {
        r.skip = "two-wave arrival enters the movable region";
        return r;
      }
  if (defined(wa.wlate[r.root])) r.skip = "two-wave arrival at the flip-flop input";
  for (const auto& pp : r.relevant)
    for (NodeId id : pp.merged.nodes)
      if (n.is_gate(id) && (left.count(id) || right.count(id))) r.sized.insert(id);
  return r;
}

RemovalModel build_removal_model(const Netlist& n, const RemovalRegion& region, const std::vector<WaveCut>& cuts,
                                 const TimingConfig& cfg, bool leftward) {
  RemovalModel rm;
  rm.leftward = leftward;
  auto& m = rm.m;
  const double M = cfg.big_m();
  const double hi = 3 * cfg.T;
  const auto wa = wave_arrivals(n, cuts, cfg);
  const std::set<NodeId> left(region.left.begin(), region.left.end());
  const std::set<NodeId> right(region.right.begin(), region.right.end());
  const auto in_model = [&](NodeId g) { return left.count(g) || right.count(g); };

  // per-gate variables
  std::vector<NodeId> gates = region.left;
  gates.insert(gates.end(), region.right.begin(), region.right.end());
  for (NodeId g : gates) {
    const auto& name = n.node(g).name;
    rm.late[g] = m.add_continuous("sl_" + name, 0, hi);
    rm.early[g] = m.add_continuous("se_" + name, 0, hi);
    rm.wlate[g] = m.add_continuous("wl_" + name, 0, hi);
    rm.wearly[g] = m.add_continuous("we_" + name, 0, hi);
    rm.wave[g] = m.add_continuous("h_" + name, 0, 1);
    rm.xi[g] = m.add_continuous("xi_" + name, 0, leftward ? n.node(g).xi : cfg.xi_max);
    if (leftward) m.set_bounds(rm.xi[g], n.node(g).xi, n.node(g).xi);
    if (!leftward && region.sized.count(g) && n.size_levels(g) > 1) {
      LinExpr sum;
      for (int l = 0; l < n.size_levels(g); ++l) {
        const int v = m.add_binary(fmt::format("sz_{}_{}", name, l));
        rm.size[g].push_back(v);
        sum.add(v, 1);
      }
      m.add_constraint(sum, Sense::EQ, 1, "one_size_" + name);
    }
  }
  for (NodeId g : region.left) {
    rm.lag[g] = m.add_binary("r_" + n.node(g).name);
    if (g == region.root && !region.root_movable) m.fix(rm.lag[g], 0);
  }
  const auto lag_of = [&](NodeId g) -> LinExpr {
    const auto it = rm.lag.find(g);
    return it == rm.lag.end() ? LinExpr(0.0) : LinExpr::var(it->second);
  };
  const auto delay = [&](NodeId g, int pin) {
    LinExpr d = LinExpr::var(rm.xi.at(g));
    const auto it = rm.size.find(g);
    if (it == rm.size.end()) {
      d += LinExpr(n.node(g).pin_delays[static_cast<std::size_t>(pin)]);
    } else {
      for (std::size_t l = 0; l < it->second.size(); ++l) d.add(it->second[l], n.level_delay(g, static_cast<int>(l), pin));
    }
    return d;
  };
  const auto S = [&](const std::map<NodeId, int>& vars, NodeId g) { return LinExpr::var(vars.at(g)); };

  // edges into model gates
  for (NodeId v : gates) {
    const auto& fi = n.node(v).fanin;
    for (std::size_t p = 0; p < fi.size(); ++p) {
      ModelEdge e;
      e.to = {v, static_cast<int>(p)};
      e.from = fi[p];
      std::tie(e.src, e.weight) = n.is_ff(e.from) ? comb_driver(n, e.from) : std::make_pair(e.from, 0);
      if (e.from == region.ff) e.role = EdgeRole::FlipFlop;
      else if (n.is_ff(e.from)) e.role = EdgeRole::Launch;
      else if (left.count(v)) e.role = left.count(e.from) ? EdgeRole::Internal : EdgeRole::Entry;
      else e.role = right.count(e.from) ? EdgeRole::Right : EdgeRole::Side;
      rm.edges.push_back(e);
    }
  }
  // relevant connections
  std::set<Pin> relevant_pins, launch_pins;
  for (const auto& pp : region.relevant) {
    const auto& P = pp.merged;
    for (std::size_t k = 1; k < P.nodes.size(); ++k) {
      if (k == 1 && n.is_ff(P.nodes[0])) {
        launch_pins.insert({P.nodes[1], P.pins[1]});
        continue;
      }
      if (P.nodes[k] == region.ff) continue;
      relevant_pins.insert({P.nodes[k], P.pins[k]});
    }
  }

  for (auto& e : rm.edges) {
    const NodeId v = e.to.node;
    const NodeId a = e.role == EdgeRole::FlipFlop ? e.src : e.from;
    const int p = e.to.pin;
    const auto tag = fmt::format("{}_{}", n.node(v).name, p);
    const LinExpr d = delay(v, p);
    e.relevant = relevant_pins.count(e.to) > 0;

    // retimed weight where it can change
    LinExpr wr;
    bool variable = false;
    switch (e.role) {
      case EdgeRole::Internal:
        wr = lag_of(v) - lag_of(a);
        m.add_constraint(wr, Sense::GE, 0, "wr_" + tag);
        variable = true;
        break;
      case EdgeRole::Entry:
        wr = lag_of(v);
        variable = true;
        break;
      case EdgeRole::FlipFlop:
        wr = LinExpr(1.0) - lag_of(region.root);
        variable = true;
        break;
      default: break;
    }

    if (!variable) {
      // constant sources: launches, right-cone passes and side inputs
      if (e.role == EdgeRole::Launch) {
        // a lag here would put a second flip-flop on the launch edge
        if (launch_pins.count(e.to) && !leftward && left.count(v)) m.add_constraint(lag_of(v), Sense::EQ, 0, "lr_" + tag);
        m.add_constraint(S(rm.late, v) - d, Sense::GE, cfg.t_cq, "ll_" + tag);
        m.add_constraint(S(rm.early, v) - d, Sense::LE, cfg.t_cq, "le_" + tag);
      } else if (e.role == EdgeRole::Right) {
        m.add_constraint(S(rm.late, v) - S(rm.late, a) - d, Sense::GE, 0, "pl_" + tag);
        m.add_constraint(S(rm.early, v) - S(rm.early, a) - d, Sense::LE, 0, "pe_" + tag);
        m.add_constraint(S(rm.wlate, v) - S(rm.wlate, a) - d, Sense::GE, 0, "pwl_" + tag);
        m.add_constraint(S(rm.wearly, v) - S(rm.wearly, a) - d, Sense::LE, 0, "pwe_" + tag);
        m.add_constraint(S(rm.wave, v) - S(rm.wave, a), Sense::GE, 0, "ph_" + tag);
      } else {
        if (defined(wa.late[a])) {
          m.add_constraint(S(rm.late, v) - d, Sense::GE, wa.late[a], "cl_" + tag);
          m.add_constraint(S(rm.early, v) - d, Sense::LE, wa.early[a], "ce_" + tag);
        }
        if (defined(wa.wlate[a])) {
          m.add_constraint(S(rm.wlate, v) - d, Sense::GE, wa.wlate[a], "cwl_" + tag);
          m.add_constraint(S(rm.wearly, v) - d, Sense::LE, wa.wearly[a], "cwe_" + tag);
          m.add_constraint(S(rm.wave, v), Sense::GE, 1, "ch_" + tag);
        }
      }
      continue;
    }

    // source arrivals: model variables or constants
    const bool src_var = in_model(a);
    const auto late_src = [&]() { return src_var ? S(rm.late, a) : LinExpr(wa.late[a]); };
    const auto early_src = [&]() { return src_var ? S(rm.early, a) : LinExpr(wa.early[a]); };
    const bool can_remove = !leftward && (src_var || defined(wa.late[a]));
    LinExpr y(0.0);
    if (can_remove) {
      e.y = m.add_binary("y_" + tag);
      y = LinExpr::var(e.y);
      m.add_constraint(y - wr, Sense::LE, 0, "link_" + tag);
    }
    const LinExpr kept = wr - y;

    // pass (wr = 0)
    if (src_var || defined(wa.late[a])) {
      when_zero(m, S(rm.late, v) - late_src() - d, Sense::GE, 0, wr, M, "pl_" + tag);
      when_zero(m, S(rm.early, v) - early_src() - d, Sense::LE, 0, wr, M, "pe_" + tag);
    }
    if (src_var) {
      when_zero(m, S(rm.wlate, v) - S(rm.wlate, a) - d, Sense::GE, 0, wr, M, "pwl_" + tag);
      when_zero(m, S(rm.wearly, v) - S(rm.wearly, a) - d, Sense::LE, 0, wr, M, "pwe_" + tag);
      m.add_constraint(S(rm.wave, v) - S(rm.wave, a) + wr, Sense::GE, 0, "ph_" + tag);
    }
    // kept flip-flop launches a fresh single wave
    when_one(m, S(rm.late, v) - d, Sense::GE, cfg.t_cq, kept, M, "kl_" + tag);
    when_one(m, S(rm.early, v) - d, Sense::LE, cfg.t_cq, kept, M, "ke_" + tag);
    // and captures its source
    if (src_var) {
      when_one(m, S(rm.late, a), Sense::LE, cfg.T - cfg.t_su, kept, M, "ks_" + tag);
      when_one(m, S(rm.early, a), Sense::GE, cfg.t_h, kept, M, "kh_" + tag);
      m.add_constraint(S(rm.wave, a) + kept, Sense::LE, 1, "kw_" + tag);
    } else if (!defined(wa.late[a]) || wa.late[a] + cfg.t_su > cfg.T + 1e-9 || wa.early[a] < cfg.t_h - 1e-9) {
      m.add_constraint(kept, Sense::LE, 0, "kx_" + tag);
    }
    // removal: the source's single wave becomes the second wave here
    if (can_remove) {
      when_one(m, S(rm.wlate, v) - late_src() - d, Sense::GE, 0, y, M, "rl_" + tag);
      when_one(m, S(rm.wearly, v) - early_src() - d, Sense::LE, 0, y, M, "re_" + tag);
      m.add_constraint(S(rm.wave, v) - y, Sense::GE, 0, "rh_" + tag);
      if (src_var) m.add_constraint(S(rm.wave, a) + y, Sense::LE, 1, "r3_" + tag);
    }
    // no flip-flop may stay on a relevant connection
    if (e.relevant && !leftward) m.add_constraint(kept, Sense::EQ, 0, "rel_" + tag);
  }

  // capture points fed by the right cone
  for (NodeId g : region.right) {
    bool ff_cap = false, po_cap = false;
    for (const Pin& p : n.fanout(g)) {
      if (n.is_ff(p.node)) ff_cap = true;
      if (n.node(p.node).kind == NodeKind::Output) po_cap = true;
    }
    if (!ff_cap && !po_cap) continue;
    const auto& name = n.node(g).name;
    m.add_constraint(S(rm.late, g), Sense::LE, cfg.T - cfg.t_su, "su_" + name);
    m.add_constraint(S(rm.early, g), Sense::GE, cfg.t_h, "ho_" + name);
    if (po_cap) m.add_constraint(S(rm.wave, g), Sense::LE, 0, "po_" + name);
    m.add_constraint((1 + cfg.delta) * S(rm.wlate, g), Sense::LE, 2 * cfg.T - cfg.t_su, "fl_" + name);
    m.add_constraint((1 - cfg.delta) * S(rm.wearly, g), Sense::GE, cfg.T + cfg.t_h, "fs_" + name);
    m.add_constraint((1 - cfg.tau) * S(rm.wlate, g), Sense::LE, cfg.T - (1 - cfg.tau) * cfg.t_su, "gu_" + name);
    m.add_constraint((1 + cfg.tau) * S(rm.wearly, g), Sense::GE, cfg.T, "gl_" + name);
  }

  // objective
  const WeightView wv = weight_view(n);
  LinExpr obj;
  for (NodeId g : gates) {
    if (!leftward) obj.add(rm.xi[g], cfg.alpha);
    const auto it = rm.size.find(g);
    if (it != rm.size.end())
      for (std::size_t l = 0; l < it->second.size(); ++l) {
        double sum = 0;
        for (std::size_t p = 0; p < n.node(g).fanin.size(); ++p)
          sum += n.level_delay(g, static_cast<int>(l), static_cast<int>(p));
        obj.add(it->second[l], -cfg.beta * sum);
      }
  }
  for (const auto& [g, v] : rm.lag) {
    const double delta = static_cast<double>(wv.in_edges[g].size()) - static_cast<double>(wv.out_edges[g].size());
    obj.add(v, leftward ? 0.3 * delta - 1.0 : cfg.gamma * delta);
  }
  m.set_objective(obj);
  return rm;
}

Construction apply_removal_solution(const Netlist& n, const RemovalRegion& region, const RemovalModel& model,
                                    const milp::Solution& sol, const std::vector<WaveCut>& cuts,
                                    const TimingConfig& cfg) {
  Construction c;
  c.sol = sol;
  if (!sol.has_incumbent) {
    c.why = fmt::format("removal model {}", to_string(sol.status));
    return c;
  }
  const auto val = [&](int v) { return sol.x[static_cast<std::size_t>(v)]; };
  RetimingAssignment r;
  for (const auto& [g, v] : model.lag)
    if (val(v) > 0.5) r[g] = 1;
  Netlist out = apply_retiming(n, r, &c.created);

  std::set<NodeId> touched;
  for (const auto& e : model.edges) {
    if (e.y < 0 || val(e.y) < 0.5) continue;
    const auto& vname = n.node(e.to.node).name;
    const NodeId v = out.at(vname);
    const NodeId f = out.node(v).fanin[static_cast<std::size_t>(e.to.pin)];
    if (!out.is_ff(f)) {
      c.why = "removed connection carries no flip-flop";
      return c;
    }
    out.set_driver({v, e.to.pin}, out.node(f).fanin[0]);
    touched.insert(f);
    c.new_cuts.push_back({vname, e.to.pin});
  }
  if (c.new_cuts.empty()) {
    c.why = "solution removes no flip-flop";
    return c;
  }
  std::vector<NodeId> dead;
  for (NodeId f : touched)
    if (out.fanout(f).empty()) dead.push_back(f);
  out.erase(dead);

  for (const auto& [g, xv] : model.xi) {
    const NodeId id = out.at(n.node(g).name);
    const auto it = model.size.find(g);
    if (it != model.size.end())
      for (std::size_t l = 0; l < it->second.size(); ++l)
        if (val(it->second[l]) > 0.5) out.set_size(id, static_cast<int>(l));
    const double xi = std::max(0.0, std::round(val(xv) * 1e9) / 1e9);
    c.xi_added += xi - n.node(g).xi;
    out.set_xi(id, xi);
  }
  out.validate();
  for (NodeId f : n.flipflops())
    if (!out.find(n.node(f).name)) c.removed.push_back(n.node(f).name);

  auto all = cuts;
  all.insert(all.end(), c.new_cuts.begin(), c.new_cuts.end());
  try {
    const auto viol = check_captures(out, all, cfg);
    if (!viol.empty()) {
      c.why = fmt::format("typical-mode check failed at {}: {}", out.node(viol[0].capture).name, viol[0].what);
      return c;
    }
  } catch (const NetlistError& e) {
    c.why = e.what();
    return c;
  }
  std::vector<std::vector<std::string>> preferred;
  for (const auto& pp : region.relevant) {
    std::vector<std::string> key;
    for (NodeId id : pp.merged.nodes)
      if (id != region.ff) key.push_back(n.node(id).name);
    preferred.push_back(std::move(key));
  }
  c.records = emit_records(out, all, c.new_cuts, cfg, WpMethod::Removal, n.node(region.ff).name, c.removed, preferred);
  c.netlist = std::move(out);
  c.ok = true;
  return c;
}

Construction try_removal(const Netlist& n, NodeId ff, const std::vector<PathPair>& pairs,
                         const std::vector<WaveCut>& cuts, const TimingConfig& cfg) {
  std::vector<PathPair> use(pairs.begin(),
                            pairs.begin() + std::min<std::ptrdiff_t>(cfg.pair_cap, static_cast<std::ptrdiff_t>(pairs.size())));
  Construction last;
  last.why = "no candidate pairs";
  while (!use.empty()) {
    const auto region = build_region(n, ff, use, cuts, cfg);
    if (!region.usable()) {
      last.why = region.skip;
      return last;
    }
    const auto model = build_removal_model(n, region, cuts, cfg);
    const auto sol = milp::solve(model.m, {cfg.milp_node_limit, cfg.milp_time_limit});
    if (sol.has_incumbent) {
      last = apply_removal_solution(n, region, model, sol, cuts, cfg);
      last.pairs_used = static_cast<int>(use.size());
      if (last.ok) return last;
    } else {
      last.why = fmt::format("removal model {}", to_string(sol.status));
    }
    use.erase(use.begin());  // longest first
  }
  return last;
}

}  // namespace tcam
