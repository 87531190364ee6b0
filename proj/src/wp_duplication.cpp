#include "tcam/wp_duplication.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include <fmt/format.h>

#include "tcam/retiming.hpp"

namespace tcam {

using milp::LinExpr;
using milp::Sense;

namespace {

constexpr double kTol = 1e-7;

bool defined(double v) { return !std::isnan(v); }

std::vector<NodeId> in_topo_order(const Netlist& n, const std::set<NodeId>& s) {
  std::vector<NodeId> out;
  for (NodeId g : n.topo_gates())
    if (s.count(g)) out.push_back(g);
  return out;
}

std::string unique_name(const Netlist& n, std::string base) {
  while (n.find(base)) base += "_dup";
  return base;
}

}  // namespace

NamedPath named(const Netlist& n, const Path& p) {
  NamedPath np;
  for (NodeId id : p.nodes) np.nodes.push_back(n.node(id).name);
  np.pins = p.pins;
  return np;
}

Netlist leftward_retime(const Netlist& n, NodeId ff, const std::vector<WaveCut>& cuts, const TimingConfig& cfg,
                        std::vector<std::string>* created) {
  const auto region = build_region(n, ff, {}, cuts, cfg);
  if (!region.usable() || region.left.empty()) return n;
  const auto model = build_removal_model(n, region, cuts, cfg, true);
  const auto sol = milp::solve(model.m, {cfg.milp_node_limit, cfg.milp_time_limit});
  if (!sol.has_incumbent) return n;
  RetimingAssignment r;
  for (const auto& [g, v] : model.lag)
    if (sol.x[static_cast<std::size_t>(v)] > 0.5) r[g] = 1;
  if (r.empty()) return n;
  std::vector<std::string> made;
  Netlist out = apply_retiming(n, r, &made);
  try {
    if (!check_captures(out, cuts, cfg).empty() || !check_captures(out, cuts, cfg, DelayMode::Lookup).empty()) return n;
  } catch (const NetlistError&) {
    return n;
  }
  if (created) *created = std::move(made);
  return out;
}

DuplicationPlan plan_duplication(const Netlist& n, const std::string& site, const std::vector<NamedPath>& relevant,
                                 const std::vector<WaveCut>& cuts, const TimingConfig& cfg) {
  DuplicationPlan plan;
  plan.site = site;
  std::set<NodeId> phi, caps;
  for (const auto& rp : relevant) {
    std::vector<std::string> names;
    std::vector<int> pins;
    for (std::size_t k = 0; k < rp.nodes.size(); ++k) {
      if (rp.nodes[k] == site) continue;
      names.push_back(rp.nodes[k]);
      // the node after the site keeps its own entry pin
      pins.push_back(rp.pins[k]);
    }
    std::vector<NodeId> ids;
    bool ok = true;
    for (const auto& s : names) {
      const auto id = n.find(s);
      if (!id) ok = false;
      else ids.push_back(*id);
    }
    if (!ok || ids.size() < 3) continue;
    const NodeId cap = ids.back();
    if (!n.is_ff(cap)) continue;
    int total = 0;
    NodeId found = kNoNode;
    bool at_capture = false;
    for (std::size_t k = 1; k < ids.size() && ok; ++k) {
      NodeId x = n.node(ids[k]).fanin.at(static_cast<std::size_t>(k + 1 == ids.size() ? 0 : pins[k]));
      const NodeId first = x;
      int cnt = 0;
      while (x != ids[k - 1] && n.is_ff(x)) {
        ++cnt;
        x = n.node(x).fanin[0];
      }
      if (x != ids[k - 1]) ok = false;
      if (cnt > 0) {
        total += cnt;
        found = first;
        at_capture = k + 1 == ids.size();
      }
    }
    if (!ok || total != 1 || at_capture) continue;
    phi.insert(found);
    caps.insert(cap);
    plan.relevant_keys.push_back(names);
  }
  if (phi.empty()) {
    plan.skip = "no relevant path crosses a single flip-flop";
    return plan;
  }
  for (NodeId c : caps)
    if (phi.count(c)) {
      plan.skip = "capture flip-flop is also bypassed";
      return plan;
    }

  // right copy: forward of phi and backward of the captures
  std::set<NodeId> fwd, bwd;
  std::deque<NodeId> q;
  for (NodeId f : phi)
    for (const Pin& p : n.fanout(f))
      if (n.is_gate(p.node) && fwd.insert(p.node).second) q.push_back(p.node);
  while (!q.empty()) {
    const NodeId g = q.front();
    q.pop_front();
    for (const Pin& p : n.fanout(g))
      if (n.is_gate(p.node) && fwd.insert(p.node).second) q.push_back(p.node);
  }
  for (NodeId c : caps) {
    const NodeId d = n.node(c).fanin[0];
    if (n.is_gate(d) && bwd.insert(d).second) q.push_back(d);
  }
  while (!q.empty()) {
    const NodeId g = q.front();
    q.pop_front();
    for (NodeId f : n.node(g).fanin)
      if (n.is_gate(f) && bwd.insert(f).second) q.push_back(f);
  }
  std::set<NodeId> right;
  for (NodeId g : fwd)
    if (bwd.count(g)) right.insert(g);
  for (NodeId c : caps)
    if (!right.count(n.node(c).fanin[0])) {
      plan.skip = "capture not reached from the bypassed flip-flops";
      return plan;
    }

  // left copy candidates
  std::map<NodeId, int> depth;
  for (NodeId f : phi) {
    const NodeId d = n.node(f).fanin[0];
    if (n.is_gate(d) && !depth.count(d)) {
      depth[d] = 0;
      q.push_back(d);
    }
  }
  while (!q.empty()) {
    const NodeId g = q.front();
    q.pop_front();
    for (NodeId f : n.node(g).fanin)
      if (n.is_gate(f) && !depth.count(f) && depth[g] + 1 < cfg.region_depth) {
        depth[f] = depth[g] + 1;
        q.push_back(f);
      }
  }
  std::set<NodeId> left;
  for (const auto& [g, d] : depth) left.insert(g);
  for (NodeId g : left)
    if (right.count(g)) {
      plan.skip = "copy regions overlap";
      return plan;
    }
  if (left.size() + right.size() > static_cast<std::size_t>(cfg.region_gate_cap)) {
    plan.skip = fmt::format("copy of {} gates exceeds cap", left.size() + right.size());
    return plan;
  }
  const auto wa = wave_arrivals(n, cuts, cfg);
  for (NodeId f : phi)
    if (defined(wa.wlate[n.node(f).fanin[0]])) {
      plan.skip = "two-wave arrival at a bypassed flip-flop";
      return plan;
    }
  for (NodeId g : left)
    for (NodeId f : n.node(g).fanin)
      if (defined(wa.wlate[f])) {
        plan.skip = "two-wave arrival enters the left copy";
        return plan;
      }

  plan.phi.assign(phi.begin(), phi.end());
  plan.captures.assign(caps.begin(), caps.end());
  plan.right = in_topo_order(n, right);
  plan.left = in_topo_order(n, left);
  for (NodeId g : plan.right)
    for (std::size_t p = 0; p < n.node(g).fanin.size(); ++p)
      if (phi.count(n.node(g).fanin[p])) plan.cut_pins.insert({g, static_cast<int>(p)});
  for (const auto& key : plan.relevant_keys)
    for (const auto& s : key) {
      const NodeId id = n.at(s);
      if (left.count(id) || right.count(id)) plan.sized.insert(id);
    }
  return plan;
}

DuplicationModel build_duplication_model(const Netlist& n, const DuplicationPlan& plan,
                                         const std::vector<WaveCut>& cuts, const TimingConfig& cfg,
                                         const std::map<NodeId, int>* fixed_anchors) {
  DuplicationModel dm;
  auto& m = dm.m;
  const double M = cfg.big_m();
  const double hi = 3 * cfg.T;
  const auto wa = wave_arrivals(n, cuts, cfg);
  const std::set<NodeId> left(plan.left.begin(), plan.left.end());
  const std::set<NodeId> right(plan.right.begin(), plan.right.end());

  const auto gate_vars = [&](NodeId g, bool wave) {
    const auto& name = n.node(g).name;
    dm.late[g] = m.add_continuous("sl_" + name, 0, hi);
    dm.early[g] = m.add_continuous("se_" + name, 0, hi);
    if (wave) {
      dm.wlate[g] = m.add_continuous("wl_" + name, 0, hi);
      dm.wearly[g] = m.add_continuous("we_" + name, 0, hi);
    }
    dm.xi[g] = m.add_continuous("xi_" + name, 0, cfg.xi_max);
    if (plan.sized.count(g) && n.size_levels(g) > 1) {
      LinExpr sum;
      for (int l = 0; l < n.size_levels(g); ++l) {
        const int v = m.add_binary(fmt::format("sz_{}_{}", name, l));
        dm.size[g].push_back(v);
        sum.add(v, 1);
      }
      m.add_constraint(sum, Sense::EQ, 1, "one_size_" + name);
    }
  };
  for (NodeId g : plan.left) {
    gate_vars(g, false);
    dm.anchor[g] = m.add_binary("p_" + n.node(g).name);
    if (fixed_anchors) {
      const auto it = fixed_anchors->find(g);
      if (it != fixed_anchors->end()) m.fix(dm.anchor[g], it->second);
    }
  }
  for (NodeId g : plan.right) gate_vars(g, true);

  const auto delay = [&](NodeId g, int pin) {
    LinExpr d = LinExpr::var(dm.xi.at(g));
    const auto it = dm.size.find(g);
    if (it == dm.size.end()) {
      d += LinExpr(n.node(g).pin_delays[static_cast<std::size_t>(pin)]);
    } else {
      for (std::size_t l = 0; l < it->second.size(); ++l) d.add(it->second[l], n.level_delay(g, static_cast<int>(l), pin));
    }
    return d;
  };
  const auto V = [&](const std::map<NodeId, int>& vars, NodeId g) { return LinExpr::var(vars.at(g)); };
  const auto single_const = [&](NodeId f) -> std::pair<double, double> {
    if (n.is_ff(f)) return {cfg.t_cq, cfg.t_cq};
    return {wa.late[f], wa.early[f]};
  };

  // arrival at `to` (late/early variables) from source f through delay d, where f may be an
  // anchorable copy: the copy's variables when p_f = 0, the original's constants when p_f = 1
  const auto from_source = [&](NodeId f, int to_late, int to_early, const LinExpr& d, const std::string& tag) {
    const auto [cl, ce] = single_const(f);
    if (left.count(f)) {
      const LinExpr p = LinExpr::var(dm.anchor.at(f));
      m.add_constraint(LinExpr::var(to_late) - V(dm.late, f) - d + M * p, Sense::GE, 0, "al_" + tag);
      m.add_constraint(LinExpr::var(to_early) - V(dm.early, f) - d - M * p, Sense::LE, 0, "ae_" + tag);
      if (defined(cl)) {
        m.add_constraint(LinExpr::var(to_late) - d - M * p, Sense::GE, cl - M, "ol_" + tag);
        m.add_constraint(LinExpr::var(to_early) - d + M * p, Sense::LE, ce + M, "oe_" + tag);
      }
    } else if (defined(cl)) {
      m.add_constraint(LinExpr::var(to_late) - d, Sense::GE, cl, "cl_" + tag);
      m.add_constraint(LinExpr::var(to_early) - d, Sense::LE, ce, "ce_" + tag);
    }
  };

  for (NodeId g : plan.left) {
    const auto& fi = n.node(g).fanin;
    for (std::size_t p = 0; p < fi.size(); ++p)
      from_source(fi[p], dm.late[g], dm.early[g], delay(g, static_cast<int>(p)), fmt::format("{}_{}", n.node(g).name, p));
  }
  for (NodeId g : plan.right) {
    const auto& fi = n.node(g).fanin;
    for (std::size_t p = 0; p < fi.size(); ++p) {
      const NodeId f = fi[p];
      const LinExpr d = delay(g, static_cast<int>(p));
      const auto tag = fmt::format("{}_{}", n.node(g).name, p);
      if (plan.cut_pins.count({g, static_cast<int>(p)})) {
        from_source(n.node(f).fanin[0], dm.wlate[g], dm.wearly[g], d, "cut_" + tag);
      } else if (right.count(f)) {
        m.add_constraint(V(dm.late, g) - V(dm.late, f) - d, Sense::GE, 0, "pl_" + tag);
        m.add_constraint(V(dm.early, g) - V(dm.early, f) - d, Sense::LE, 0, "pe_" + tag);
        m.add_constraint(V(dm.wlate, g) - V(dm.wlate, f) - d, Sense::GE, 0, "pwl_" + tag);
        m.add_constraint(V(dm.wearly, g) - V(dm.wearly, f) - d, Sense::LE, 0, "pwe_" + tag);
      } else {
        from_source(f, dm.late[g], dm.early[g], d, tag);
        if (!n.is_ff(f) && defined(wa.wlate[f])) {
          m.add_constraint(V(dm.wlate, g) - d, Sense::GE, wa.wlate[f], "cwl_" + tag);
          m.add_constraint(V(dm.wearly, g) - d, Sense::LE, wa.wearly[f], "cwe_" + tag);
        }
      }
    }
  }
  std::set<NodeId> cap_drivers;
  for (NodeId c : plan.captures) cap_drivers.insert(n.node(c).fanin[0]);
  for (NodeId g : cap_drivers) {
    const auto& name = n.node(g).name;
    m.add_constraint(V(dm.late, g), Sense::LE, cfg.T - cfg.t_su, "su_" + name);
    m.add_constraint(V(dm.early, g), Sense::GE, cfg.t_h, "ho_" + name);
    m.add_constraint((1 + cfg.delta) * V(dm.wlate, g), Sense::LE, 2 * cfg.T - cfg.t_su, "fl_" + name);
    m.add_constraint((1 - cfg.delta) * V(dm.wearly, g), Sense::GE, cfg.T + cfg.t_h, "fs_" + name);
    m.add_constraint((1 - cfg.tau) * V(dm.wlate, g), Sense::LE, cfg.T - (1 - cfg.tau) * cfg.t_su, "gu_" + name);
    m.add_constraint((1 + cfg.tau) * V(dm.wearly, g), Sense::GE, cfg.T, "gl_" + name);
  }

  LinExpr obj;
  for (const auto& [g, v] : dm.xi) obj.add(v, cfg.alpha);
  for (const auto& [g, vs] : dm.size)
    for (std::size_t l = 0; l < vs.size(); ++l) {
      double sum = 0;
      for (std::size_t p = 0; p < n.node(g).fanin.size(); ++p)
        sum += n.level_delay(g, static_cast<int>(l), static_cast<int>(p));
      obj.add(vs[l], -cfg.beta * sum);
    }
  for (const auto& [g, v] : dm.anchor) obj.add(v, -cfg.gamma);
  m.set_objective(obj);
  return dm;
}

Construction apply_duplication(const Netlist& n, const DuplicationPlan& plan, const DuplicationModel& model,
                               const milp::Solution& sol, const std::vector<WaveCut>& cuts, const TimingConfig& cfg) {
  Construction c;
  c.sol = sol;
  if (!sol.has_incumbent) {
    c.why = fmt::format("duplication model {}", to_string(sol.status));
    return c;
  }
  const auto val = [&](int v) { return sol.x[static_cast<std::size_t>(v)]; };
  const std::set<NodeId> left(plan.left.begin(), plan.left.end());
  const std::set<NodeId> right(plan.right.begin(), plan.right.end());
  const auto anchored = [&](NodeId g) { return left.count(g) && val(model.anchor.at(g)) > 0.5; };

  Netlist out = n;
  std::map<NodeId, NodeId> copy;
  std::set<std::string> dup_names;
  const auto make = [&](NodeId g, std::vector<NodeId> fanin) {
    const auto& node = n.node(g);
    const auto name = unique_name(out, node.name + "_dup");
    const NodeId id = out.add_gate(name, node.gate, std::move(fanin), node.size_level);
    const auto it = model.size.find(g);
    if (it != model.size.end())
      for (std::size_t l = 0; l < it->second.size(); ++l)
        if (val(it->second[l]) > 0.5) out.set_size(id, static_cast<int>(l));
    const double xi = std::max(0.0, std::round(val(model.xi.at(g)) * 1e9) / 1e9);
    out.set_xi(id, xi);
    c.xi_added += xi;
    copy[g] = id;
    dup_names.insert(name);
    return id;
  };
  const auto source = [&](NodeId f) { return left.count(f) && !anchored(f) ? copy.at(f) : f; };
  for (NodeId g : plan.left) {
    if (anchored(g)) continue;
    std::vector<NodeId> fi;
    for (NodeId f : n.node(g).fanin) fi.push_back(source(f));
    make(g, fi);
  }
  for (NodeId g : plan.right) {
    std::vector<NodeId> fi;
    const auto& orig = n.node(g).fanin;
    for (std::size_t p = 0; p < orig.size(); ++p) {
      const NodeId f = orig[p];
      if (plan.cut_pins.count({g, static_cast<int>(p)})) fi.push_back(source(n.node(f).fanin[0]));
      else if (right.count(f)) fi.push_back(copy.at(f));
      else fi.push_back(f);
    }
    const NodeId id = make(g, fi);
    for (std::size_t p = 0; p < orig.size(); ++p)
      if (plan.cut_pins.count({g, static_cast<int>(p)})) c.new_cuts.push_back({out.node(id).name, static_cast<int>(p)});
  }
  for (NodeId cap : plan.captures) out.set_driver({cap, 0}, copy.at(n.node(cap).fanin[0]));

  // prune copies that drive nothing, then originals and bypassed flip-flops left dead
  std::set<std::string> prunable = dup_names;
  for (NodeId g : plan.right) prunable.insert(n.node(g).name);
  for (NodeId f : plan.phi) prunable.insert(n.node(f).name);
  for (;;) {
    std::vector<NodeId> dead;
    for (const auto& s : prunable)
      if (auto id = out.find(s); id && out.fanout(*id).empty()) dead.push_back(*id);
    if (dead.empty()) break;
    for (NodeId id : dead) prunable.erase(out.node(id).name);
    out.erase(dead);
  }
  std::erase_if(c.new_cuts, [&](const WaveCut& w) { return !out.find(w.sink); });
  for (const auto& s : dup_names)
    if (out.find(s)) ++c.duplicated;
  out.validate();
  for (NodeId f : n.flipflops())
    if (!out.find(n.node(f).name)) c.removed.push_back(n.node(f).name);
  if (c.new_cuts.empty()) {
    c.why = "copy carries no two-wave path";
    return c;
  }

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
  c.records = emit_records(out, all, c.new_cuts, cfg, WpMethod::Duplication, plan.site, c.removed, plan.relevant_keys);
  c.netlist = std::move(out);
  c.ok = true;
  return c;
}

Construction try_duplication(const Netlist& n, NodeId ff, const std::vector<PathPair>& pairs,
                             const std::vector<WaveCut>& cuts, const TimingConfig& cfg) {
  const std::string site = n.node(ff).name;
  std::vector<NamedPath> rel;
  for (const auto& pp : pairs) {
    if (static_cast<int>(rel.size()) >= cfg.pair_cap) break;
    if (!n.is_ff(pp.merged.capture())) continue;
    rel.push_back(named(n, pp.merged));
  }
  Construction last;
  last.why = "no candidate pairs";
  if (rel.empty()) return last;
  std::vector<std::string> created;
  const Netlist base = leftward_retime(n, ff, cuts, cfg, &created);
  while (!rel.empty()) {
    const auto plan = plan_duplication(base, site, rel, cuts, cfg);
    if (!plan.usable()) {
      last.why = plan.skip;
      return last;
    }
    const auto model = build_duplication_model(base, plan, cuts, cfg);
    const auto sol = milp::solve(model.m, {cfg.milp_node_limit, cfg.milp_time_limit});
    if (sol.has_incumbent) {
      last = apply_duplication(base, plan, model, sol, cuts, cfg);
      last.pairs_used = static_cast<int>(rel.size());
      if (last.ok) {
        last.created = created;
        last.removed.clear();
        for (NodeId f : n.flipflops())
          if (!last.netlist.find(n.node(f).name)) last.removed.push_back(n.node(f).name);
        for (auto& r : last.records) r.removed = last.removed;
        return last;
      }
    } else {
      last.why = fmt::format("duplication model {}", to_string(sol.status));
    }
    rel.erase(rel.begin());
  }
  return last;
}

// ---- lookup-mode verification and repair ------------------------------------------

namespace {

enum class Frame { Single, Wave };

// Gates on the path realizing the bound at `start`, nearest the capture first.
std::vector<NodeId> trace(const Netlist& n, const std::set<std::pair<NodeId, int>>& cut_pins, const WaveArrivals& a,
                          DelayMode mode, NodeId start, Frame frame, bool late) {
  std::vector<NodeId> out;
  NodeId g = start;
  while (n.is_gate(g)) {
    out.push_back(g);
    const auto& fi = n.node(g).fanin;
    const double target = frame == Frame::Single ? (late ? a.late[g] : a.early[g]) : (late ? a.wlate[g] : a.wearly[g]);
    NodeId next = kNoNode;
    Frame next_frame = frame;
    for (std::size_t p = 0; p < fi.size() && next == kNoNode; ++p) {
      const NodeId s = fi[p];
      const double d = mode == DelayMode::Lookup ? lookup_stage(n, g, static_cast<int>(p), a.slew[s]).first
                                                 : n.stage_delay(g, static_cast<int>(p));
      const bool cut = cut_pins.count({g, static_cast<int>(p)}) > 0;
      double src;
      Frame f = frame;
      if (frame == Frame::Wave && cut) {
        src = late ? a.late[s] : a.early[s];
        f = Frame::Single;
      } else if (cut) {
        continue;
      } else {
        src = frame == Frame::Single ? (late ? a.late[s] : a.early[s]) : (late ? a.wlate[s] : a.wearly[s]);
      }
      if (defined(src) && std::abs(src + d - target) <= 1e-9 * (1 + std::abs(target))) {
        next = s;
        next_frame = f;
      }
    }
    if (next == kNoNode) break;
    g = next;
    frame = next_frame;
  }
  return out;
}

}  // namespace

RepairReport verify_and_repair(Netlist& n, const std::vector<WaveCut>& cuts, const TimingConfig& cfg,
                               const std::set<std::string>& editable) {
  RepairReport rep;
  std::set<std::pair<NodeId, int>> cp;
  for (int it = 0; it <= cfg.repair_iterations; ++it) {
    rep.iterations = it;
    cp.clear();
    for (const auto& c : cuts) cp.insert({n.at(c.sink), c.pin});
    DelayMode mode = DelayMode::Typical;
    auto viol = check_captures(n, cuts, cfg, mode);
    if (viol.empty()) {
      mode = DelayMode::Lookup;
      viol = check_captures(n, cuts, cfg, mode);
    }
    if (viol.empty()) {
      rep.ok = true;
      return rep;
    }
    if (it == cfg.repair_iterations) break;
    const auto& v = viol.front();
    const auto a = wave_arrivals(n, cuts, cfg, mode);
    const NodeId d = capture_driver(n, v.capture);
    Frame frame = Frame::Wave;
    bool raise = true;
    double amount = 0;
    const double lo = std::max((cfg.T + cfg.t_h) / (1 - cfg.delta), cfg.T / (1 + cfg.tau));
    const double up = std::min((2 * cfg.T - cfg.t_su) / (1 + cfg.delta), cfg.T / (1 - cfg.tau) - cfg.t_su);
    if (v.what == "setup") {
      frame = Frame::Single;
      raise = false;
      amount = a.late[d] - (cfg.T - cfg.t_su);
    } else if (v.what == "hold") {
      frame = Frame::Single;
      amount = cfg.t_h - a.early[d];
    } else if (v.what.rfind("two-wave short", 0) == 0 || v.what.rfind("below gray", 0) == 0) {
      amount = lo - a.wearly[d];
    } else if (v.what.rfind("two-wave long", 0) == 0 || v.what.rfind("above gray", 0) == 0) {
      raise = false;
      amount = a.wlate[d] - up;
    } else {
      rep.why = v.what;
      return rep;
    }
    amount += kTol;
    auto path = trace(n, cp, a, mode, d, frame, !raise);
    std::erase_if(path, [&](NodeId g) { return !editable.count(n.node(g).name); });
    if (path.empty()) {
      rep.why = fmt::format("no editable gate on the violating path to {}", n.node(v.capture).name);
      return rep;
    }
    if (!raise) {
      // faster size first, then less inserted delay
      bool resized = false;
      for (NodeId g : path) {
        const auto& node = n.node(g);
        if (node.size_level > 0) {
          n.set_size(g, node.size_level - 1);
          rep.actions.push_back(fmt::format("downsize {}", node.name));
          resized = true;
          break;
        }
      }
      if (resized) continue;
      for (NodeId g : path) {
        const double take = std::min(amount, n.node(g).xi);
        if (take <= 0) continue;
        n.set_xi(g, n.node(g).xi - take);
        rep.actions.push_back(fmt::format("xi {} -{:.4f}", n.node(g).name, take));
        amount -= take;
        if (amount <= 0) break;
      }
    } else {
      for (NodeId g : path) {
        const double room = cfg.xi_max - n.node(g).xi;
        const double give = std::min(amount, room);
        if (give <= 0) continue;
        n.set_xi(g, n.node(g).xi + give);
        rep.actions.push_back(fmt::format("xi {} +{:.4f}", n.node(g).name, give));
        amount -= give;
        if (amount <= 0) break;
      }
    }
    if (amount > kTol) {
      rep.why = fmt::format("cannot cover {:.4f} at {} within xi_max", amount, n.node(v.capture).name);
      return rep;
    }
  }
  if (rep.why.empty()) rep.why = "iteration cap reached";
  return rep;
}

}  // namespace tcam
