#include "tcam/wp_record.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>

#include "json.hpp"
#include "tcam/falsepath.hpp"

namespace tcam {

using json = nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool launch_node(const Netlist& n, NodeId id) {
  const auto k = n.node(id).kind;
  return k == NodeKind::Input || k == NodeKind::FlipFlop;
}

bool capture_node(const Netlist& n, NodeId id) {
  const auto k = n.node(id).kind;
  return k == NodeKind::Output || k == NodeKind::FlipFlop;
}

std::set<std::pair<NodeId, int>> cut_pins(const Netlist& n, const std::vector<WaveCut>& cuts) {
  std::set<std::pair<NodeId, int>> s;
  for (const auto& c : cuts)
    if (auto id = n.find(c.sink)) s.insert({*id, c.pin});
  return s;
}

std::vector<std::string> key_of(const Netlist& n, const Path& p) {
  std::vector<std::string> k;
  for (NodeId id : p.nodes) k.push_back(strip_dup(n.node(id).name));
  return k;
}

}  // namespace

std::string_view to_string(WpKind k) { return k == WpKind::False ? "wp_false" : "wp_true"; }
std::string_view to_string(WpMethod m) { return m == WpMethod::Removal ? "removal" : "duplication"; }

std::string strip_dup(std::string name) {
  for (;;) {
    const auto pos = name.rfind("_dup");
    if (pos == std::string::npos || pos + 4 != name.size()) return name;
    name = name.substr(0, pos);
  }
}

Path path_from_names(const Netlist& n, const std::vector<std::string>& nodes, const std::vector<int>& pins) {
  Path p;
  for (const auto& s : nodes) p.nodes.push_back(n.at(s));
  p.pins = pins;
  return p;
}

std::optional<Path> resolve(const Netlist& n, const WpRecord& r) {
  Path p;
  for (const auto& s : r.nodes) {
    const auto id = n.find(s);
    if (!id) return std::nullopt;
    p.nodes.push_back(*id);
  }
  p.pins = r.pins;
  for (std::size_t k = 1; k < p.nodes.size(); ++k) {
    const auto& fi = n.node(p.nodes[k]).fanin;
    if (p.pins[k] < 0 || static_cast<std::size_t>(p.pins[k]) >= fi.size() ||
        fi[static_cast<std::size_t>(p.pins[k])] != p.nodes[k - 1])
      return std::nullopt;
  }
  return p;
}

std::vector<Path> paths_through_cut(const Netlist& n, const std::vector<WaveCut>& cuts, const WaveCut& cut,
                                    int limit) {
  const auto cp = cut_pins(n, cuts);
  const NodeId sink = n.at(cut.sink);
  const NodeId src = n.node(sink).fanin.at(static_cast<std::size_t>(cut.pin));

  // backward halves, stored launch-first
  std::vector<Path> backs;
  {
    std::vector<NodeId> nodes;
    std::vector<int> pins;
    std::function<void(NodeId)> back = [&](NodeId id) {
      if (static_cast<int>(backs.size()) >= limit) return;
      nodes.push_back(id);
      if (launch_node(n, id)) {
        Path p;
        p.nodes.assign(nodes.rbegin(), nodes.rend());
        p.pins.assign(p.nodes.size(), -1);
        for (std::size_t k = 1; k < p.nodes.size(); ++k) p.pins[k] = pins[pins.size() - k];
        backs.push_back(std::move(p));
      } else {
        const auto& fi = n.node(id).fanin;
        for (std::size_t q = 0; q < fi.size(); ++q) {
          if (cp.count({id, static_cast<int>(q)})) continue;
          pins.push_back(static_cast<int>(q));
          back(fi[q]);
          pins.pop_back();
        }
      }
      nodes.pop_back();
    };
    back(src);
  }
  std::vector<Path> fwds;
  {
    Path cur;
    std::function<void(NodeId, int)> fwd = [&](NodeId id, int pin) {
      if (static_cast<int>(fwds.size()) >= limit) return;
      cur.nodes.push_back(id);
      cur.pins.push_back(pin);
      if (capture_node(n, id)) {
        fwds.push_back(cur);
      } else {
        for (const Pin& p : n.fanout(id)) {
          if (cp.count({p.node, p.pin})) continue;
          fwd(p.node, p.pin);
        }
      }
      cur.nodes.pop_back();
      cur.pins.pop_back();
    };
    fwd(sink, cut.pin);
  }
  std::vector<std::pair<double, Path>> all;
  for (const auto& b : backs)
    for (const auto& f : fwds) {
      Path p = b;
      p.nodes.insert(p.nodes.end(), f.nodes.begin(), f.nodes.end());
      p.pins.insert(p.pins.end(), f.pins.begin(), f.pins.end());
      all.emplace_back(path_delay(n, p), std::move(p));
    }
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<Path> out;
  for (auto& [d, p] : all) {
    if (static_cast<int>(out.size()) >= limit) break;
    out.push_back(std::move(p));
  }
  return out;
}

std::pair<double, double> wave_bounds(const Netlist& n, const std::vector<WaveCut>& cuts, NodeId launch,
                                      NodeId capture, const TimingConfig& cfg, DelayMode mode) {
  const auto cp = cut_pins(n, cuts);
  std::vector<double> slew;
  if (mode == DelayMode::Lookup) slew = wave_arrivals(n, cuts, cfg, mode).slew;
  const std::size_t N = n.size();
  std::vector<double> late(N, kNaN), early(N, kNaN), wlate(N, kNaN), wearly(N, kNaN);
  late[launch] = early[launch] = n.is_ff(launch) ? cfg.t_cq : 0.0;
  const auto upd = [](double& hi, double& lo, double vhi, double vlo) {
    hi = std::isnan(hi) ? vhi : std::max(hi, vhi);
    lo = std::isnan(lo) ? vlo : std::min(lo, vlo);
  };
  for (NodeId g : n.topo_gates()) {
    const auto& fi = n.node(g).fanin;
    for (std::size_t p = 0; p < fi.size(); ++p) {
      const NodeId s = fi[p];
      const double d = mode == DelayMode::Lookup ? lookup_stage(n, g, static_cast<int>(p), slew[s]).first
                                                 : n.stage_delay(g, static_cast<int>(p));
      if (cp.count({g, static_cast<int>(p)})) {
        if (!std::isnan(late[s])) upd(wlate[g], wearly[g], late[s] + d, early[s] + d);
      } else {
        if (!std::isnan(late[s])) upd(late[g], early[g], late[s] + d, early[s] + d);
        if (!std::isnan(wlate[s])) upd(wlate[g], wearly[g], wlate[s] + d, wearly[s] + d);
      }
    }
  }
  const NodeId d = n.node(capture).fanin.at(0);
  return {wearly[d], wlate[d]};
}

std::vector<WpRecord> emit_records(const Netlist& n, const std::vector<WaveCut>& all_cuts,
                                   const std::vector<WaveCut>& new_cuts, const TimingConfig& cfg, WpMethod method,
                                   const std::string& site, const std::vector<std::string>& removed,
                                   const std::vector<std::vector<std::string>>& preferred) {
  struct Cand {
    bool pref;
    double delay;
    Path path;
    WaveCut cut;
  };
  const std::set<std::vector<std::string>> pref(preferred.begin(), preferred.end());
  std::vector<Cand> cands;
  std::set<Path> seen;
  const int per_cut = std::max(cfg.record_cap * 4, 16);
  for (const auto& c : new_cuts)
    for (auto& p : paths_through_cut(n, all_cuts, c, per_cut)) {
      if (!seen.insert(p).second) continue;
      const double d = launch_offset(n, p, cfg) + path_delay(n, p);
      cands.push_back({pref.count(key_of(n, p)) > 0, d, std::move(p), c});
    }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.pref != b.pref) return a.pref;
    return a.delay > b.delay;
  });
  std::vector<WpRecord> out;
  for (const auto& c : cands) {
    if (static_cast<int>(out.size()) >= cfg.record_cap) break;
    WpRecord r;
    for (NodeId id : c.path.nodes) r.nodes.push_back(n.node(id).name);
    r.pins = c.path.pins;
    const auto cond = build_condition(n, c.path);
    const auto s = sat::solve(cond.cnf, cfg.sat_decision_limit);
    r.kind = s.result == sat::Result::Unsat ? WpKind::False : WpKind::True;
    r.xor_flag = cond.has_xor;
    r.method = method;
    r.site = site;
    r.removed = removed;
    r.cut = c.cut;
    out.push_back(std::move(r));
  }
  refresh_records(n, all_cuts, cfg, out);
  return out;
}

void refresh_records(const Netlist& n, const std::vector<WaveCut>& cuts, const TimingConfig& cfg,
                     std::vector<WpRecord>& records) {
  std::vector<WpRecord> kept;
  for (auto& r : records) {
    const auto p = resolve(n, r);
    if (!p) continue;
    r.delay = launch_offset(n, *p, cfg) + path_delay(n, *p);
    std::tie(r.dmin, r.dmax) = wave_bounds(n, cuts, p->launch(), p->capture(), cfg);
    std::tie(r.lookup_dmin, r.lookup_dmax) = wave_bounds(n, cuts, p->launch(), p->capture(), cfg, DelayMode::Lookup);
    if (std::isnan(r.dmin)) continue;
    const Gray lo = classify_gray(r.dmin, cfg), hi = classify_gray(r.dmax + cfg.t_su, cfg);
    if (lo == Gray::DefinitelySingle) r.gray = lo;
    else if (hi == Gray::DefinitelyWp || lo == Gray::DefinitelyWp) r.gray = Gray::DefinitelyWp;
    else r.gray = Gray::Suspicious;
    kept.push_back(std::move(r));
  }
  records = std::move(kept);
}

std::string records_to_json(const std::vector<WpRecord>& records) {
  json arr = json::array();
  for (const auto& r : records) {
    arr.push_back({{"nodes", r.nodes},
                   {"pins", r.pins},
                   {"kind", to_string(r.kind)},
                   {"method", to_string(r.method)},
                   {"site", r.site},
                   {"removed", r.removed},
                   {"cut", {{"sink", r.cut.sink}, {"pin", r.cut.pin}}},
                   {"delay", r.delay},
                   {"dmin", r.dmin},
                   {"dmax", r.dmax},
                   {"lookup_dmin", r.lookup_dmin},
                   {"lookup_dmax", r.lookup_dmax},
                   {"gray", to_string(r.gray)},
                   {"xor", r.xor_flag}});
  }
  return json{{"records", arr}}.dump(2);
}

std::vector<WpRecord> records_from_json(const std::string& text) {
  const auto j = json::parse(text);
  std::vector<WpRecord> out;
  for (const auto& e : j.at("records")) {
    WpRecord r;
    r.nodes = e.at("nodes").get<std::vector<std::string>>();
    r.pins = e.at("pins").get<std::vector<int>>();
    r.kind = e.at("kind") == "wp_false" ? WpKind::False : WpKind::True;
    r.method = e.at("method") == "duplication" ? WpMethod::Duplication : WpMethod::Removal;
    r.site = e.at("site");
    r.removed = e.at("removed").get<std::vector<std::string>>();
    r.cut = {e.at("cut").at("sink"), e.at("cut").at("pin")};
    r.delay = e.at("delay");
    r.dmin = e.at("dmin");
    r.dmax = e.at("dmax");
    r.lookup_dmin = e.value("lookup_dmin", r.dmin);
    r.lookup_dmax = e.value("lookup_dmax", r.dmax);
    const std::string g = e.at("gray");
    r.gray = g == "suspicious" ? Gray::Suspicious : g == "definitely_wp" ? Gray::DefinitelyWp : Gray::DefinitelySingle;
    r.xor_flag = e.value("xor", false);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace tcam
