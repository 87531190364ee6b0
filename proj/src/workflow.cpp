#include "tcam/workflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "json.hpp"
#include "tcam/falsepath.hpp"
#include "tcam/simulate.hpp"
#include "tcam/wp_duplication.hpp"
#include "tcam/wp_removal.hpp"

namespace tcam {

using json = nlohmann::ordered_json;

std::vector<NodeId> sort_candidates(const Netlist& n, const TimingConfig& cfg) {
  const auto at = propagate_arrivals(n, cfg);
  std::vector<double> tail(n.size(), 0.0);
  const auto topo = n.topo_gates();
  const auto out_of = [&](NodeId id) {
    double best = 0;
    for (const Pin& p : n.fanout(id))
      if (n.is_gate(p.node)) best = std::max(best, n.stage_delay(p.node, p.pin) + tail[p.node]);
    return best;
  };
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) tail[*it] = out_of(*it);
  std::vector<std::pair<double, NodeId>> keyed;
  for (NodeId f : n.flipflops()) {
    const NodeId d = n.node(f).fanin[0];
    const double in = n.is_gate(d) ? at.late[d] : (n.is_ff(d) ? cfg.t_cq : 0.0);
    // rounded so that float noise does not break id ties
    keyed.push_back({std::round((in + cfg.t_cq + out_of(f)) * 1e9) / 1e9, f});
  }
  std::sort(keyed.begin(), keyed.end(),
            [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
  std::vector<NodeId> out;
  for (const auto& [k, f] : keyed) out.push_back(f);
  return out;
}

std::vector<NodeId> filter_candidates(const std::vector<NodeId>& order, const Netlist& n, const TimingConfig& cfg) {
  const auto g = sequential_adjacency(n);
  const auto limit = static_cast<std::size_t>(std::max(0, cfg.fanio_threshold));
  std::vector<NodeId> out;
  for (NodeId f : order)
    if (g.in_degree(f) <= limit && g.out_degree(f) <= limit) out.push_back(f);
  return out;
}

double distance_threshold(const Netlist& n, const TimingConfig& cfg, const Placement* placement) {
  if (cfg.dis_t >= 0) return cfg.dis_t;
  const auto g = sequential_adjacency(n);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.flipflops.size(); ++i)
    for (std::size_t j = i + 1; j < g.flipflops.size(); ++j) {
      const double d = ff_distance(n, g, g.flipflops[i], g.flipflops[j], placement);
      if (d > 0) best = std::min(best, d);
    }
  return std::isinf(best) ? 0.0 : 10 * best;
}

namespace {

std::uint64_t mix(std::uint64_t seed, const std::string& s) {
  std::uint64_t h = seed ^ 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

void block_around(const Netlist& n, NodeId ff, double dis_t, const Placement* placement, std::set<std::string>& blocked) {
  const auto g = sequential_adjacency(n);
  blocked.insert(n.node(ff).name);
  const auto i = g.index.at(ff);
  for (auto j : g.pred[i]) blocked.insert(n.node(g.flipflops[j]).name);
  for (auto j : g.succ[i]) blocked.insert(n.node(g.flipflops[j]).name);
  for (NodeId other : g.flipflops)
    if (ff_distance(n, g, ff, other, placement) < dis_t) blocked.insert(n.node(other).name);
}

}  // namespace

ConstructionResult construct(const Netlist& n, const TimingConfig& cfg, std::uint64_t seed,
                             const Placement* placement, int equivalence_cycles) {
  cfg.validate();
  ConstructionResult res{n, {}};
  auto& st = res.state;
  Netlist& cur = res.netlist;
  st.remaining_wpf = cfg.n_wpf;
  st.remaining_wpt = cfg.n_wpt;
  st.dis_t = distance_threshold(n, cfg, placement);
  for (NodeId f : filter_candidates(sort_candidates(n, cfg), n, cfg)) st.order.push_back(n.node(f).name);

  for (const bool false_phase : {true, false}) {
    for (const auto& name : st.order) {
      if ((false_phase ? st.remaining_wpf : st.remaining_wpt) <= 0) break;
      if (st.blocked.count(name)) continue;
      const auto ff = cur.find(name);
      if (!ff || !cur.is_ff(*ff)) continue;
      SiteOutcome out;
      out.ff = name;
      out.false_phase = false_phase;

      auto scan = scan_pairs(cur, *ff, cfg, mix(seed, name), false_phase);
      if (false_phase) st.n_f_candidates += scan.n_candidates;
      std::erase_if(scan.pairs, [&](const PathPair& pp) { return !cur.is_ff(pp.merged.capture()); });
      if (scan.pairs.empty()) continue;

      auto c = try_removal(cur, *ff, scan.pairs, st.cuts, cfg);
      if (!c.ok) {
        const auto why = c.why;
        c = try_duplication(cur, *ff, scan.pairs, st.cuts, cfg);
        if (!c.ok) c.why = why + "; " + c.why;
      }
      if (c.ok) {
        auto all = st.cuts;
        all.insert(all.end(), c.new_cuts.begin(), c.new_cuts.end());
        std::set<std::string> editable;
        for (const auto& r : c.records)
          for (const auto& s : r.nodes)
            if (auto id = c.netlist.find(s); id && c.netlist.is_gate(*id)) editable.insert(s);
        const auto rep = verify_and_repair(c.netlist, all, cfg, editable);
        if (!rep.ok) {
          c.ok = false;
          c.why = "repair: " + rep.why;
        } else {
          refresh_records(c.netlist, all, cfg, c.records);
          std::erase_if(c.records, [](const WpRecord& r) { return r.gray != Gray::Suspicious; });
          if (c.records.empty()) {
            c.ok = false;
            c.why = "no suspicious record left";
          } else if (equivalence_cycles > 0) {
            const auto eq = equivalence_check(cur, c.netlist, equivalence_cycles, 2, mix(seed, name + "#eq"),
                                              cfg.warmup_cycles, cfg);
            if (!eq.equivalent) {
              c.ok = false;
              c.why = "equivalence: " + eq.detail;
            }
          }
        }
        if (c.ok) {
          block_around(cur, *ff, st.dis_t, placement, st.blocked);
          for (const auto& r : c.records) (r.kind == WpKind::True ? out.n_wpt : out.n_wpf)++;
          st.remaining_wpf -= out.n_wpf;
          st.remaining_wpt -= out.n_wpt;
          st.n_d += c.duplicated;
          st.records.insert(st.records.end(), c.records.begin(), c.records.end());
          st.cuts = std::move(all);
          cur = std::move(c.netlist);
          out.ok = true;
          out.method = c.duplicated > 0 ? "duplication" : "removal";
        }
      }
      out.why = c.why;
      st.sites.push_back(std::move(out));
    }
  }
  cur.validate();
  refresh_records(cur, st.cuts, cfg, st.records);
  return res;
}

Screening screen_paths(const Netlist& n, const std::vector<WaveCut>& cuts, const std::vector<WpRecord>& records,
                       const TimingConfig& cfg, std::uint64_t seed, std::vector<ScreenedPath>* kept) {
  Screening s;
  std::set<std::pair<NodeId, int>> cut_pins;
  for (const auto& c : cuts)
    if (auto id = n.find(c.sink)) cut_pins.insert({*id, c.pin});
  std::set<std::vector<std::string>> recorded;
  for (const auto& r : records) recorded.insert(r.nodes);
  std::vector<NodeId> caps = n.flipflops();
  for (NodeId o : n.outputs()) caps.push_back(o);
  for (NodeId c : caps) {
    const auto limit = cfg.path_sample_limit;
    if (count_paths(n, c, Side::Fanin, static_cast<std::uint64_t>(limit) + 1) > static_cast<std::uint64_t>(limit))
      s.exact = false;
    for (const auto& p : sample_paths(n, c, Side::Fanin, limit, seed ^ (0x9e3779b97f4a7c15ULL * (c + 1)))) {
      ++s.sampled;
      bool through_cut = false;
      for (std::size_t k = 1; k < p.nodes.size(); ++k)
        if (cut_pins.count({p.nodes[k], p.pins[k]})) through_cut = true;
      if (through_cut) {
        std::vector<std::string> key;
        for (NodeId id : p.nodes) key.push_back(n.node(id).name);
        if (!recorded.count(key)) ++s.two_wave_unrecorded;
        continue;
      }
      const double d = launch_offset(n, p, cfg) + path_delay(n, p);
      const Gray g = classify_gray(d + cfg.t_su, cfg);
      bool truth = true;
      switch (g) {
        case Gray::DefinitelySingle: ++s.definitely_single; break;
        case Gray::DefinitelyWp: ++s.definitely_wp; break;
        case Gray::Suspicious:
          truth = is_true_path(n, p, cfg.sat_decision_limit);
          ++(truth ? s.n_t : s.n_f);
          break;
      }
      if (kept) kept->push_back({p, d, g, truth});
    }
  }
  return s;
}

Metrics report(const ConstructionState& state, const Netlist& before, const Netlist& after, const TimingConfig& cfg,
               std::uint64_t seed) {
  Metrics m;
  for (const auto& r : state.records) {
    if (r.gray != Gray::Suspicious) continue;
    (r.kind == WpKind::True ? m.n_wpt : m.n_wpf)++;
  }
  m.screening = screen_paths(after, state.cuts, state.records, cfg, seed);
  m.n_t_prime = m.n_wpt + m.screening.n_t;
  m.n_f_prime = m.n_wpf + m.screening.n_f;
  m.n_f_candidates = state.n_f_candidates;
  double xi = 0;
  for (NodeId g : after.gates()) xi += after.node(g).xi;
  m.n_p = xi / after.library().buffer_delay();
  m.n_d = state.n_d;
  for (NodeId f : after.flipflops())
    if (after.node(f).is_retimed) ++m.n_r;
  for (const auto& s : state.sites)
    if (s.ok) (s.method == "duplication" ? m.duplication_sites : m.removal_sites)++;
  m.gates_before = static_cast<int>(before.gate_count());
  m.gates_after = static_cast<int>(after.gate_count());
  m.ffs_before = static_cast<int>(before.flipflop_count());
  m.ffs_after = static_cast<int>(after.flipflop_count());
  m.remaining_wpf = std::max(0, state.remaining_wpf);
  m.remaining_wpt = std::max(0, state.remaining_wpt);
  return m;
}

std::string metrics_to_json(const Metrics& m, double runtime) {
  json j;
  j["n_wpt"] = m.n_wpt;
  j["n_t"] = m.screening.n_t;
  j["n_t_prime"] = m.n_t_prime;
  j["n_wpf"] = m.n_wpf;
  j["n_f_suspicious"] = m.screening.n_f;
  j["n_f_prime"] = m.n_f_prime;
  j["n_f_candidates"] = m.n_f_candidates;
  j["n_p"] = std::round(m.n_p * 1e6) / 1e6;
  j["n_d"] = m.n_d;
  j["n_r"] = m.n_r;
  j["screening"] = {{"sampled_paths", m.screening.sampled},
                    {"counts", m.screening.exact ? "exact" : "sampled"},
                    {"definitely_single", m.screening.definitely_single},
                    {"definitely_wp", m.screening.definitely_wp},
                    {"two_wave_unrecorded", m.screening.two_wave_unrecorded}};
  j["sites"] = {{"removal", m.removal_sites}, {"duplication", m.duplication_sites}};
  j["size"] = {{"gates_before", m.gates_before},
               {"gates_after", m.gates_after},
               {"flipflops_before", m.ffs_before},
               {"flipflops_after", m.ffs_after}};
  j["targets_remaining"] = {{"n_wpf", m.remaining_wpf}, {"n_wpt", m.remaining_wpt}};
  if (runtime >= 0) j["runtime_s"] = runtime;
  return j.dump(2) + "\n";
}

std::string ground_truth_json(const std::vector<WpRecord>& records, const std::vector<WaveCut>& cuts) {
  json j = json::parse(records_to_json(records));
  json arr = json::array();
  for (const auto& c : cuts) arr.push_back({{"sink", c.sink}, {"pin", c.pin}});
  j["cuts"] = arr;
  return j.dump(2) + "\n";
}

void ground_truth_from_json(const std::string& text, std::vector<WpRecord>& records, std::vector<WaveCut>& cuts) {
  records = records_from_json(text);
  cuts.clear();
  const auto j = json::parse(text);
  if (j.contains("cuts"))
    for (const auto& c : j["cuts"]) cuts.push_back({c.at("sink").get<std::string>(), c.at("pin").get<int>()});
}

}  // namespace tcam
