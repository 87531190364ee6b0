#include "tcam/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include <fmt/format.h>

#include "json.hpp"
#include "tcam/milp.hpp"
#include "tcam/simulate.hpp"

namespace tcam {

using json = nlohmann::ordered_json;
using milp::LinExpr;
using milp::Sense;

Gray record_gray(const WpRecord& r, const TimingConfig& cfg) {
  const Gray lo = classify_gray(r.dmin, cfg), hi = classify_gray(r.dmax + cfg.t_su, cfg);
  if (lo == Gray::DefinitelySingle || hi == Gray::DefinitelySingle) return Gray::DefinitelySingle;
  if (lo == Gray::DefinitelyWp || hi == Gray::DefinitelyWp) return Gray::DefinitelyWp;
  return Gray::Suspicious;
}

AttackReport screen(const Netlist& n, const std::vector<WaveCut>& cuts, const std::vector<WpRecord>& records,
                    const TimingConfig& cfg, std::uint64_t noise_seed) {
  AttackReport rep;
  std::vector<ScreenedPath> kept;
  const auto s = screen_paths(n, cuts, records, cfg, noise_seed, &kept);
  rep.definitely_single = s.definitely_single;
  rep.definitely_wp = s.definitely_wp;
  rep.suspicious_false = s.n_f;
  std::mt19937_64 rng(noise_seed);
  std::uniform_real_distribution<double> u(1 - cfg.tau, 1 + cfg.tau);
  const auto estimate = [&](double d) { (d * u(rng) < cfg.T ? rep.estimates_below_T : rep.estimates_above_T)++; };
  for (const auto& p : kept)
    if (p.gray == Gray::Suspicious) estimate(p.delay + cfg.t_su);
  int wpt = 0;
  for (const auto& r : records) {
    ++rep.records_checked;
    const Gray g = record_gray(r, cfg);
    if (g == Gray::Suspicious) {
      ++rep.records_suspicious;
      if (r.kind == WpKind::True) ++wpt;
      estimate(r.delay + cfg.t_su);
    } else if (g == Gray::DefinitelySingle) {
      ++rep.records_definitely_single;
    } else {
      ++rep.records_definitely_wp;
    }
  }
  rep.suspicious_true = s.n_t + wpt;
  rep.test_vector_budget = rep.suspicious_true;
  rep.simulation_exponent = rep.suspicious_false + (rep.records_suspicious - wpt);
  return rep;
}

void attack_sample(const Netlist& n, const std::vector<WaveCut>& cuts, const TimingConfig& cfg, std::uint64_t seed,
                   int limit, std::vector<Path>& false_paths, std::vector<Path>& true_paths) {
  std::vector<ScreenedPath> kept;
  screen_paths(n, cuts, {}, cfg, seed, &kept);
  for (const auto& p : kept) {
    if (p.gray == Gray::DefinitelyWp) continue;
    if (p.gray == Gray::Suspicious && !p.true_path) {
      if (static_cast<int>(false_paths.size()) < limit) false_paths.push_back(p.path);
    } else if (p.delay <= cfg.T - cfg.t_su) {
      true_paths.push_back(p.path);
    }
  }
}

namespace {

struct SizingModel {
  milp::Model m;
  std::map<NodeId, int> xi;
  std::map<NodeId, std::vector<int>> size;
  std::vector<int> true_rows;
};

SizingModel sizing_model(const Netlist& n, const Path& fp, const std::vector<const Path*>& tps,
                         const std::vector<bool>& active, const TimingConfig& cfg) {
  SizingModel sm;
  auto& m = sm.m;
  const auto touch = [&](const Path& p) {
    for (NodeId g : p.nodes) {
      if (!n.is_gate(g) || sm.xi.count(g)) continue;
      sm.xi[g] = m.add_continuous("xi_" + n.node(g).name, 0, cfg.xi_max);
      if (n.size_levels(g) > 1) {
        LinExpr sum;
        for (int l = 0; l < n.size_levels(g); ++l) {
          const int v = m.add_binary(fmt::format("sz_{}_{}", n.node(g).name, l));
          sm.size[g].push_back(v);
          sum.add(v, 1);
        }
        m.add_constraint(sum, Sense::EQ, 1);
      }
    }
  };
  touch(fp);
  for (std::size_t i = 0; i < tps.size(); ++i)
    if (active[i]) touch(*tps[i]);
  const auto delay = [&](const Path& p) {
    LinExpr d(launch_offset(n, p, cfg));
    for (std::size_t k = 1; k < p.nodes.size(); ++k) {
      const NodeId g = p.nodes[k];
      if (!n.is_gate(g)) continue;
      d.add(sm.xi.at(g), 1);
      const auto it = sm.size.find(g);
      if (it == sm.size.end()) d += LinExpr(n.node(g).pin_delays[static_cast<std::size_t>(p.pins[k])]);
      else
        for (std::size_t l = 0; l < it->second.size(); ++l) d.add(it->second[l], n.level_delay(g, static_cast<int>(l), p.pins[k]));
    }
    return d;
  };
  const LinExpr df = delay(fp);
  m.add_constraint(df, Sense::GE, cfg.T + cfg.t_h, "false_lo");
  m.add_constraint(df, Sense::LE, 2 * cfg.T - cfg.t_su, "false_hi");
  for (std::size_t i = 0; i < tps.size(); ++i)
    if (active[i]) sm.true_rows.push_back(m.add_constraint(delay(*tps[i]), Sense::LE, cfg.T - cfg.t_su));
  LinExpr obj;
  for (const auto& [g, v] : sm.xi) obj.add(v, 1);
  m.set_objective(obj);
  return sm;
}

std::vector<std::string> names(const Netlist& n, const Path& p) {
  std::vector<std::string> out;
  for (NodeId id : p.nodes) out.push_back(n.node(id).name);
  return out;
}

}  // namespace

AttackReport sizing_attack(const Netlist& n, const std::vector<Path>& false_paths, const std::vector<Path>& true_paths,
                           const TimingConfig& cfg, std::uint64_t seed, int sim_cycles) {
  AttackReport rep;
  Netlist sized = n;
  const milp::Budget budget{cfg.milp_node_limit, cfg.milp_time_limit};
  for (const auto& fp : false_paths) {
    ++rep.attempted;
    SizingOutcome out;
    out.path = names(n, fp);
    out.delay_before = launch_offset(n, fp, cfg) + path_delay(n, fp);
    std::set<NodeId> gates;
    for (NodeId g : fp.nodes)
      if (n.is_gate(g)) gates.insert(g);
    std::vector<const Path*> tps;
    for (const auto& tp : true_paths)
      if (tp != fp && std::any_of(tp.nodes.begin(), tp.nodes.end(), [&](NodeId g) { return gates.count(g) > 0; }))
        tps.push_back(&tp);
    std::vector<bool> active(tps.size(), true);
    const auto sm = sizing_model(n, fp, tps, active, cfg);
    const auto sol = milp::solve(sm.m, budget);
    if (sol.has_incumbent) {
      out.success = true;
      for (const auto& [g, v] : sm.xi) sized.set_xi(g, std::round(sol.x[static_cast<std::size_t>(v)] * 1e9) / 1e9);
      for (const auto& [g, vs] : sm.size)
        for (std::size_t l = 0; l < vs.size(); ++l)
          if (sol.x[static_cast<std::size_t>(vs[l])] > 0.5) sized.set_size(g, static_cast<int>(l));
      out.delay_after = launch_offset(sized, fp, cfg) + path_delay(sized, fp);
    } else {
      ++rep.failed;
      out.why = std::string(milp::to_string(sol.status));
      // deletion filter over the true-path limits
      std::vector<bool> none(tps.size(), false);
      if (milp::solve(sizing_model(n, fp, tps, none, cfg).m, budget).has_incumbent) {
        for (std::size_t i = 0; i < tps.size(); ++i) {
          active[i] = false;
          if (milp::solve(sizing_model(n, fp, tps, active, cfg).m, budget).has_incumbent) active[i] = true;
        }
        for (std::size_t i = 0; i < tps.size(); ++i)
          if (active[i]) out.blocking.push_back(names(n, *tps[i]));
      } else {
        out.why += ": window out of reach";
      }
    }
    rep.outcomes.push_back(std::move(out));
  }
  if (sim_cycles > 0 && rep.attempted > rep.failed) {
    rep.sized_checked = true;
    const auto eq = equivalence_check(n, sized, sim_cycles, 2, seed, cfg.warmup_cycles, cfg);
    rep.sized_equivalent = eq.equivalent;
    rep.sized_violations = eq.violations;
  }
  return rep;
}

std::string attack_to_json(const AttackReport& r) {
  json j;
  j["screen"] = {{"definitely_single", r.definitely_single},
                 {"definitely_wp", r.definitely_wp},
                 {"suspicious_true", r.suspicious_true},
                 {"suspicious_false", r.suspicious_false},
                 {"estimates_below_T", r.estimates_below_T},
                 {"estimates_above_T", r.estimates_above_T}};
  j["records"] = {{"checked", r.records_checked},
                  {"suspicious", r.records_suspicious},
                  {"definitely_single", r.records_definitely_single},
                  {"definitely_wp", r.records_definitely_wp}};
  json outs = json::array();
  for (const auto& o : r.outcomes) {
    json e = {{"path", o.path}, {"success", o.success}, {"delay_before", o.delay_before}};
    if (o.success) e["delay_after"] = o.delay_after;
    else {
      e["why"] = o.why;
      e["blocking_true_paths"] = o.blocking;
    }
    outs.push_back(e);
  }
  j["sizing"] = {{"attempted", r.attempted}, {"failed", r.failed}, {"paths", outs}};
  if (r.sized_checked) j["sizing"]["sized_netlist"] = {{"equivalent", r.sized_equivalent}, {"violations", r.sized_violations}};
  j["cost"] = {{"test_vector_budget", r.test_vector_budget}, {"simulation_exponent", r.simulation_exponent}};
  return j.dump(2) + "\n";
}

}  // namespace tcam
