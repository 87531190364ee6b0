// Acceptance run: one PASS/FAIL line per criterion, exit status 1 on any failure.
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "oracles.hpp"
#include "tcam/attacks.hpp"
#include "tcam/falsepath.hpp"
#include "tcam/milp.hpp"
#include "tcam/retiming.hpp"
#include "tcam/simulate.hpp"
#include "tcam/workflow.hpp"

using namespace tcam;

namespace {

constexpr double kTol = 1e-6;
const std::vector<std::string> kBenches{"fig2", "fig3_s298", "synth_a", "synth_b", "synth_c", "synth_d"};

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TimingConfig base_config() { return TimingConfig::from_json_text(slurp(TCAM_BENCH_DIR "/config.json")); }

struct Run {
  std::string name;
  Netlist original;
  ConstructionResult res;
  Metrics metrics;
};

int failures = 0;

void verdict(int id, bool ok, const std::string& what, const std::string& detail) {
  failures += !ok;
  std::cout << fmt::format("criterion {:>2}: {}  {} ({})", id, ok ? "PASS" : "FAIL", what, detail) << std::endl;
}

// 1 and 2 share the oracle spans
bool window_soundness(const std::vector<Run>& runs, const TimingConfig& cfg, double build_secs, bool& gray_ok,
                      std::string& gray_detail, std::string& detail) {
  const auto t0 = Clock::now();
  long records = 0, bad = 0, captures = 0, bad_captures = 0, suspicious = 0, single = 0;
  for (const auto& r : runs) {
    const auto& n = r.res.netlist;
    const auto& cuts = r.res.state.cuts;
    for (const auto& rec : r.res.state.records) {
      ++records;
      const auto s = oracle::wave_span(n, cuts, rec.nodes.front(), rec.nodes.back(), cfg);
      const bool match = s.paths > 0 && std::abs(s.lo - rec.dmin) <= kTol && std::abs(s.hi - rec.dmax) <= kTol;
      const bool inside =
          (1 - cfg.delta) * s.lo >= cfg.T + cfg.t_h - kTol && (1 + cfg.delta) * s.hi <= 2 * cfg.T - cfg.t_su + kTol;
      if (!match || !inside) {
        ++bad;
        std::cerr << fmt::format("  {} {} -> {}: record [{:.6f}, {:.6f}] oracle [{:.6f}, {:.6f}]\n", r.name,
                                 rec.nodes.front(), rec.nodes.back(), rec.dmin, rec.dmax, s.lo, s.hi);
      }
      // the attacker sees T inside both gray regions
      const bool lo_gray = (1 + cfg.tau) * s.lo >= cfg.T && (1 - cfg.tau) * s.lo <= cfg.T;
      const bool hi_gray = (1 + cfg.tau) * (s.hi + cfg.t_su) >= cfg.T && (1 - cfg.tau) * (s.hi + cfg.t_su) <= cfg.T;
      if (lo_gray && hi_gray && record_gray(rec, cfg) == Gray::Suspicious) ++suspicious;
      if ((1 + cfg.tau) * s.lo < cfg.T || record_gray(rec, cfg) == Gray::DefinitelySingle) ++single;
    }
    // every two-wave path, recorded or not
    for (const auto& [cap, s] : oracle::wave_spans(n, cuts, cfg)) {
      ++captures;
      if ((1 - cfg.delta) * s.lo < cfg.T + cfg.t_h - kTol || (1 + cfg.delta) * s.hi > 2 * cfg.T - cfg.t_su + kTol) {
        ++bad_captures;
        std::cerr << fmt::format("  {} capture {}: two-wave span [{:.6f}, {:.6f}]\n", r.name, cap, s.lo, s.hi);
      }
    }
  }
  const double secs = build_secs + since(t0);
  gray_ok = records > 0 && suspicious == records && single == 0;
  gray_detail = fmt::format("{}/{} suspicious, {} definitely_single", suspicious, records, single);
  detail = fmt::format("{} benchmarks, {} records, {} off, {} captures, {} off, {:.1f} s", runs.size(), records, bad,
                       captures, bad_captures, secs);
  return runs.size() >= 6 && records > 0 && bad == 0 && bad_captures == 0 && secs < 60;
}

bool equivalence(const std::vector<Run>& runs, const TimingConfig& cfg, std::string& detail) {
  bool ok = true;
  long violations = 0;
  std::string failing;
  for (const auto& r : runs) {
    const auto eq = equivalence_check(r.original, r.res.netlist, 10000, 20, 1000, cfg.warmup_cycles, cfg);
    violations += eq.violations;
    if (!eq.equivalent || eq.violations) {
      ok = false;
      failing += " " + r.name;
      std::cerr << fmt::format("  {}: {}\n", r.name, eq.detail);
    }
  }
  detail = fmt::format("{} benchmarks x 20 traces x 10000 cycles, {} violations{}", runs.size(), violations,
                       failing.empty() ? "" : ", failing:" + failing);
  return ok;
}

bool false_path_oracle(std::string& detail) {
  const auto t0 = Clock::now();
  int checked = 0, agree = 0, falses = 0, max_k = 0;
  for (std::uint64_t seed = 1; checked < 200 && seed < 5000; ++seed) {
    const auto c = oracle::random_cone(seed, 12 + static_cast<int>(seed % 9), 30 + static_cast<int>(seed % 25));
    const auto want = oracle::sensitizable(c.n, c.path, 20);
    if (!want) continue;
    ++checked;
    max_k = std::max(max_k, oracle::side_leaves(c.n, c.path));
    falses += !*want;
    agree += is_true_path(c.n, c.path) == *want;
  }
  const double secs = since(t0);
  detail = fmt::format("{}/{} agree, {} false, max k {}, {:.1f} s", agree, checked, falses, max_k, secs);
  return checked == 200 && agree == checked && secs < 120;
}

// w + r(sink) - r(source) without the library helper
int hand_weight(const RetimingAssignment& r, const WeightedEdge& e) {
  const auto at = [&](NodeId g) {
    const auto it = r.find(g);
    return it == r.end() ? 0 : it->second;
  };
  return e.weight + at(e.sink) - at(e.source);
}

RetimingAssignment random_legal(const Netlist& n, std::mt19937_64& rng, int moves, const TimingConfig& cfg) {
  const auto gates = n.gates();
  RetimingAssignment r;
  for (int k = 0; k < moves; ++k) {
    auto trial = r;
    const NodeId g = gates[rng() % gates.size()];
    trial[g] += rng() % 2 ? 1 : -1;
    if (trial[g] == 0) trial.erase(g);
    if (is_legal(n, trial, cfg).legal) r = trial;
  }
  return r;
}

bool retiming_algebra(std::string& detail) {
  const TimingConfig cfg;
  const auto chain = parse_bench_string("INPUT(a)\nOUTPUT(o)\ngi = NOT(a)\ngj = NOT(gi)\no = BUFF(gj)\n");
  const WeightedEdge e{chain.at("gi"), chain.at("gj"), 0, 0, {}};
  const int w1 = retimed_weight(chain, {{chain.at("gj"), 1}}, e);
  const int w2 = retimed_weight(chain, {{chain.at("gi"), -1}, {chain.at("gj"), 1}}, e);

  std::mt19937_64 rng(5);
  int runs = 0, equivalent = 0, moved = 0, delta_ok = 0;
  for (const char* b : {"fig2", "synth_a"}) {
    const auto n = load_bench(std::string(TCAM_BENCH_DIR) + "/" + b + ".bench");
    const auto wv = weight_view(n);
    std::map<NodeId, int> fanin, fanout;
    for (const auto& ed : wv.edges) {
      ++fanin[ed.sink];
      ++fanout[ed.source];
    }
    for (int t = 0; t < 25; ++t) {
      const auto r = random_legal(n, rng, 60, cfg);
      ++runs;
      moved += !r.empty();
      int formula = 0;
      for (const auto& [g, lag] : r) formula += lag * (fanin[g] - fanout[g]);
      int by_edges = 0;
      for (const auto& ed : wv.edges) by_edges += hand_weight(r, ed) - ed.weight;
      const auto m = apply_retiming(n, r);
      delta_ok += formula == flipflop_delta(n, r) && formula == by_edges &&
                  weight_view(m).total_weight() - wv.total_weight() == formula;
      const auto eq = equivalence_check(n, m, 500, 2, 300 + t, cfg.warmup_cycles, cfg);
      equivalent += eq.equivalent && eq.violations == 0;
    }
  }
  detail = fmt::format("w_r {} and {}, {}/{} retimings equivalent ({} non-trivial), delta formula {}/{}", w1, w2,
                       equivalent, runs, moved, delta_ok, runs);
  return w1 == 1 && w2 == 2 && runs == 50 && equivalent == runs && delta_ok == runs && moved > runs / 2;
}

bool milp_enumeration(std::string& detail) {
  using namespace tcam::milp;
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> coef(-6, 6);
  int agree = 0, infeasible = 0;
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Model m;
    const int nv = 4 + trial % 9;
    for (int j = 0; j < nv; ++j) m.add_binary("b" + std::to_string(j));
    const int rows = 2 + trial % 6;
    for (int i = 0; i < rows; ++i) {
      LinExpr e;
      int pos = 0;
      for (int j = 0; j < nv; ++j) {
        const int c = coef(rng);
        e.add(j, c);
        pos += std::max(c, 0);
      }
      if (i % 3 == 2) m.add_constraint(e, Sense::GE, -pos / 3.0);
      else m.add_constraint(e, Sense::LE, pos / 2.0 - (i % 2));
    }
    LinExpr obj;
    for (int j = 0; j < nv; ++j) obj.add(j, coef(rng) + 0.25 * (j % 3));
    m.set_objective(obj, trial % 2 == 0);
    // enumeration
    bool feasible = false;
    double best = m.minimize() ? INFINITY : -INFINITY;
    std::vector<double> x(static_cast<std::size_t>(nv));
    for (long mask = 0; mask < (1L << nv); ++mask) {
      for (int j = 0; j < nv; ++j) x[static_cast<std::size_t>(j)] = (mask >> j) & 1;
      if (!m.check(x, 1e-9)) continue;
      feasible = true;
      const double v = m.objective_value(x);
      best = m.minimize() ? std::min(best, v) : std::max(best, v);
    }
    const auto s = solve(m);
    if (!feasible) {
      infeasible += s.status == Status::Infeasible;
      agree += s.status == Status::Infeasible;
      continue;
    }
    const double diff = s.has_incumbent ? std::abs(s.objective - best) : INFINITY;
    worst = std::max(worst, diff);
    agree += s.status == Status::Optimal && diff <= kTol;
  }
  detail = fmt::format("{}/100 agree ({} infeasible), max difference {:.2e}", agree, infeasible, worst);
  return agree == 100;
}

bool case_split(std::string& detail) {
  const TimingConfig cfg;
  int instances = 0, agree = 0, max_anchors = 0;
  double worst = 0;
  for (int left = 2; left <= 8 && instances < 20; ++left)
    for (int right = 3; right <= 9 && instances < 20; ++right) {
      const auto n = parse_bench_string(oracle::site_bench(left, right, true));
      const auto d = oracle::duplication_case(n, "fa", cfg);
      if (!d.ok) continue;
      const auto free = build_duplication_model(d.base, d.plan, {}, cfg);
      const auto k = free.anchor.size();
      if (k < 1 || k > 6) continue;
      ++instances;
      max_anchors = std::max(max_anchors, static_cast<int>(k));
      const auto best_free = milp::solve(free.m);
      double best = INFINITY;
      for (unsigned mask = 0; mask < (1u << k); ++mask) {
        std::map<NodeId, int> fixed;
        unsigned bit = 0;
        for (const auto& [g, v] : free.anchor) fixed[g] = (mask >> bit++) & 1;
        const auto s = milp::solve(build_duplication_model(d.base, d.plan, {}, cfg, &fixed).m);
        if (s.has_incumbent) best = std::min(best, s.objective);
      }
      const double diff = best_free.has_incumbent ? std::abs(best_free.objective - best) : INFINITY;
      worst = std::max(worst, diff);
      agree += diff <= kTol;
    }
  detail = fmt::format("{}/{} instances agree, up to {} anchors, max difference {:.2e}", agree, instances,
                       max_anchors, worst);
  return instances == 20 && agree == instances;
}

bool sizing_resistance(const std::vector<Run>& runs, const TimingConfig& cfg, std::string& detail) {
  int resisted = 0;
  std::string per;
  for (const auto& r : runs) {
    std::vector<Path> fps, tps;
    attack_sample(r.res.netlist, r.res.state.cuts, cfg, 1, 50, fps, tps);
    const auto rep = sizing_attack(r.res.netlist, fps, tps, cfg, 1, 0);
    resisted += rep.failed > 0;
    per += fmt::format(" {} {}/{}", r.name, rep.failed, rep.attempted);
  }
  detail = fmt::format("failed/attempted:{}", per);
  return resisted >= 2;
}

bool yield(const std::vector<Run>& runs, std::string& detail) {
  bool ok = true;
  std::string per;
  for (const auto& r : runs) {
    const bool synthetic = r.name.rfind("synth_", 0) == 0;
    per += fmt::format(" {} {}/{}", r.name, r.metrics.n_wpt, r.metrics.n_wpf);
    if (synthetic && (r.metrics.n_wpt < 3 || r.metrics.n_wpf < 3)) ok = false;
  }
  detail = fmt::format("wpt/wpf:{}; shortfall allowed on fig2, fig3_s298", per);
  return ok;
}

bool determinism(const TimingConfig& cfg, std::string& detail) {
  int same = 0;
  for (const auto& b : kBenches) {
    const auto n = load_bench(std::string(TCAM_BENCH_DIR) + "/" + b + ".bench");
    std::string out[2];
    for (auto& o : out) {
      const auto res = construct(n, cfg, 42);
      o = write_bench(res.netlist) + write_annotations(res.netlist) +
          metrics_to_json(report(res.state, n, res.netlist, cfg, 42)) +
          ground_truth_json(res.state.records, res.state.cuts);
    }
    same += out[0] == out[1];
  }
  detail = fmt::format("{}/{} benchmarks byte-identical", same, kBenches.size());
  return same == static_cast<int>(kBenches.size());
}

bool xi_tradeoff(const TimingConfig& base, std::string& detail) {
  bool ok = true;
  std::string per;
  for (const auto& b : kBenches) {
    const auto n = load_bench(std::string(TCAM_BENCH_DIR) + "/" + b + ".bench");
    int prev = INT32_MAX;
    per += " " + b + " [";
    for (int x = 1; x <= 9; ++x) {
      TimingConfig cfg = base;
      cfg.xi_max = x;
      const auto res = construct(n, cfg, 1);
      const int nd = report(res.state, n, res.netlist, cfg, 1).n_d;
      per += fmt::format("{}{}", x > 1 ? " " : "", nd);
      ok = ok && nd <= prev;
      prev = nd;
    }
    per += "]";
  }
  detail = fmt::format("n_d for xi_max 1..9:{}", per);
  return ok;
}

}  // namespace

int main() {
  const auto cfg = base_config();
  const auto t0 = Clock::now();
  std::vector<Run> runs;
  for (const auto& b : kBenches) {
    Run r{b, load_bench(std::string(TCAM_BENCH_DIR) + "/" + b + ".bench"), {}, {}};
    r.res = construct(r.original, cfg, 1);
    r.metrics = report(r.res.state, r.original, r.res.netlist, cfg, 1);
    runs.push_back(std::move(r));
  }
  const double build = since(t0);

  std::string d1, d2, detail;
  bool gray_ok = false;
  const bool c1 = window_soundness(runs, cfg, build, gray_ok, d2, d1);
  verdict(1, c1, "wave-pipelining window soundness", d1);
  verdict(2, gray_ok, "gray-region guarantee", d2);
  verdict(3, equivalence(runs, cfg, detail), "functional equivalence", detail);
  verdict(4, false_path_oracle(detail), "false-path oracle agreement", detail);
  verdict(5, retiming_algebra(detail), "retiming algebra", detail);
  verdict(6, milp_enumeration(detail), "MILP against enumeration", detail);
  verdict(7, case_split(detail), "big-M case equivalence", detail);
  verdict(8, sizing_resistance(runs, cfg, detail), "sizing-attack resistance", detail);
  verdict(9, yield(runs, detail), "construction yield", detail);
  verdict(10, determinism(cfg, detail), "determinism", detail);
  verdict(11, xi_tradeoff(cfg, detail), "duplication against inserted delay", detail);
  std::cout << fmt::format("{} of 11 criteria failed, {:.1f} s", failures, since(t0)) << std::endl;
  return failures ? 1 : 0;
}
