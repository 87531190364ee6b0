#include <functional>
#include <map>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "tcam/attacks.hpp"
#include "tcam/workflow.hpp"

using namespace tcam;

namespace {

Netlist bench(const std::string& name) { return load_bench(std::string(TCAM_BENCH_DIR) + "/" + name + ".bench"); }

// Longest launch -> D arrival plus t_cq plus the longest Q -> gate tail, by
// plain recursion over the structure.
double ordering_key(const Netlist& n, NodeId ff, const TimingConfig& cfg) {
  std::map<NodeId, double> in_memo, out_memo;
  std::function<double(NodeId)> arrive = [&](NodeId id) -> double {
    if (n.is_ff(id)) return cfg.t_cq;
    if (!n.is_gate(id)) return 0.0;
    if (auto it = in_memo.find(id); it != in_memo.end()) return it->second;
    double best = 0;
    const auto& fi = n.node(id).fanin;
    for (std::size_t p = 0; p < fi.size(); ++p)
      best = std::max(best, arrive(fi[p]) + oracle::stage(n, id, static_cast<int>(p)));
    return in_memo[id] = best;
  };
  std::function<double(NodeId)> tail = [&](NodeId id) -> double {
    if (auto it = out_memo.find(id); it != out_memo.end()) return it->second;
    double best = 0;
    for (NodeId g : n.gates()) {
      const auto& fi = n.node(g).fanin;
      for (std::size_t p = 0; p < fi.size(); ++p)
        if (fi[p] == id) best = std::max(best, oracle::stage(n, g, static_cast<int>(p)) + tail(g));
    }
    return out_memo[id] = best;
  };
  return arrive(n.node(ff).fanin[0]) + cfg.t_cq + tail(ff);
}

// hub register feeding `fan` registers through inverters, each to its own output
std::string star(int fan) {
  std::ostringstream b;
  b << "INPUT(a)\nia = BUFF(a)\nhub = DFF(ia)\n";
  for (int i = 0; i < fan; ++i)
    b << "OUTPUT(o" << i << ")\ng" << i << " = NOT(hub)\nr" << i << " = DFF(g" << i << ")\no" << i << " = BUFF(r" << i
      << ")\n";
  return b.str();
}

WpRecord record(double dmin, double dmax) {
  WpRecord r;
  r.dmin = dmin;
  r.dmax = dmax;
  r.delay = dmax;
  return r;
}

Path chain_path(const Netlist& n, const std::string& launch, const std::vector<std::string>& gates,
                const std::string& capture) {
  Path p;
  p.nodes.push_back(n.at(launch));
  p.pins.push_back(-1);
  for (const auto& g : gates) {
    p.nodes.push_back(n.at(g));
    p.pins.push_back(0);
  }
  p.nodes.push_back(n.at(capture));
  p.pins.push_back(0);
  return p;
}

}  // namespace

TEST_SUITE("workflow") {
  TEST_CASE("candidates sorted by path length through them") {
    const TimingConfig cfg;
    for (const char* b : {"fig2", "fig3_s298", "synth_a"}) {
      const auto n = bench(b);
      const auto order = sort_candidates(n, cfg);
      REQUIRE(order.size() == n.flipflop_count());
      for (std::size_t i = 1; i < order.size(); ++i) {
        const double a = ordering_key(n, order[i - 1], cfg), c = ordering_key(n, order[i], cfg);
        CHECK(a >= c - 1e-9);
        if (std::abs(a - c) < 1e-9) CHECK(order[i - 1] < order[i]);
      }
    }
  }

  TEST_CASE("equal keys keep id order") {
    const auto n = parse_bench_string(star(3));
    const auto order = sort_candidates(n, TimingConfig{});
    REQUIRE(order.size() == 4);
    // r0..r2 tie above hub
    CHECK(order[0] == n.at("r0"));
    CHECK(order[1] == n.at("r1"));
    CHECK(order[2] == n.at("r2"));
    CHECK(order[3] == n.at("hub"));
  }

  TEST_CASE("high fan-out registers are filtered") {
    const auto n = parse_bench_string(star(9));
    TimingConfig cfg;
    cfg.fanio_threshold = 8;
    const auto order = sort_candidates(n, cfg);
    const auto kept = filter_candidates(order, n, cfg);
    CHECK(kept.size() == order.size() - 1);
    CHECK(std::find(kept.begin(), kept.end(), n.at("hub")) == kept.end());
    cfg.fanio_threshold = 1000;
    CHECK(filter_candidates(order, n, cfg) == order);
  }

  TEST_CASE("zero targets leave the netlist unchanged") {
    const auto n = bench("fig2");
    TimingConfig cfg;
    cfg.n_wpf = 0;
    cfg.n_wpt = 0;
    const auto res = construct(n, cfg, 1);
    CHECK(write_bench(res.netlist) == write_bench(n));
    CHECK(res.state.records.empty());
    CHECK(res.state.sites.empty());
    const auto m = report(res.state, n, res.netlist, cfg, 1);
    CHECK(m.n_wpt == 0);
    CHECK(m.n_wpf == 0);
    CHECK(m.n_d == 0);
    CHECK(m.removal_sites + m.duplication_sites == 0);
    CHECK(m.ffs_after == m.ffs_before);
  }

  TEST_CASE("an unbounded blocking distance allows one site per phase") {
    const auto n = bench("synth_b");
    TimingConfig cfg;
    cfg.dis_t = 1e9;
    const auto res = construct(n, cfg, 1);
    int ok_false = 0, ok_true = 0;
    for (const auto& s : res.state.sites)
      if (s.ok) (s.false_phase ? ok_false : ok_true)++;
    CHECK(ok_false <= 1);
    CHECK(ok_true <= 1);
  }

  TEST_CASE("same seed, same outputs") {
    const auto n = bench("synth_a");
    TimingConfig cfg;
    cfg.dis_t = 1;
    const auto a = construct(n, cfg, 7), b = construct(n, cfg, 7);
    CHECK(write_bench(a.netlist) == write_bench(b.netlist));
    CHECK(write_annotations(a.netlist) == write_annotations(b.netlist));
    CHECK(ground_truth_json(a.state.records, a.state.cuts) == ground_truth_json(b.state.records, b.state.cuts));
    CHECK(metrics_to_json(report(a.state, n, a.netlist, cfg, 7)) ==
          metrics_to_json(report(b.state, n, b.netlist, cfg, 7)));
  }

  TEST_CASE("ground truth round trip") {
    const auto n = bench("fig2");
    TimingConfig cfg;
    cfg.dis_t = 1;
    const auto res = construct(n, cfg, 3);
    REQUIRE_FALSE(res.state.records.empty());
    const auto text = ground_truth_json(res.state.records, res.state.cuts);
    std::vector<WpRecord> recs;
    std::vector<WaveCut> cuts;
    ground_truth_from_json(text, recs, cuts);
    CHECK(ground_truth_json(recs, cuts) == text);
  }
}

TEST_SUITE("attacks") {
  TEST_CASE("record gray status") {
    const TimingConfig cfg;
    CHECK(record_gray(record(11.9, 12.3), cfg) == Gray::Suspicious);
    // 0.8 * (12.45 + 0.1) > T
    CHECK(record_gray(record(11.9, 12.45), cfg) == Gray::DefinitelyWp);
    TimingConfig exact = cfg;
    exact.tau = 0;
    CHECK(record_gray(record(11.9, 12.3), exact) == Gray::DefinitelyWp);
  }

  TEST_CASE("gray region edges") {
    const TimingConfig cfg;
    const double lo = cfg.T / (1 + cfg.tau), hi = cfg.T / (1 - cfg.tau);
    CHECK(classify_gray(lo - 1e-6, cfg) == Gray::DefinitelySingle);
    CHECK(classify_gray(lo + 1e-6, cfg) == Gray::Suspicious);
    CHECK(classify_gray(hi - 1e-6, cfg) == Gray::Suspicious);
    CHECK(classify_gray(hi + 1e-6, cfg) == Gray::DefinitelyWp);
  }

  TEST_CASE("no paths, no attempts") {
    const auto n = bench("fig2");
    const auto rep = sizing_attack(n, {}, {}, TimingConfig{}, 1);
    CHECK(rep.attempted == 0);
    CHECK(rep.failed == 0);
    CHECK_FALSE(rep.sized_checked);
  }

  // x -> b0..b5 -> c is the target, x -> b0..b8 -> d a critical true path on the same gates
  const char* trap =
      "INPUT(a)\nOUTPUT(oc)\nOUTPUT(od)\nia = BUFF(a)\nx = DFF(ia)\nb0 = BUFF(x)\nb1 = BUFF(b0)\nb2 = BUFF(b1)\n"
      "b3 = BUFF(b2)\nb4 = BUFF(b3)\nb5 = BUFF(b4)\nb6 = BUFF(b5)\nb7 = BUFF(b6)\nb8 = BUFF(b7)\nc = DFF(b5)\n"
      "d = DFF(b8)\noc = BUFF(c)\nod = BUFF(d)\n";

  TEST_CASE("a false path whose gates all lie on a critical true path cannot be sized") {
    const auto n = parse_bench_string(trap);
    const TimingConfig cfg;
    const auto fp = chain_path(n, "x", {"b0", "b1", "b2", "b3", "b4", "b5"}, "c");
    const auto tp = chain_path(n, "x", {"b0", "b1", "b2", "b3", "b4", "b5", "b6", "b7", "b8"}, "d");
    const auto rep = sizing_attack(n, {fp}, {tp}, cfg, 1, 0);
    CHECK(rep.attempted == 1);
    CHECK(rep.failed == 1);
    REQUIRE(rep.outcomes.size() == 1);
    REQUIRE(rep.outcomes[0].blocking.size() == 1);
    CHECK(rep.outcomes[0].blocking[0].back() == "d");
  }

  TEST_CASE("an isolated false path is sized into the window") {
    const auto n = parse_bench_string(trap);
    const TimingConfig cfg;
    const auto fp = chain_path(n, "x", {"b0", "b1", "b2", "b3", "b4", "b5"}, "c");
    const auto rep = sizing_attack(n, {fp}, {}, cfg, 1, 0);
    CHECK(rep.failed == 0);
    REQUIRE(rep.outcomes.size() == 1);
    CHECK(rep.outcomes[0].success);
    CHECK(rep.outcomes[0].delay_before == doctest::Approx(6.2));
    CHECK(rep.outcomes[0].delay_after >= cfg.T + cfg.t_h - 1e-6);
    CHECK(rep.outcomes[0].delay_after <= 2 * cfg.T - cfg.t_su + 1e-6);
  }

  TEST_CASE("constructed records screen as suspicious") {
    const auto n = bench("fig2");
    TimingConfig cfg;
    cfg.dis_t = 1;
    const auto res = construct(n, cfg, 1);
    REQUIRE_FALSE(res.state.records.empty());
    const auto rep = screen(res.netlist, res.state.cuts, res.state.records, cfg, 5);
    CHECK(rep.records_checked == static_cast<int>(res.state.records.size()));
    CHECK(rep.records_suspicious == rep.records_checked);
  }
}
