#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "tcam/falsepath.hpp"
#include "tcam/timing.hpp"

using namespace tcam;

namespace {

std::shared_ptr<DelayLibrary> library_with(const std::map<std::string, std::vector<double>>& pins) {
  auto lib = std::make_shared<DelayLibrary>(DelayLibrary::builtin());
  for (const auto& [name, d] : pins) lib->set_override(name, {d});
  return lib;
}

// buffered input, launch register, n BUFFs, capture register
std::string buffer_line(int buffers) {
  std::ostringstream b;
  b << "INPUT(a)\nOUTPUT(o)\nia = BUFF(a)\nx = DFF(ia)\n";
  std::string prev = "x";
  for (int i = 0; i < buffers; ++i) {
    b << "b" << i << " = BUFF(" << prev << ")\n";
    prev = "b" + std::to_string(i);
  }
  b << "c = DFF(" << prev << ")\no = BUFF(c)\n";
  return b.str();
}

}  // namespace

TEST_SUITE("timing") {
  TEST_CASE("single gate behind a flip-flop") {
    TimingConfig cfg;
    cfg.t_cq = 1;
    const auto n = parse_bench_string("INPUT(a)\nOUTPUT(o)\nf = DFF(a)\ng = NOT(f)\no = BUFF(g)\n",
                                      library_with({{"g", {3}}}));
    const auto at = propagate_arrivals(n, cfg);
    CHECK(at.late[n.at("g")] == doctest::Approx(4));
    CHECK(at.early[n.at("g")] == doctest::Approx(4));
  }

  TEST_CASE("max and min over three fan-in arrivals") {
    TimingConfig cfg;
    cfg.t_cq = 0;
    const auto n = parse_bench_string(
        "INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(o)\nj = AND(a, b, c)\no = BUFF(j)\n",
        library_with({{"j", {5, 7, 6}}}));
    const auto at = propagate_arrivals(n, cfg);
    CHECK(at.late[n.at("j")] == doctest::Approx(7));
    CHECK(at.early[n.at("j")] == doctest::Approx(5));
    CHECK(at.late_from[n.at("j")] == n.at("b"));
    CHECK(at.early_from[n.at("j")] == n.at("a"));
  }

  TEST_CASE("arrivals match exhaustive path enumeration on random DAGs") {
    std::mt19937_64 rng(11);
    static const char* kinds[] = {"AND", "NAND", "OR", "NOR", "XOR"};
    TimingConfig cfg;
    for (int trial = 0; trial < 5; ++trial) {
      std::ostringstream b;
      b << "INPUT(i0)\nINPUT(i1)\nINPUT(i2)\nOUTPUT(o)\nf0 = DFF(i0)\nf1 = DFF(g49)\n";
      std::vector<std::string> prev = {"i1", "i2", "f0", "f1"};
      int k = 0;
      for (int layer = 0; layer < 5; ++layer) {
        std::vector<std::string> cur;
        for (int j = 0; j < 10; ++j, ++k) {
          const auto a = prev[rng() % prev.size()], c = prev[rng() % prev.size()];
          const auto name = "g" + std::to_string(k);
          if (a == c) b << name << " = NOT(" << a << ")\n";
          else b << name << " = " << kinds[rng() % 5] << "(" << a << ", " << c << ")\n";
          cur.push_back(name);
        }
        prev = cur;
      }
      b << "o = BUFF(g40)\n";
      auto n = parse_bench_string(b.str());
      for (NodeId g : n.gates())
        if (rng() % 3 == 0) n.set_xi(g, 0.1 * static_cast<double>(rng() % 7));
      const auto at = propagate_arrivals(n, cfg);
      // every source-to-gate path, enumerated recursively
      for (NodeId g : n.gates()) {
        double lo = INFINITY, hi = -INFINITY;
        std::function<void(NodeId, double)> back = [&](NodeId v, double acc) {
          const auto& node = n.node(v);
          if (node.kind == NodeKind::Input) {
            lo = std::min(lo, acc);
            hi = std::max(hi, acc);
            return;
          }
          if (node.kind == NodeKind::FlipFlop) {
            lo = std::min(lo, acc + cfg.t_cq);
            hi = std::max(hi, acc + cfg.t_cq);
            return;
          }
          for (std::size_t p = 0; p < node.fanin.size(); ++p)
            back(node.fanin[p], acc + n.stage_delay(v, static_cast<int>(p)));
        };
        back(g, 0);
        CHECK(at.late[g] == doctest::Approx(hi).epsilon(1e-9));
        CHECK(at.early[g] == doctest::Approx(lo).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("path delay sums stage delays and inserted delay") {
    auto n = parse_bench_string("INPUT(a)\nOUTPUT(o)\ng1 = NOT(a)\ng2 = NOT(g1)\no = BUFF(g2)\n",
                                library_with({{"g1", {3}}, {"g2", {4}}}));
    Path p{{n.at("a"), n.at("g1"), n.at("g2"), n.outputs()[0]}, {-1, 0, 0, 0}};
    // the output port contributes nothing
    CHECK(path_delay(n, Path{{n.at("a"), n.at("g1"), n.at("g2")}, {-1, 0, 0}}) == doctest::Approx(7));
    n.set_xi(n.at("g2"), 2);
    CHECK(path_delay(n, Path{{n.at("a"), n.at("g1"), n.at("g2")}, {-1, 0, 0}}) == doctest::Approx(9));
    CHECK(describe(n, p).find("g1") != std::string::npos);
  }

  TEST_CASE("bilinear lookup on a 2x2 table") {
    LookupTable t{{0, 1}, {0, 2}, {{1, 2}, {3, 5}}};
    CHECK(t.at(0, 0) == doctest::Approx(1));
    CHECK(t.at(1, 2) == doctest::Approx(5));
    // hand evaluation: rows interpolate to 1.5 and 4 at load 1, then halfway
    CHECK(t.at(0.5, 1) == doctest::Approx(2.75));
    bool clamped = false;
    CHECK(t.at(2, 1, &clamped) == doctest::Approx(4));
    CHECK(clamped);
  }

  TEST_CASE("lookup mode follows the table direction") {
    const auto n = parse_bench_string(buffer_line(4));
    TimingConfig cfg;
    Path p;
    p.nodes.push_back(n.at("x"));
    p.pins.push_back(-1);
    for (int i = 0; i < 4; ++i) {
      p.nodes.push_back(n.at("b" + std::to_string(i)));
      p.pins.push_back(0);
    }
    p.nodes.push_back(n.at("c"));
    p.pins.push_back(0);
    const double typ = path_delay(n, p);
    const double look = path_delay(n, p, DelayMode::Lookup);
    double hand = 0, slew = n.library().flipflop().q_slew;
    for (std::size_t k = 1; k + 1 < p.nodes.size(); ++k) {
      const auto& cell = n.library().cell(GateKind::Buf);
      const double load = node_load(n, p.nodes[k]);
      hand += n.stage_delay(p.nodes[k], 0) * cell.delay_scale.at(slew, load) / cell.delay_scale.typical();
      slew = cell.out_slew.at(slew, load);
    }
    CHECK(look == doctest::Approx(hand).epsilon(1e-9));
    CHECK(std::abs(look - typ) / typ < 0.05);
  }

  TEST_CASE("sampling under the limit is exhaustive") {
    const auto n = parse_bench_string(
        "INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(o)\ng = AND(a, b, c)\nf = DFF(g)\no = BUFF(f)\n");
    const auto ps = sample_paths(n, n.at("f"), Side::Fanin, 500, 1);
    CHECK(ps.size() == 3);
    CHECK(count_paths(n, n.at("f"), Side::Fanin, 1000) == 3);
  }

  TEST_CASE("sampling a wide cone stops at the limit") {
    std::ostringstream b;
    b << "INPUT(a)\nOUTPUT(o)\n";
    std::string s = "a";
    for (int i = 0; i < 10; ++i) {
      b << "p" << i << " = BUFF(" << s << ")\nq" << i << " = NOT(" << s << ")\ns" << i << " = AND(p" << i << ", q" << i << ")\n";
      s = "s" + std::to_string(i);
    }
    b << "f = DFF(" << s << ")\no = BUFF(f)\n";
    const auto n = parse_bench_string(b.str());
    CHECK(count_paths(n, n.at("f"), Side::Fanin, 1u << 20) == 1024);
    const auto ps = sample_paths(n, n.at("f"), Side::Fanin, 500, 3);
    CHECK(ps.size() == 500);
    CHECK(std::set<Path>(ps.begin(), ps.end()).size() == 500);
    CHECK(sample_paths(n, n.at("f"), Side::Fanin, 500, 3) == ps);
  }

  TEST_CASE("gray region") {
    TimingConfig cfg;
    CHECK(classify_gray(10, cfg) == Gray::Suspicious);
    cfg.tau = 0;
    CHECK(classify_gray(10, cfg) == Gray::Suspicious);
    cfg.tau = 0.2;
    CHECK(classify_gray(8, cfg) == Gray::DefinitelySingle);
    CHECK(classify_gray(13, cfg) == Gray::DefinitelyWp);
    CHECK(classify_gray(12.4, cfg) == Gray::Suspicious);
    CHECK(classify_gray(8.4, cfg) == Gray::Suspicious);
  }

  TEST_CASE("two-wave window") {
    TimingConfig cfg;
    cfg.delta = 0;
    cfg.t_h = cfg.t_su = 0;
    auto w = check_wp_window(15, 15, cfg);
    CHECK(w.ok);
    CHECK(w.short_slack == doctest::Approx(5));
    CHECK(w.long_slack == doctest::Approx(5));
    cfg.delta = 0.15;
    cfg.t_su = 1;
    CHECK_FALSE(check_wp_window(15, 17, cfg).ok);
    cfg.t_su = 0;
    cfg.t_h = 0.5;
    CHECK_FALSE(check_wp_window(12, 15, cfg).ok);
  }

  TEST_CASE("window bounds used for construction") {
    const TimingConfig cfg;
    CHECK(wave_lower(cfg) == doctest::Approx((cfg.T + cfg.t_h) / (1 - cfg.delta)));
    CHECK(wave_upper(cfg) == doctest::Approx(cfg.T / (1 - cfg.tau) - cfg.t_su));
    CHECK(check_wp_window(wave_lower(cfg), wave_upper(cfg), cfg).ok);
    CHECK(classify_gray(wave_upper(cfg) + cfg.t_su, cfg) == Gray::Suspicious);
  }

  TEST_CASE("single-frame captures") {
    const TimingConfig cfg;
    CHECK(check_captures(parse_bench_string(buffer_line(5)), {}, cfg).empty());
    const auto slow = check_captures(parse_bench_string(buffer_line(10)), {}, cfg);
    REQUIRE(slow.size() == 1);
    CHECK(slow[0].what.find("setup") != std::string::npos);
    CHECK(slow[0].slack == doctest::Approx(cfg.T - cfg.t_su - 10.2));
  }

  TEST_CASE("two-wave captures") {
    const TimingConfig cfg;
    const std::vector<WaveCut> cuts{{"b0", 0}};
    // 0.2 + 12 = 12.2 sits inside [11.82, 12.4]
    const auto ok = parse_bench_string(buffer_line(12));
    CHECK(check_captures(ok, cuts, cfg).empty());
    const auto wa = wave_arrivals(ok, cuts, cfg);
    CHECK(wa.wlate[ok.at("b11")] == doctest::Approx(12.2));
    CHECK(std::isnan(wa.late[ok.at("b11")]));
    CHECK_FALSE(check_captures(parse_bench_string(buffer_line(11)), cuts, cfg).empty());
    CHECK_FALSE(check_captures(parse_bench_string(buffer_line(13)), cuts, cfg).empty());
    std::string why;
    CHECK(wave_capture_ok(12.0, 12.2, cfg));
    CHECK_FALSE(wave_capture_ok(11.0, 12.2, cfg, &why));
    CHECK_FALSE(why.empty());
  }

  TEST_CASE("config validation and round trip") {
    TimingConfig cfg;
    cfg.validate();
    cfg.xi_max = 2.5;
    const auto back = TimingConfig::from_json_text(cfg.to_json_text());
    CHECK(back.xi_max == doctest::Approx(2.5));
    cfg.tau = 1.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    CHECK_THROWS(TimingConfig::from_json_text("{\"unknown_key\": 1}"));
  }
}
