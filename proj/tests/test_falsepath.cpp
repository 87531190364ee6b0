#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "tcam/falsepath.hpp"
#include "tcam/sat.hpp"

using namespace tcam;

namespace {

Path path_of(const Netlist& n, const std::vector<std::pair<std::string, int>>& steps) {
  Path p;
  for (const auto& [name, pin] : steps) {
    p.nodes.push_back(n.at(name));
    p.pins.push_back(pin);
  }
  return p;
}

Netlist fig3() { return load_bench(TCAM_BENCH_DIR "/fig3_s298.bench"); }

// G11 -> AND(., G12) ... G14 ... OR(., G12) ... G22
Path dashed(const Netlist& n) {
  return path_of(n, {{"G11", -1}, {"G40", 0}, {"G41", 0}, {"G42", 0}, {"G43", 0}, {"G44", 0}, {"G45", 0},
                     {"G46", 0}, {"G14", 0}, {"G50", 0}, {"G51", 0}, {"G52", 0}, {"G53", 0}, {"G54", 0},
                     {"G55", 0}, {"G56", 0}, {"G22", 0}});
}

}  // namespace

TEST_SUITE("sat") {
  TEST_CASE("small formulas") {
    sat::Cnf c;
    const int a = c.new_var(), b = c.new_var();
    c.add({a, b});
    c.add({-a});
    auto s = sat::solve(c);
    REQUIRE(s.result == sat::Result::Sat);
    CHECK_FALSE(s.model[static_cast<std::size_t>(a)]);
    CHECK(s.model[static_cast<std::size_t>(b)]);
    c.add({-b});
    CHECK(sat::solve(c).result == sat::Result::Unsat);
    CHECK(sat::solve(sat::Cnf{}).result == sat::Result::Sat);
  }

  TEST_CASE("four pigeons in three holes") {
    sat::Cnf c;
    int v[4][3];
    for (auto& row : v)
      for (int& x : row) x = c.new_var();
    for (auto& row : v) c.add({row[0], row[1], row[2]});
    for (int h = 0; h < 3; ++h)
      for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) c.add({-v[i][h], -v[j][h]});
    CHECK(sat::solve(c).result == sat::Result::Unsat);
  }

  TEST_CASE("random 3-SAT agrees with enumeration") {
    std::mt19937_64 rng(5);
    int agree = 0;
    for (int t = 0; t < 150; ++t) {
      sat::Cnf c;
      c.num_vars = 12;
      const int m = 40 + static_cast<int>(rng() % 30);
      for (int k = 0; k < m; ++k) {
        std::vector<sat::Lit> cl;
        for (int j = 0; j < 3; ++j) {
          const int var = 1 + static_cast<int>(rng() % 12);
          cl.push_back(rng() % 2 ? var : -var);
        }
        c.add(cl);
      }
      const auto s = sat::solve(c);
      const bool want = oracle::satisfiable(c);
      CHECK((s.result == sat::Result::Sat) == want);
      if (s.result == sat::Result::Sat) {
        for (const auto& cl : c.clauses) {
          bool any = false;
          for (sat::Lit l : cl) any = any || s.model[static_cast<std::size_t>(std::abs(l))] == (l > 0);
          CHECK(any);
        }
      }
      agree += (s.result == sat::Result::Sat) == want;
    }
    CHECK(agree == 150);
  }

  TEST_CASE("decision limit gives unknown") {
    sat::Cnf c;
    int v[7][6];
    for (auto& row : v)
      for (int& x : row) x = c.new_var();
    for (auto& row : v) c.add(std::vector<sat::Lit>(std::begin(row), std::end(row)));
    for (int h = 0; h < 6; ++h)
      for (int i = 0; i < 7; ++i)
        for (int j = i + 1; j < 7; ++j) c.add({-v[i][h], -v[j][h]});
    CHECK(sat::solve(c, 10).result == sat::Result::Unknown);
  }
}

TEST_SUITE("falsepath") {
  TEST_CASE("a single inverter has no side inputs") {
    const auto n = parse_bench_string("INPUT(a)\nOUTPUT(o)\ng = NOT(a)\no = BUFF(g)\n");
    const auto c = build_condition(n, path_of(n, {{"a", -1}, {"g", 0}, {"o", 0}}));
    CHECK(c.side.empty());
    CHECK(is_true_path(n, path_of(n, {{"a", -1}, {"g", 0}, {"o", 0}})));
  }

  TEST_CASE("three-input AND on pin 0") {
    const auto n = parse_bench_string("INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(o)\ng = AND(a, b, c)\no = BUFF(g)\n");
    const auto c = build_condition(n, path_of(n, {{"a", -1}, {"g", 0}, {"o", 0}}));
    REQUIRE(c.side.size() == 2);
    for (const auto& s : c.side) CHECK(s.value);
    CHECK(c.side[0].net == n.at("b"));
    CHECK(c.side[1].net == n.at("c"));
  }

  TEST_CASE("XOR leaves its side input free") {
    const auto n = parse_bench_string("INPUT(a)\nINPUT(b)\nOUTPUT(o)\ng = XOR(a, b)\no = BUFF(g)\n");
    const auto c = build_condition(n, path_of(n, {{"a", -1}, {"g", 0}, {"o", 0}}));
    CHECK(c.side.empty());
    CHECK(c.has_xor);
  }

  TEST_CASE("buffer chain is a true path") {
    const auto n = parse_bench_string("INPUT(a)\nOUTPUT(o)\ng1 = BUFF(a)\ng2 = BUFF(g1)\no = BUFF(g2)\n");
    CHECK(is_true_path(n, path_of(n, {{"a", -1}, {"g1", 0}, {"g2", 0}, {"o", 0}})));
  }

  TEST_CASE("crossing a flip-flop needs the single-period view") {
    const auto n = fig3();
    CHECK_THROWS(build_condition(n, dashed(n)));
  }

  TEST_CASE("dashed path of the snippet asks for both values of G12") {
    const auto n = fig3();
    const auto c = build_condition(n, dashed(n), {n.at("G14")});
    bool one = false, zero = false;
    for (const auto& s : c.side)
      if (s.net == n.at("G12")) (s.value ? one : zero) = true;
    CHECK(one);
    CHECK(zero);
    CHECK(sensitize(n, dashed(n), 100000, {n.at("G14")}) == PathStatus::False);
    CHECK_FALSE(is_true_path(n, dashed(n), 100000, {n.at("G14")}));
  }

  TEST_CASE("both halves of the dashed path are true paths") {
    const auto n = fig3();
    const auto d = dashed(n);
    const Path left{{d.nodes.begin(), d.nodes.begin() + 9}, {d.pins.begin(), d.pins.begin() + 9}};
    Path right{{d.nodes.begin() + 8, d.nodes.end()}, {d.pins.begin() + 8, d.pins.end()}};
    right.pins[0] = -1;
    CHECK(is_true_path(n, left));
    CHECK(is_true_path(n, right));
  }

  TEST_CASE("the snippet reports the dashed pair") {
    const auto n = fig3();
    const TimingConfig cfg;
    const auto scan = check_wp_false_paths(n, n.at("G14"), cfg, 1);
    CHECK(scan.n_candidates >= 1);
    bool found = false;
    for (const auto& p : scan.pairs) found = found || p.merged == dashed(n);
    CHECK(found);
    for (const auto& p : scan.pairs) {
      CHECK(p.merged_false);
      CHECK(is_true_path(n, p.left));
      CHECK(is_true_path(n, p.right));
    }
  }

  TEST_CASE("a site with an independent side input has no false pairs") {
    const auto n = fig3();
    const TimingConfig cfg;
    CHECK(check_wp_false_paths(n, n.at("G16"), cfg, 1).n_candidates == 0);
    CHECK(scan_pairs(n, n.at("G16"), cfg, 1, false).n_candidates >= 1);
  }

  TEST_CASE("pair scan is stable for a fixed seed") {
    const auto n = load_bench(TCAM_BENCH_DIR "/synth_b.bench");
    const TimingConfig cfg;
    for (NodeId f : n.flipflops()) {
      const auto a = check_wp_false_paths(n, f, cfg, 9), b = check_wp_false_paths(n, f, cfg, 9);
      CHECK(a.n_candidates == b.n_candidates);
      REQUIRE(a.pairs.size() == b.pairs.size());
      for (std::size_t i = 0; i < a.pairs.size(); ++i) CHECK(a.pairs[i].merged == b.pairs[i].merged);
    }
  }

  TEST_CASE("sensitization agrees with enumeration on random cones") {
    int checked = 0, falses = 0;
    for (std::uint64_t seed = 1; checked < 120; ++seed) {
      const auto c = oracle::random_cone(seed, 15, 40);
      const auto want = oracle::sensitizable(c.n, c.path, 15);
      if (!want) continue;
      ++checked;
      falses += !*want;
      CHECK(is_true_path(c.n, c.path) == *want);
    }
    // the sample must exercise both outcomes
    CHECK(falses > 0);
    CHECK(falses < checked);
  }

  TEST_CASE("reachable delay brackets the current delay") {
    const auto n = fig3();
    const TimingConfig cfg;
    const auto d = dashed(n);
    const auto [lo, hi] = reachable_delay(n, d, cfg);
    const double now = launch_offset(n, d, cfg) + path_delay(n, d);
    // every gate is at its fastest level without inserted delay
    CHECK(lo == doctest::Approx(now));
    double slow = launch_offset(n, d, cfg);
    for (std::size_t k = 1; k < d.nodes.size(); ++k)
      if (n.is_gate(d.nodes[k]))
        slow += n.level_delay(d.nodes[k], n.size_levels(d.nodes[k]) - 1, d.pins[k]) + cfg.xi_max;
    CHECK(hi == doctest::Approx(slow));
  }
}
