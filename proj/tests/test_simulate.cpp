#include <sstream>

#include "doctest.h"
#include "tcam/simulate.hpp"

using namespace tcam;

namespace {

// input register x, `buffers` BUFFs, optional middle register, capture c
std::string line(int buffers, int mid = -1) {
  std::ostringstream b;
  b << "INPUT(a)\nOUTPUT(o)\nia = BUFF(a)\nx = DFF(ia)\n";
  std::string prev = "x";
  for (int i = 0; i < buffers; ++i) {
    b << "b" << i << " = BUFF(" << prev << ")\n";
    prev = "b" + std::to_string(i);
    if (i == mid) {
      b << "m = DFF(" << prev << ")\n";
      prev = "m";
    }
  }
  b << "c = DFF(" << prev << ")\no = BUFF(c)\n";
  return b.str();
}

}  // namespace

TEST_SUITE("simulate") {
  TEST_CASE("half-period path is latched at the next edge") {
    const auto n = parse_bench_string(line(4));
    const TimingConfig cfg;
    const auto in = random_inputs(n, 50, 1);
    const auto ev = simulate(n, in, cfg);
    const auto ref = simulate_cycles(n, in);
    CHECK(ev.violations.empty());
    CHECK(ev.outputs == ref.outputs);
    // a at cycle k reaches o two edges later
    for (std::size_t k = 3; k < ev.outputs.size(); ++k) CHECK(ev.outputs[k][0] == in[k - 2][0]);
  }

  TEST_CASE("arrival exactly one period late is flagged") {
    // 0.2 + 9.8 = T at the capture of c
    auto n = parse_bench_string(line(9));
    n.set_xi(n.at("b0"), 0.8);
    const TimingConfig cfg;
    const auto ev = simulate(n, random_inputs(n, 40, 2), cfg);
    CHECK_FALSE(ev.violations.empty());
  }

  TEST_CASE("two waves: the capture sees wave k at edge k + 2") {
    // 0.2 + 14 * 1.0 = 1.42 T
    auto wp = parse_bench_string(line(14));
    const auto pipe = parse_bench_string(line(14, 6));
    TimingConfig cfg;
    const auto in = random_inputs(wp, 60, 5);
    const auto ev = simulate(wp, in, cfg, aligned_state(pipe, wp));
    const auto ref = simulate_cycles(pipe, in);
    CHECK(ev.violations.empty());
    for (std::size_t k = static_cast<std::size_t>(cfg.warmup_cycles); k < ev.outputs.size(); ++k)
      CHECK(ev.outputs[k] == ref.outputs[k]);
    for (std::size_t k = 4; k < ev.outputs.size(); ++k) CHECK(ev.outputs[k][0] == in[k - 3][0]);
    const auto eq = equivalence_check(pipe, wp, 2000, 3, 7, cfg.warmup_cycles, cfg);
    CHECK(eq.equivalent);
    CHECK(eq.violations == 0);
  }

  TEST_CASE("a two-wave path shorter than a period diverges") {
    const auto pipe = parse_bench_string(line(8, 3));
    const auto wp = parse_bench_string(line(8));
    const TimingConfig cfg;
    const auto eq = equivalence_check(pipe, wp, 500, 2, 3, cfg.warmup_cycles, cfg);
    CHECK_FALSE(eq.equivalent);
  }

  TEST_CASE("a netlist is equivalent to itself") {
    const auto n = load_bench(TCAM_BENCH_DIR "/synth_a.bench");
    const TimingConfig cfg;
    const auto eq = equivalence_check(n, n, 500, 2, 1, cfg.warmup_cycles, cfg);
    CHECK(eq.equivalent);
    CHECK(eq.violations == 0);
  }

  TEST_CASE("timing-clean benchmarks match the cycle model") {
    const TimingConfig cfg;
    for (const char* b : {"fig2", "fig3_s298", "synth_a", "synth_b"}) {
      const auto n = load_bench(std::string(TCAM_BENCH_DIR) + "/" + b + ".bench");
      const auto in = random_inputs(n, 300, 11);
      const auto init = reset_state(n);
      const auto ev = simulate(n, in, cfg, init);
      CHECK_MESSAGE(ev.violations.empty(), b);
      CHECK_MESSAGE(ev.outputs == simulate_cycles(n, in, init).outputs, b);
    }
  }

  TEST_CASE("reset fixpoint") {
    const auto n = parse_bench_string("INPUT(a)\nOUTPUT(o)\nia = BUFF(a)\nx = DFF(g)\ng = NOR(x, ia)\no = BUFF(x)\n");
    bool found = true;
    reset_state(n, &found);
    // x' = NOR(x, 0) = not x oscillates
    CHECK_FALSE(found);
    const auto m = parse_bench_string("INPUT(a)\nOUTPUT(o)\nia = BUFF(a)\nx = DFF(g)\ng = NAND(x, ia)\no = BUFF(x)\n");
    const auto s = reset_state(m, &found);
    CHECK(found);
    CHECK(s == std::vector<bool>{true});
  }

  TEST_CASE("settle evaluates gate functions") {
    const auto n = parse_bench_string("INPUT(a)\nINPUT(b)\nOUTPUT(o)\ng = XOR(a, b)\no = NOT(g)\n");
    CHECK(settle(n, {}, {true, false})[n.at("g")]);
    CHECK_FALSE(settle(n, {}, {true, true})[n.at("g")]);
  }
}
