// Deterministic synthetic benchmark generator: timing-clean random filler logic
// plus pipeline stages around flip-flops usable for construction.
#include <algorithm>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"

namespace {

struct Signal {
  std::string name;
  double late;
};

class Generator {
public:
  explicit Generator(std::uint64_t seed) : rng_(seed) {}

  int gates = 0;

  std::string gate(const std::string& kind, const std::vector<std::string>& in, const std::string& prefix = "n") {
    const auto name = fmt::format("{}{}", prefix, uid_++);
    body_ << fmt::format("{} = {}({})\n", name, kind, fmt::join(in, ", "));
    ++gates;
    for (const auto& s : in) used_.push_back(s);
    return name;
  }
  std::string dff(const std::string& d, const std::string& prefix = "r") {
    const auto name = fmt::format("{}{}", prefix, uid_++);
    body_ << fmt::format("{} = DFF({})\n", name, d);
    used_.push_back(d);
    return name;
  }
  void define_dff(const std::string& name, const std::string& d) {
    body_ << fmt::format("{} = DFF({})\n", name, d);
    used_.push_back(d);
  }
  std::string input() {
    const auto name = fmt::format("pi{}", inputs_.size());
    inputs_.push_back(name);
    return name;
  }
  void output(const std::string& driver) {
    const auto name = gate("BUFF", {driver}, "po");
    outputs_.push_back(name);
  }
  bool used(const std::string& s) const { return std::find(used_.begin(), used_.end(), s) != used_.end(); }
  std::mt19937_64& rng() { return rng_; }
  int pick(int n) { return static_cast<int>(std::uniform_int_distribution<int>(0, n - 1)(rng_)); }
  double uniform() { return std::uniform_real_distribution<double>(0, 1)(rng_); }

  std::string text(const std::string& title) const {
    std::ostringstream out;
    out << "# " << title << "\n";
    for (const auto& i : inputs_) out << "INPUT(" << i << ")\n";
    for (const auto& o : outputs_) out << "OUTPUT(" << o << ")\n";
    out << "\n" << body_.str();
    return out.str();
  }

private:
  std::mt19937_64 rng_;
  std::ostringstream body_;
  std::vector<std::string> inputs_, outputs_, used_;
  int uid_ = 0;
};

constexpr double kTcq = 0.2;

// Chain of BUFF/NOT gates and two-input gates with an independent side input,
// extending `from` by at most `target` and at least target - 0.6 time units.
std::string chain(Generator& g, std::string from, double target, const std::vector<std::string>& noise) {
  double d = 0;
  for (;;) {
    const double left = target - d + 1e-9;
    const int r = g.pick(10);
    if (left >= 1.1 && r < 2 && !noise.empty()) {
      const bool use_and = g.pick(2) == 0;
      from = g.gate(use_and ? "AND" : "OR", {from, noise[static_cast<std::size_t>(g.pick(static_cast<int>(noise.size())))]});
      d += use_and ? 1.0 : 1.1;
    } else if (left >= 1.0 && (r < 8 || left >= 1.2)) {
      from = g.gate("BUFF", {from});
      d += 1.0;
    } else if (left >= 0.6) {
      from = g.gate("NOT", {from});
      d += 0.6;
    } else {
      return from;
    }
  }
}

struct Filler {
  std::vector<Signal> sources;  // register outputs and buffered inputs
  std::vector<Signal> gates;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic benchmark generator"};
  std::uint64_t seed = 1;
  int filler_gates = 80, filler_regs = 12, inputs = 8, false_sites = 3, true_sites = 3, dup_sites = 1, traps = 2;
  double depth = 4.5;
  std::string out, title = "synthetic";
  app.add_option("--seed", seed);
  app.add_option("--filler-gates", filler_gates);
  app.add_option("--filler-regs", filler_regs);
  app.add_option("--inputs", inputs);
  app.add_option("--false-sites", false_sites);
  app.add_option("--true-sites", true_sites);
  app.add_option("--dup-sites", dup_sites);
  app.add_option("--traps", traps);
  app.add_option("--depth", depth, "latest filler arrival");
  app.add_option("--title", title);
  app.add_option("--out", out)->required();
  CLI11_PARSE(app, argc, argv);

  Generator g(seed);
  Filler f;
  for (int i = 0; i < inputs; ++i) f.sources.push_back({g.gate("BUFF", {g.input()}, "pb"), 1.0});
  std::vector<std::string> regs;
  for (int i = 0; i < filler_regs; ++i) {
    regs.push_back(fmt::format("fr{}", i));
    f.sources.push_back({regs.back(), kTcq});
  }

  static const std::vector<std::pair<std::string, double>> kinds = {
      {"AND", 1.1}, {"NAND", 0.9}, {"OR", 1.2}, {"NOR", 1.0}, {"NOT", 0.6}, {"BUFF", 1.0}, {"XOR", 1.5}};
  for (int i = 0; i < filler_gates; ++i) {
    std::vector<Signal> pool = f.sources;
    pool.insert(pool.end(), f.gates.begin(), f.gates.end());
    const auto& [kind, delay] = kinds[static_cast<std::size_t>(g.pick(static_cast<int>(kinds.size())))];
    const int arity = (kind == "NOT" || kind == "BUFF") ? 1 : (kind != "XOR" && g.pick(4) == 0 ? 3 : 2);
    std::vector<Signal> chosen;
    for (int tries = 0; tries < 50 && static_cast<int>(chosen.size()) < arity; ++tries) {
      const auto& s = pool[static_cast<std::size_t>(g.pick(static_cast<int>(pool.size())))];
      if (s.late + delay + 0.3 > depth) continue;
      if (std::any_of(chosen.begin(), chosen.end(), [&](const Signal& c) { return c.name == s.name; })) continue;
      chosen.push_back(s);
    }
    if (static_cast<int>(chosen.size()) < arity) continue;
    std::vector<std::string> in;
    double late = 0;
    for (const auto& c : chosen) {
      in.push_back(c.name);
      late = std::max(late, c.late);
    }
    f.gates.push_back({g.gate(kind, in), late + delay + 0.3});
  }
  // registers close the filler loops; unused gates drive outputs
  std::vector<std::string> loose;
  for (const auto& s : f.gates)
    if (!g.used(s.name)) loose.push_back(s.name);
  for (std::size_t i = 0; i < regs.size(); ++i) {
    const auto d = i < loose.size() ? loose[i] : f.gates[static_cast<std::size_t>(g.pick(static_cast<int>(f.gates.size())))].name;
    g.define_dff(regs[i], d);
  }
  for (std::size_t i = regs.size(); i < loose.size(); ++i) g.output(loose[i]);

  const auto source = [&]() {
    return f.gates.empty() ? f.sources[static_cast<std::size_t>(g.pick(static_cast<int>(f.sources.size())))].name
                           : f.gates[static_cast<std::size_t>(g.pick(static_cast<int>(f.gates.size())))].name;
  };
  const auto reg = [&](const std::string& prefix) { return g.dff(source(), prefix); };
  std::vector<std::string> noise;
  for (int i = 0; i < 4; ++i) noise.push_back(reg("nz"));

  // pipeline sites: launch -> left -> site -> right -> capture
  const auto site = [&](const std::string& kind, int idx) {
    const auto x = reg("x");
    const auto v = reg("v");
    const double dl = 4.6 + 0.1 * g.pick(6), dr = 5.5 + 0.1 * g.pick(5);
    const auto g1 = g.gate("AND", {x, v});
    const auto root = chain(g, g1, dl - 1.0, {});
    const auto ff = g.dff(root, fmt::format("s{}_{}_", kind, idx));
    const auto side = kind == "t" ? reg("w") : v;
    const auto h1 = g.gate("OR", {ff, side});
    const auto last = chain(g, h1, dr - 1.1, noise);
    g.output(g.dff(last, "c"));
    if (kind == "d") {
      const auto m1 = g.gate("NOT", {h1});
      g.output(g.dff(m1, "c"));
    }
  };
  for (int i = 0; i < false_sites; ++i) site("f", i);
  for (int i = 0; i < true_sites; ++i) site("t", i);
  for (int i = 0; i < dup_sites; ++i) site("d", i);

  // traps: a suspicious false path sharing every gate with a critical true path
  for (int i = 0; i < traps; ++i) {
    const auto x = reg("tx");
    const auto s = reg("ts");
    const auto p = g.gate("AND", {x, s});
    const auto qk = chain(g, p, 9.6 - kTcq - 1.1 - 1.2, {});
    g.output(g.dff(g.gate("OR", {qk, s}), "tc"));
  }

  const auto text = g.text(title);
  std::ofstream(out) << text;
  std::cerr << fmt::format("{}: {} gates\n", out, g.gates);
  return 0;
}
