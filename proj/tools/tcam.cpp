// Command-line front end: camouflage, verify, simulate, attack, report.
#include <chrono>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "tcam/attacks.hpp"
#include "tcam/simulate.hpp"
#include "tcam/workflow.hpp"

using namespace tcam;
using json = nlohmann::ordered_json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void dump(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

struct Inputs {
  std::string bench, delays, config, annotations;
};

void add_inputs(CLI::App* app, Inputs& in, bool annotations = true) {
  app->add_option("--bench", in.bench, "netlist in .bench format")->required()->check(CLI::ExistingFile);
  app->add_option("--delays", in.delays, "delay library (JSON)")->check(CLI::ExistingFile);
  app->add_option("--config", in.config, "timing config (JSON)")->check(CLI::ExistingFile);
  if (annotations)
    app->add_option("--annotations", in.annotations, "size and inserted-delay sidecar")->check(CLI::ExistingFile);
}

TimingConfig load_config(const Inputs& in) {
  TimingConfig cfg = in.config.empty() ? TimingConfig{} : TimingConfig::load(in.config);
  cfg.validate();
  return cfg;
}

std::shared_ptr<const DelayLibrary> load_library(const Inputs& in) {
  return std::make_shared<DelayLibrary>(in.delays.empty() ? DelayLibrary::builtin() : DelayLibrary::load(in.delays));
}

Netlist load_netlist(const Inputs& in, std::shared_ptr<const DelayLibrary> lib) {
  Netlist n = load_bench(in.bench, lib);
  if (!in.annotations.empty()) apply_annotations(n, slurp(in.annotations));
  return n;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Timing camouflage with wave-pipelining paths"};
  app.require_subcommand(1);

  Inputs cam_in;
  std::string placement, out_bench, out_annot, out_report, out_truth;
  std::uint64_t seed = 1;
  bool with_runtime = false;
  int eq_cycles = 300;
  auto* cam = app.add_subcommand("camouflage", "construct wave-pipelining true and false paths");
  add_inputs(cam, cam_in, false);
  cam->add_option("--placement", placement, "flip-flop placement CSV (name,x,y)")->check(CLI::ExistingFile);
  cam->add_option("--seed", seed, "random seed");
  cam->add_option("--out", out_bench, "camouflaged netlist")->required();
  cam->add_option("--annotations", out_annot, "sizes and inserted delays (default: <out>.annot.json)");
  cam->add_option("--report", out_report, "metrics report")->required();
  cam->add_option("--ground-truth", out_truth, "constructed paths (secret)")->required();
  cam->add_option("--equivalence-cycles", eq_cycles, "cycles per trial in the per-site simulation check");
  cam->add_flag("--runtime", with_runtime, "include wall-clock runtime in the report");

  Inputs ver_in;
  std::string ver_truth, ver_original;
  int ver_cycles = 2000, ver_trials = 4;
  auto* ver = app.add_subcommand("verify", "check timing of a camouflaged netlist and its records");
  add_inputs(ver, ver_in);
  ver->add_option("--ground-truth", ver_truth, "records and cuts")->required()->check(CLI::ExistingFile);
  ver->add_option("--original", ver_original, "original netlist for an equivalence check")->check(CLI::ExistingFile);
  ver->add_option("--cycles", ver_cycles);
  ver->add_option("--trials", ver_trials);
  ver->add_option("--seed", seed);

  Inputs sim_in;
  std::string sim_compare;
  int sim_cycles = 100;
  int sim_trials = 1;
  auto* sim = app.add_subcommand("simulate", "event-driven simulation with random inputs");
  add_inputs(sim, sim_in);
  sim->add_option("--cycles", sim_cycles);
  sim->add_option("--trials", sim_trials);
  sim->add_option("--seed", seed);
  sim->add_option("--compare", sim_compare, "reference netlist (.bench); runs an equivalence check")
      ->check(CLI::ExistingFile);

  Inputs att_in;
  std::string att_truth;
  int att_limit = 50;
  auto* att = app.add_subcommand("attack", "gray-region screening and sizing attack");
  add_inputs(att, att_in);
  att->add_option("--ground-truth", att_truth, "records and cuts")->check(CLI::ExistingFile);
  att->add_option("--seed", seed);
  att->add_option("--limit", att_limit, "false paths to attack");

  Inputs rep_in;
  std::string rep_truth, rep_original;
  auto* rep = app.add_subcommand("report", "metrics of a camouflaged netlist");
  add_inputs(rep, rep_in);
  rep->add_option("--ground-truth", rep_truth, "records and cuts")->required()->check(CLI::ExistingFile);
  rep->add_option("--original", rep_original, "original netlist")->required()->check(CLI::ExistingFile);
  rep->add_option("--seed", seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cam) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto cfg = load_config(cam_in);
      const auto lib = load_library(cam_in);
      const Netlist n = load_netlist(cam_in, lib);
      Placement pl;
      if (!placement.empty()) {
        std::ifstream pin(placement);
        pl = parse_placement_csv(pin);
      }
      auto res = construct(n, cfg, seed, placement.empty() ? nullptr : &pl, eq_cycles);
      const auto m = report(res.state, n, res.netlist, cfg, seed);
      const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      dump(out_bench, write_bench(res.netlist));
      dump(out_annot.empty() ? out_bench + ".annot.json" : out_annot, write_annotations(res.netlist));
      dump(out_report, metrics_to_json(m, with_runtime ? runtime : -1));
      dump(out_truth, ground_truth_json(res.state.records, res.state.cuts));
      for (const auto& s : res.state.sites)
        std::cerr << fmt::format("{} {} {}{}\n", s.false_phase ? "false" : "true", s.ff,
                                 s.ok ? s.method : "skipped", s.ok ? fmt::format(" ({} wpt, {} wpf)", s.n_wpt, s.n_wpf)
                                                                   : ": " + s.why);
      std::cerr << fmt::format("n_wpt {} n_wpf {} n_d {} n_r {} n_p {:.3f} in {:.2f}s\n", m.n_wpt, m.n_wpf, m.n_d,
                               m.n_r, m.n_p, runtime);
      return 0;
    }
    if (*ver) {
      const auto cfg = load_config(ver_in);
      const auto lib = load_library(ver_in);
      Netlist n = load_netlist(ver_in, lib);
      std::vector<WpRecord> records;
      std::vector<WaveCut> cuts;
      ground_truth_from_json(slurp(ver_truth), records, cuts);
      json j;
      bool ok = true;
      for (const auto mode : {DelayMode::Typical, DelayMode::Lookup}) {
        json arr = json::array();
        for (const auto& v : check_captures(n, cuts, cfg, mode))
          arr.push_back({{"capture", n.node(v.capture).name}, {"what", v.what}, {"slack", v.slack}});
        ok = ok && arr.empty();
        j[mode == DelayMode::Typical ? "typical_violations" : "lookup_violations"] = arr;
      }
      const auto before = records.size();
      refresh_records(n, cuts, cfg, records);
      int bad = 0;
      for (const auto& r : records)
        if (!check_wp_window(r.dmin, r.dmax, cfg).ok || r.gray != Gray::Suspicious) ++bad;
      j["records"] = {{"listed", before}, {"resolved", records.size()}, {"failing", bad}};
      ok = ok && bad == 0 && records.size() == before;
      if (!ver_original.empty()) {
        const Netlist o = load_bench(ver_original, lib);
        const auto eq = equivalence_check(o, n, ver_cycles, ver_trials, seed, cfg.warmup_cycles, cfg);
        j["equivalence"] = {{"equivalent", eq.equivalent}, {"violations", eq.violations}, {"detail", eq.detail}};
        ok = ok && eq.equivalent;
      }
      j["ok"] = ok;
      std::cout << j.dump(2) << "\n";
      return ok ? 0 : 1;
    }
    if (*sim) {
      const auto cfg = load_config(sim_in);
      const auto lib = load_library(sim_in);
      const Netlist n = load_netlist(sim_in, lib);
      if (!sim_compare.empty()) {
        const Netlist ref = load_bench(sim_compare, lib);
        const auto eq = equivalence_check(ref, n, sim_cycles, sim_trials, seed, cfg.warmup_cycles, cfg);
        std::cout << json{{"equivalent", eq.equivalent},
                          {"trial", eq.trial},
                          {"cycle", eq.cycle},
                          {"output", eq.output},
                          {"violations", eq.violations},
                          {"detail", eq.detail}}
                         .dump(2)
                  << "\n";
        return eq.equivalent ? 0 : 1;
      }
      const auto tr = simulate(n, random_inputs(n, sim_cycles, seed), cfg, reset_state(n));
      for (const auto& row : tr.outputs) {
        for (bool b : row) std::cout << (b ? '1' : '0');
        std::cout << "\n";
      }
      for (const auto& v : tr.violations)
        std::cerr << fmt::format("cycle {} {} {} slack {:.4f}\n", v.cycle, n.node(v.flipflop).name,
                                 v.setup ? "setup" : "hold", v.slack);
      return 0;
    }
    if (*att) {
      const auto cfg = load_config(att_in);
      const auto lib = load_library(att_in);
      const Netlist n = load_netlist(att_in, lib);
      std::vector<WpRecord> records;
      std::vector<WaveCut> cuts;
      if (!att_truth.empty()) ground_truth_from_json(slurp(att_truth), records, cuts);
      refresh_records(n, cuts, cfg, records);
      auto r = screen(n, cuts, records, cfg, seed);
      std::vector<Path> fps, tps;
      attack_sample(n, cuts, cfg, seed, att_limit, fps, tps);
      const auto s = sizing_attack(n, fps, tps, cfg, seed);
      r.attempted = s.attempted;
      r.failed = s.failed;
      r.outcomes = s.outcomes;
      r.sized_checked = s.sized_checked;
      r.sized_equivalent = s.sized_equivalent;
      r.sized_violations = s.sized_violations;
      std::cout << attack_to_json(r);
      return 0;
    }
    if (*rep) {
      const auto cfg = load_config(rep_in);
      const auto lib = load_library(rep_in);
      const Netlist n = load_netlist(rep_in, lib);
      const Netlist o = load_bench(rep_original, lib);
      ConstructionState st;
      ground_truth_from_json(slurp(rep_truth), st.records, st.cuts);
      refresh_records(n, st.cuts, cfg, st.records);
      for (NodeId g : n.gates())
        if (!o.find(n.node(g).name)) ++st.n_d;
      auto m = report(st, o, n, cfg, seed);
      // the retimed flag and site outcomes do not survive the file round trip
      m.n_r = 0;
      for (NodeId f : n.flipflops())
        if (!o.find(n.node(f).name)) ++m.n_r;
      std::set<std::pair<std::string, WpMethod>> sites;
      for (const auto& r : st.records) sites.insert({r.site, r.method});
      for (const auto& [site, method] : sites) (method == WpMethod::Duplication ? m.duplication_sites : m.removal_sites)++;
      std::cout << metrics_to_json(m);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
