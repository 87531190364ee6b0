#include "tcam/timing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "json.hpp"

namespace tcam {

using json = nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kEps = 1e-9;

bool has(double v) { return !std::isnan(v); }

double fmax_nan(double a, double b) { return has(a) ? (has(b) ? std::max(a, b) : a) : b; }
double fmin_nan(double a, double b) { return has(a) ? (has(b) ? std::min(a, b) : a) : b; }

}  // namespace

// ---- config --------------------------------------------------------------------

void TimingConfig::validate() const {
  if (!(tau > 0 && tau < 1)) throw std::invalid_argument("tau must lie in (0,1)");
  if (!(delta >= 0 && delta < 1)) throw std::invalid_argument("delta must lie in [0,1)");
  if (!(T > t_su + t_h)) throw std::invalid_argument("T must exceed t_su + t_h");
  if (!(alpha >= gamma && gamma >= beta && beta > 0)) throw std::invalid_argument("need alpha >= gamma >= beta > 0");
  if (big_m() < 4 * T) throw std::invalid_argument("M must be at least 4T");
  if (xi_max < 0) throw std::invalid_argument("xi_max must be non-negative");
  if (t_su < 0 || t_h < 0 || t_cq < 0) throw std::invalid_argument("flip-flop times must be non-negative");
  if (n_wpf < 0 || n_wpt < 0) throw std::invalid_argument("targets must be non-negative");
  if (path_sample_limit <= 0) throw std::invalid_argument("path_sample_limit must be positive");
}

#define TCAM_CONFIG_FIELDS(X)                                                                          \
  X(T) X(tau) X(delta) X(t_su) X(t_h) X(t_cq) X(n_wpf) X(n_wpt) X(dis_t) X(path_sample_limit)         \
  X(fanio_threshold) X(xi_max) X(alpha) X(beta) X(gamma) X(warmup_cycles) X(M) X(region_depth)        \
  X(region_gate_cap) X(pair_cap) X(record_cap) X(milp_node_limit) X(milp_time_limit) X(repair_iterations) \
  X(screen_sample_limit) X(sat_decision_limit)

std::string TimingConfig::to_json_text() const {
  json j;
#define X(f) j[#f] = f;
  TCAM_CONFIG_FIELDS(X)
#undef X
  return j.dump(2);
}

TimingConfig TimingConfig::from_json_text(const std::string& text) {
  const json j = json::parse(text);
  TimingConfig c;
  for (const auto& [k, v] : j.items()) {
    bool known = false;
#define X(f)                          \
  if (k == #f) {                      \
    c.f = v.get<decltype(c.f)>();     \
    known = true;                     \
  }
    TCAM_CONFIG_FIELDS(X)
#undef X
    if (!known) throw std::invalid_argument("unknown config key " + k);
  }
  c.validate();
  return c;
}

TimingConfig TimingConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

// ---- lookup mode -------------------------------------------------------------------

double node_load(const Netlist& n, NodeId id) {
  const auto& lib = n.library();
  double load = 0;
  for (const Pin& p : n.fanout(id)) {
    const auto& s = n.node(p.node);
    if (s.kind == NodeKind::Gate) {
      const auto& caps = lib.cell(s.gate).pin_cap;
      load += caps.empty() ? 1.0 : caps[std::min<std::size_t>(static_cast<std::size_t>(s.size_level), caps.size() - 1)];
    } else {
      load += lib.flipflop().d_cap;
    }
    load += lib.wire_cap();
  }
  return load;
}

std::pair<double, double> lookup_stage(const Netlist& n, NodeId gate, int pin, double in_slew, bool* clamped) {
  const auto& g = n.node(gate);
  const auto& cell = n.library().cell(g.gate);
  const double load = node_load(n, gate);
  bool c1 = false, c2 = false;
  const double scale = cell.delay_scale.empty() ? 1.0 : cell.delay_scale.at(in_slew, load, &c1) / cell.delay_scale.typical();
  const double slew = cell.out_slew.empty() ? in_slew : cell.out_slew.at(in_slew, load, &c2);
  if (clamped) *clamped = c1 || c2;
  return {g.xi + g.pin_delays[static_cast<std::size_t>(pin)] * scale, slew};
}

// ---- arrivals ------------------------------------------------------------------------

ArrivalTimes propagate_arrivals(const Netlist& n, const TimingConfig& cfg, DelayMode mode) {
  ArrivalTimes at;
  const std::size_t N = n.size();
  at.late.assign(N, 0.0);
  at.early.assign(N, 0.0);
  at.late_from.assign(N, kNoNode);
  at.early_from.assign(N, kNoNode);
  std::vector<double> slew(N, n.library().flipflop().q_slew);
  for (NodeId id = 0; id < N; ++id)
    if (n.is_ff(id)) at.late[id] = at.early[id] = cfg.t_cq;
  for (NodeId g : n.topo_gates()) {
    const auto& node = n.node(g);
    double late = -std::numeric_limits<double>::infinity();
    double early = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < node.fanin.size(); ++p) {
      const NodeId src = node.fanin[p];
      double d;
      double s = slew[src];
      if (mode == DelayMode::Lookup) {
        std::tie(d, s) = lookup_stage(n, g, static_cast<int>(p), slew[src]);
      } else {
        d = n.stage_delay(g, static_cast<int>(p));
      }
      if (at.late[src] + d > late) {
        late = at.late[src] + d;
        at.late_from[g] = src;
        slew[g] = s;
      }
      if (at.early[src] + d < early) {
        early = at.early[src] + d;
        at.early_from[g] = src;
      }
    }
    at.late[g] = late;
    at.early[g] = early;
  }
  for (NodeId o : n.outputs()) {
    const NodeId d = n.node(o).fanin[0];
    at.late[o] = at.late[d];
    at.early[o] = at.early[d];
    at.late_from[o] = at.early_from[o] = d;
  }
  return at;
}

// ---- paths ------------------------------------------------------------------------------

std::string describe(const Netlist& n, const Path& p) {
  std::string out;
  for (std::size_t k = 0; k < p.nodes.size(); ++k) {
    if (k) out += " -> ";
    out += n.node(p.nodes[k]).name;
  }
  return out;
}

double path_delay(const Netlist& n, const Path& p, DelayMode mode, std::vector<std::string>* warnings) {
  double total = 0;
  double slew = n.library().flipflop().q_slew;
  for (std::size_t k = 1; k < p.nodes.size(); ++k) {
    const NodeId id = p.nodes[k];
    if (!n.is_gate(id)) {
      slew = n.library().flipflop().q_slew;
      continue;
    }
    if (mode == DelayMode::Typical) {
      total += n.stage_delay(id, p.pins[k]);
    } else {
      bool clamped = false;
      auto [d, s] = lookup_stage(n, id, p.pins[k], slew, &clamped);
      if (clamped && warnings) warnings->push_back("lookup operand clamped at " + n.node(id).name);
      total += d;
      slew = s;
    }
  }
  return total;
}

double launch_offset(const Netlist& n, const Path& p, const TimingConfig& cfg) {
  return n.is_ff(p.launch()) ? cfg.t_cq : 0.0;
}

namespace {

bool is_launch(const Netlist& n, NodeId id) {
  const auto k = n.node(id).kind;
  return k == NodeKind::Input || k == NodeKind::FlipFlop;
}

bool is_capture(const Netlist& n, NodeId id) {
  const auto k = n.node(id).kind;
  return k == NodeKind::Output || k == NodeKind::FlipFlop;
}

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b, std::uint64_t cap) { return std::min(cap, a + b); }

// Number of launch-to-node paths (fanin) or node-to-capture paths (fanout) per node.
std::vector<std::uint64_t> path_counts(const Netlist& n, Side side, std::uint64_t cap) {
  std::vector<std::uint64_t> cnt(n.size(), 0);
  auto order = n.topo_gates();
  if (side == Side::Fanin) {
    for (NodeId id = 0; id < n.size(); ++id)
      if (is_launch(n, id)) cnt[id] = 1;
    for (NodeId g : order)
      for (NodeId f : n.node(g).fanin) cnt[g] = sat_add(cnt[g], cnt[f], cap);
  } else {
    for (NodeId id = 0; id < n.size(); ++id)
      if (is_capture(n, id)) cnt[id] = 1;
    std::reverse(order.begin(), order.end());
    for (NodeId g : order)
      for (const Pin& p : n.fanout(g)) cnt[g] = sat_add(cnt[g], cnt[p.node], cap);
  }
  return cnt;
}

}  // namespace

std::uint64_t count_paths(const Netlist& n, NodeId node, Side side, std::uint64_t cap) {
  const auto cnt = path_counts(n, side, cap);
  if (side == Side::Fanin) return n.is_ff(node) || n.node(node).kind == NodeKind::Output ? cnt[n.node(node).fanin[0]] : cnt[node];
  if (n.is_ff(node) || n.node(node).kind == NodeKind::Input) {
    std::uint64_t total = 0;
    for (const Pin& p : n.fanout(node)) total = sat_add(total, cnt[p.node], cap);
    return total;
  }
  return cnt[node];
}

std::vector<Path> sample_paths(const Netlist& n, NodeId ff, Side side, int limit, std::uint64_t seed) {
  std::vector<Path> out;
  if (limit <= 0) return out;
  const std::uint64_t total = count_paths(n, ff, side, static_cast<std::uint64_t>(limit) + 1);

  if (total <= static_cast<std::uint64_t>(limit)) {
    // exhaustive, deterministic DFS order
    Path cur;
    if (side == Side::Fanin) {
      std::function<void(NodeId, int)> back = [&](NodeId id, int pin) {
        cur.nodes.push_back(id);
        cur.pins.push_back(pin);
        if (is_launch(n, id)) {
          Path p;
          p.nodes.assign(cur.nodes.rbegin(), cur.nodes.rend());
          // pins shift: pin recorded is the pin of the node below it
          p.pins.assign(p.nodes.size(), -1);
          for (std::size_t k = 1; k < p.nodes.size(); ++k) p.pins[k] = cur.pins[cur.pins.size() - k];
          out.push_back(std::move(p));
        } else {
          const auto& node = n.node(id);
          for (std::size_t q = 0; q < node.fanin.size(); ++q) back(node.fanin[q], static_cast<int>(q));
        }
        cur.nodes.pop_back();
        cur.pins.pop_back();
      };
      cur.nodes.push_back(ff);
      cur.pins.push_back(-1);
      back(n.node(ff).fanin[0], 0);
    } else {
      std::function<void(NodeId, int)> fwd = [&](NodeId id, int pin) {
        cur.nodes.push_back(id);
        cur.pins.push_back(pin);
        if (cur.nodes.size() > 1 && is_capture(n, id)) {
          out.push_back(cur);
        } else {
          for (const Pin& p : n.fanout(id)) fwd(p.node, p.pin);
        }
        cur.nodes.pop_back();
        cur.pins.pop_back();
      };
      fwd(ff, -1);
    }
    return out;
  }

  std::mt19937_64 rng(seed);
  std::set<Path> seen;
  const long max_attempts = 200L * limit;
  for (long attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < limit; ++attempt) {
    Path p;
    if (side == Side::Fanin) {
      std::vector<NodeId> nodes{ff};
      std::vector<int> pins{0};
      NodeId cur = n.node(ff).fanin[0];
      while (!is_launch(n, cur)) {
        const auto& node = n.node(cur);
        std::uniform_int_distribution<std::size_t> pick(0, node.fanin.size() - 1);
        const std::size_t q = pick(rng);
        nodes.push_back(cur);
        pins.push_back(static_cast<int>(q));
        cur = node.fanin[q];
      }
      nodes.push_back(cur);
      p.nodes.assign(nodes.rbegin(), nodes.rend());
      p.pins.assign(p.nodes.size(), -1);
      for (std::size_t k = 1; k < p.nodes.size(); ++k) p.pins[k] = pins[pins.size() - k];
    } else {
      p.nodes.push_back(ff);
      p.pins.push_back(-1);
      NodeId cur = ff;
      do {
        const auto& fo = n.fanout(cur);
        if (fo.empty()) break;
        std::uniform_int_distribution<std::size_t> pick(0, fo.size() - 1);
        const Pin next = fo[pick(rng)];
        p.nodes.push_back(next.node);
        p.pins.push_back(next.pin);
        cur = next.node;
      } while (!is_capture(n, cur));
      if (!is_capture(n, p.capture()) || p.nodes.size() < 2) continue;
    }
    if (seen.insert(p).second) out.push_back(std::move(p));
  }
  return out;
}

// ---- classification ---------------------------------------------------------------------

Gray classify_gray(double d, const TimingConfig& cfg) {
  if ((1 + cfg.tau) * d < cfg.T) return Gray::DefinitelySingle;
  if ((1 - cfg.tau) * d > cfg.T) return Gray::DefinitelyWp;
  return Gray::Suspicious;
}

std::string_view to_string(Gray g) {
  switch (g) {
    case Gray::DefinitelySingle: return "definitely_single";
    case Gray::DefinitelyWp: return "definitely_wp";
    case Gray::Suspicious: return "suspicious";
  }
  return "?";
}

WindowReport check_wp_window(double dmin, double dmax, const TimingConfig& cfg) {
  WindowReport r;
  r.short_slack = (1 - cfg.delta) * dmin - (cfg.T + cfg.t_h);
  r.long_slack = (2 * cfg.T - cfg.t_su) - (1 + cfg.delta) * dmax;
  r.ok = r.short_slack >= 0 && r.long_slack >= 0;
  return r;
}

bool wave_capture_ok(double wearly, double wlate, const TimingConfig& cfg, std::string* why) {
  const auto w = check_wp_window(wearly, wlate, cfg);
  const auto fail = [&](const std::string& s) {
    if (why) *why = s;
    return false;
  };
  if (w.short_slack < -kEps) return fail(fmt::format("two-wave short path {:.4f}", wearly));
  if (w.long_slack < -kEps) return fail(fmt::format("two-wave long path {:.4f}", wlate));
  if ((1 - cfg.tau) * (wlate + cfg.t_su) > cfg.T + kEps) return fail(fmt::format("above gray region {:.4f}", wlate));
  if ((1 + cfg.tau) * wearly < cfg.T - kEps) return fail(fmt::format("below gray region {:.4f}", wearly));
  return true;
}

// ---- two-wave analysis -------------------------------------------------------------------

WaveArrivals wave_arrivals(const Netlist& n, const std::vector<WaveCut>& cuts, const TimingConfig& cfg, DelayMode mode) {
  const std::size_t N = n.size();
  WaveArrivals a;
  a.late.assign(N, kNaN);
  a.early.assign(N, kNaN);
  a.wlate.assign(N, kNaN);
  a.wearly.assign(N, kNaN);
  a.slew.assign(N, n.library().flipflop().q_slew);
  std::set<std::pair<NodeId, int>> cut_pins;
  for (const auto& c : cuts) {
    const NodeId s = n.at(c.sink);
    if (!n.is_gate(s)) throw NetlistError("cut on non-gate pin " + c.sink);
    if (c.pin < 0 || static_cast<std::size_t>(c.pin) >= n.node(s).fanin.size())
      throw NetlistError("cut pin out of range on " + c.sink);
    cut_pins.insert({s, c.pin});
  }
  for (NodeId id = 0; id < N; ++id) {
    if (n.node(id).kind == NodeKind::Input) a.late[id] = a.early[id] = 0.0;
    if (n.is_ff(id)) a.late[id] = a.early[id] = cfg.t_cq;
  }
  for (NodeId g : n.topo_gates()) {
    const auto& node = n.node(g);
    double best_late = -1;
    for (std::size_t p = 0; p < node.fanin.size(); ++p) {
      const NodeId src = node.fanin[p];
      double d, s = a.slew[src];
      if (mode == DelayMode::Lookup) {
        std::tie(d, s) = lookup_stage(n, g, static_cast<int>(p), a.slew[src]);
      } else {
        d = n.stage_delay(g, static_cast<int>(p));
      }
      if (cut_pins.count({g, static_cast<int>(p)})) {
        if (has(a.wlate[src]))
          throw NetlistError(fmt::format("path crosses two cuts at {} pin {}", node.name, p));
        if (has(a.late[src])) {
          a.wlate[g] = fmax_nan(a.wlate[g], a.late[src] + d);
          a.wearly[g] = fmin_nan(a.wearly[g], a.early[src] + d);
        }
      } else {
        if (has(a.late[src])) {
          if (a.late[src] + d > best_late) {
            best_late = a.late[src] + d;
            a.slew[g] = s;
          }
          a.late[g] = fmax_nan(a.late[g], a.late[src] + d);
          a.early[g] = fmin_nan(a.early[g], a.early[src] + d);
        }
        if (has(a.wlate[src])) {
          a.wlate[g] = fmax_nan(a.wlate[g], a.wlate[src] + d);
          a.wearly[g] = fmin_nan(a.wearly[g], a.wearly[src] + d);
        }
      }
    }
  }
  for (NodeId o : n.outputs()) {
    const NodeId d = n.node(o).fanin[0];
    a.late[o] = a.late[d];
    a.early[o] = a.early[d];
    a.wlate[o] = a.wlate[d];
    a.wearly[o] = a.wearly[d];
  }
  return a;
}

NodeId capture_driver(const Netlist& n, NodeId capture) { return n.node(capture).fanin.at(0); }

std::vector<CaptureViolation> check_captures(const Netlist& n, const std::vector<WaveCut>& cuts, const TimingConfig& cfg,
                                             DelayMode mode) {
  const auto a = wave_arrivals(n, cuts, cfg, mode);
  std::vector<CaptureViolation> out;
  for (NodeId c = 0; c < n.size(); ++c) {
    if (!is_capture(n, c)) continue;
    const NodeId d = capture_driver(n, c);
    if (has(a.late[d])) {
      const double setup = cfg.T - cfg.t_su - a.late[d];
      const double hold = a.early[d] - cfg.t_h;
      if (setup < -kEps) out.push_back({c, "setup", setup});
      if (hold < -kEps) out.push_back({c, "hold", hold});
    }
    if (has(a.wlate[d]) && n.node(c).kind == NodeKind::Output) {
      out.push_back({c, "two-wave arrival at output", 0.0});
    } else if (has(a.wlate[d])) {
      std::string why;
      if (!wave_capture_ok(a.wearly[d], a.wlate[d], cfg, &why)) {
        const auto w = check_wp_window(a.wearly[d], a.wlate[d], cfg);
        out.push_back({c, why, std::min(w.short_slack, w.long_slack)});
      }
    }
  }
  return out;
}

}  // namespace tcam
