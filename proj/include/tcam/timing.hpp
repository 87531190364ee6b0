// Static timing: arrivals, paths, sampling, gray-region and two-wave window checks.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tcam/netlist.hpp"

namespace tcam {

struct TimingConfig {
  double T = 10.0;
  double tau = 0.2;
  double delta = 0.15;
  double t_su = 0.1;
  double t_h = 0.05;
  double t_cq = 0.2;
  int n_wpf = 3;
  int n_wpt = 3;
  double dis_t = -1.0;  // < 0: 10x the minimum flip-flop distance
  int path_sample_limit = 500;
  int fanio_threshold = 30;
  double xi_max = 3.0;
  double alpha = 1.0;
  double beta = 0.1;
  double gamma = 0.5;
  int warmup_cycles = 2;
  double M = 0.0;  // <= 0: derived from T

  // construction knobs
  int region_depth = 6;
  int region_gate_cap = 40;
  int pair_cap = 8;
  int record_cap = 16;
  long milp_node_limit = 20000;
  double milp_time_limit = 20.0;
  int repair_iterations = 6;
  int screen_sample_limit = 200;
  long sat_decision_limit = 1000000;

  double big_m() const { return M > 0 ? M : 8.0 * T; }
  /// Throws std::invalid_argument on a violated invariant.
  void validate() const;
  std::string to_json_text() const;
  static TimingConfig from_json_text(const std::string& text);
  static TimingConfig load(const std::string& path);
};

enum class DelayMode { Typical, Lookup };

/// Arrival bounds at node outputs. Inputs seed 0, flip-flop Q outputs seed t_cq.
/// For Output nodes the value is the arrival at the port.
struct ArrivalTimes {
  std::vector<double> late;
  std::vector<double> early;
  std::vector<NodeId> late_from;  // fan-in realizing the bound, kNoNode at sources
  std::vector<NodeId> early_from;
};

ArrivalTimes propagate_arrivals(const Netlist& n, const TimingConfig& cfg, DelayMode mode = DelayMode::Typical);

/// Launch (flip-flop or input), gates, capture (flip-flop or output). Intermediate
/// flip-flops are allowed for weight bookkeeping; pins[k] is the pin of nodes[k]
/// the path enters through (-1 for the launch).
struct Path {
  std::vector<NodeId> nodes;
  std::vector<int> pins;

  NodeId launch() const { return nodes.front(); }
  NodeId capture() const { return nodes.back(); }
  bool operator==(const Path&) const = default;
  bool operator<(const Path& o) const { return nodes != o.nodes ? nodes < o.nodes : pins < o.pins; }
};

std::string describe(const Netlist& n, const Path& p);

/// Sum of stage delays over the gates of p (no launch offset). Lookup mode chains
/// slews from the launch; out-of-table operands are clamped and reported.
double path_delay(const Netlist& n, const Path& p, DelayMode mode = DelayMode::Typical,
                  std::vector<std::string>* warnings = nullptr);
/// t_cq for a flip-flop launch, 0 for an input.
double launch_offset(const Netlist& n, const Path& p, const TimingConfig& cfg);

/// Lookup-mode stage: returns {delay, output slew} of gate through pin.
std::pair<double, double> lookup_stage(const Netlist& n, NodeId gate, int pin, double in_slew, bool* clamped = nullptr);
double node_load(const Netlist& n, NodeId id);

enum class Side { Fanin, Fanout };

std::vector<Path> sample_paths(const Netlist& n, NodeId ff, Side side, int limit, std::uint64_t seed);

/// Number of structural launch-to-capture paths through comb logic ending at
/// (fanin) or starting from (fanout) node, saturating at cap.
std::uint64_t count_paths(const Netlist& n, NodeId node, Side side, std::uint64_t cap);

enum class Gray { DefinitelySingle, DefinitelyWp, Suspicious };
Gray classify_gray(double d, const TimingConfig& cfg);
std::string_view to_string(Gray g);

struct WindowReport {
  bool ok;
  double short_slack;  // (1-delta) dmin - (T + t_h)
  double long_slack;   // (2T - t_su) - (1+delta) dmax
};
WindowReport check_wp_window(double dmin, double dmax, const TimingConfig& cfg);

// ---- two-wave analysis -------------------------------------------------------

/// A flip-flop-free connection (pin of sink) at which the wave count increments.
struct WaveCut {
  std::string sink;
  int pin;
  bool operator==(const WaveCut&) const = default;
  auto operator<=>(const WaveCut&) const = default;
};

/// Arrival bounds in the single-period frame (from launches one edge back) and
/// in the two-wave frame (launches two edges back, through exactly one cut).
/// Missing frames hold NaN.
struct WaveArrivals {
  std::vector<double> late, early;
  std::vector<double> wlate, wearly;
  std::vector<double> slew;
};

WaveArrivals wave_arrivals(const Netlist& n, const std::vector<WaveCut>& cuts, const TimingConfig& cfg,
                           DelayMode mode = DelayMode::Typical);

struct CaptureViolation {
  NodeId capture;  // flip-flop or output
  std::string what;
  double slack;
};

/// Checks every capture point: single-frame setup/hold, two-wave window with PVT
/// margin and the gray-region bounds on two-wave arrivals. Throws NetlistError if
/// a path would cross two cuts.
std::vector<CaptureViolation> check_captures(const Netlist& n, const std::vector<WaveCut>& cuts,
                                             const TimingConfig& cfg, DelayMode mode = DelayMode::Typical);

/// Driver of a capture point's data pin.
NodeId capture_driver(const Netlist& n, NodeId capture);

/// True if arrivals at this two-wave capture satisfy window and gray bounds.
bool wave_capture_ok(double wearly, double wlate, const TimingConfig& cfg, std::string* why = nullptr);

}  // namespace tcam
