// Gate-level sequential netlist: data model, .bench I/O and structural queries.
#pragma once

#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tcam {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

enum class GateKind { And, Nand, Or, Nor, Not, Buf, Xor, Xnor };
enum class NodeKind { Input, Output, Gate, FlipFlop };

std::string_view to_string(GateKind kind);
std::optional<GateKind> gate_kind_from_string(std::string_view text);

/// Boolean function of a gate over its input values.
bool evaluate(GateKind kind, const std::vector<bool>& inputs);

/// Controlling input value, if the gate has one (0 for AND/NAND, 1 for OR/NOR).
std::optional<bool> controlling_value(GateKind kind);

class NetlistError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ParseError : public NetlistError {
public:
  ParseError(int line, const std::string& what);
  int line() const { return line_; }

private:
  int line_;
};

/// 2-D delay/slew lookup table, indexed by input slew (rows) and output load (columns).
struct LookupTable {
  std::vector<double> slew_index;
  std::vector<double> load_index;
  std::vector<std::vector<double>> values;

  bool empty() const { return values.empty(); }
  /// Bilinear interpolation; out-of-range operands are clamped and flagged.
  double at(double slew, double load, bool* clamped = nullptr) const;
  double typical() const;
};

struct CellTiming {
  std::vector<std::vector<double>> pin_delay_rows;  // [size_level][pin]
  LookupTable delay_scale;  // lookup-mode delay relative to the typical point
  LookupTable out_slew;
  std::vector<double> pin_cap;  // per size level
};

struct FlipFlopTiming {
  double t_su = 0.1;
  double t_h = 0.05;
  double t_cq = 0.2;
  double q_slew = 0.05;
  double d_cap = 1.0;
};

/// Delay annotation sidecar: per-kind pin delays by size level plus optional
/// per-instance overrides and slew/load tables for lookup-mode verification.
class DelayLibrary {
public:
  static DelayLibrary builtin();
  static DelayLibrary from_json_text(const std::string& text);
  static DelayLibrary load(const std::string& path);
  std::string to_json_text() const;

  int size_levels(GateKind kind) const;
  double pin_delay(GateKind kind, int size_level, int pin) const;
  std::optional<std::vector<std::vector<double>>> instance_override(const std::string& name) const;
  const CellTiming& cell(GateKind kind) const;
  const FlipFlopTiming& flipflop() const { return ff_; }
  double buffer_delay() const;
  double wire_cap() const { return wire_cap_; }

  void set_cell(GateKind kind, CellTiming timing) { cells_[kind] = std::move(timing); }
  void set_override(const std::string& instance, std::vector<std::vector<double>> rows) {
    overrides_[instance] = std::move(rows);
  }
  void set_flipflop(FlipFlopTiming ff) { ff_ = ff; }

private:
  std::map<GateKind, CellTiming> cells_;
  std::map<std::string, std::vector<std::vector<double>>> overrides_;
  FlipFlopTiming ff_;
  double wire_cap_ = 0.2;
};

struct Node {
  std::string name;
  NodeKind kind = NodeKind::Gate;
  GateKind gate = GateKind::Buf;
  /// Gate: input pins in order. FlipFlop: {D driver}. Output: {driver}.
  std::vector<NodeId> fanin;
  std::vector<double> pin_delays;
  int size_level = 0;
  double xi = 0.0;
  bool is_retimed = false;
};

struct Pin {
  NodeId node;
  int pin;
  auto operator<=>(const Pin&) const = default;
};

class Netlist {
public:
  Netlist() : library_(std::make_shared<DelayLibrary>(DelayLibrary::builtin())) {}
  explicit Netlist(std::shared_ptr<const DelayLibrary> library) : library_(std::move(library)) {}

  std::string name;

  NodeId add_input(const std::string& name);
  NodeId add_output(const std::string& name, NodeId driver);
  NodeId add_gate(const std::string& name, GateKind kind, std::vector<NodeId> fanin, int size_level = 0);
  NodeId add_flipflop(const std::string& name, NodeId d_driver, bool is_retimed = false);

  /// Placeholder for forward references while parsing; must be resolved by define_*.
  NodeId declare(const std::string& name);
  void define_gate(NodeId id, GateKind kind, std::vector<NodeId> fanin, int size_level = 0);
  void define_flipflop(NodeId id, NodeId d_driver);

  void set_driver(Pin pin, NodeId driver);
  void set_size(NodeId gate, int level);
  void set_xi(NodeId gate, double xi);
  void rename(NodeId id, const std::string& name);

  /// Removes nodes; every remaining reference to them must already be gone.
  void erase(const std::vector<NodeId>& ids);

  const Node& node(NodeId id) const { return nodes_.at(id); }
  std::size_t size() const { return nodes_.size(); }
  std::optional<NodeId> find(std::string_view name) const;
  NodeId at(std::string_view name) const;

  std::vector<NodeId> inputs() const { return of_kind(NodeKind::Input); }
  std::vector<NodeId> outputs() const { return of_kind(NodeKind::Output); }
  std::vector<NodeId> gates() const { return of_kind(NodeKind::Gate); }
  std::vector<NodeId> flipflops() const { return of_kind(NodeKind::FlipFlop); }
  std::size_t gate_count() const { return gates().size(); }
  std::size_t flipflop_count() const { return flipflops().size(); }

  bool is_gate(NodeId id) const { return nodes_[id].kind == NodeKind::Gate; }
  bool is_ff(NodeId id) const { return nodes_[id].kind == NodeKind::FlipFlop; }

  const std::vector<Pin>& fanout(NodeId id) const;
  /// Gates in topological order of the combinational subgraph; throws on a cycle.
  std::vector<NodeId> topo_gates() const;

  /// Checks structural invariants; throws NetlistError on violation.
  void validate() const;

  const DelayLibrary& library() const { return *library_; }
  std::shared_ptr<const DelayLibrary> library_ptr() const { return library_; }
  void set_library(std::shared_ptr<const DelayLibrary> library);

  /// Size levels available to a gate and the pin delay each would give.
  int size_levels(NodeId gate) const;
  double level_delay(NodeId gate, int level, int pin) const;

  /// Pin delay plus inserted interconnect delay, typical mode.
  double stage_delay(NodeId gate, int pin) const { return nodes_[gate].xi + nodes_[gate].pin_delays[pin]; }

private:
  std::vector<NodeId> of_kind(NodeKind kind) const;
  void refresh_delays(NodeId id);
  void invalidate() { fanout_valid_ = false; }

  std::vector<Node> nodes_;
  std::unordered_map<std::string, NodeId> index_;
  std::shared_ptr<const DelayLibrary> library_;
  mutable std::vector<std::vector<Pin>> fanout_;
  mutable bool fanout_valid_ = false;
};

Netlist parse_bench(std::istream& text, std::shared_ptr<const DelayLibrary> library);
Netlist parse_bench_string(const std::string& text, std::shared_ptr<const DelayLibrary> library = nullptr);
Netlist load_bench(const std::string& path, std::shared_ptr<const DelayLibrary> library = nullptr);
std::string write_bench(const Netlist& n);

/// Sizes and inserted delays are not part of .bench; they travel in this sidecar.
std::string write_annotations(const Netlist& n);
void apply_annotations(Netlist& n, const std::string& json_text);

// ---- weight view ---------------------------------------------------------

/// A connection between combinational nodes (inputs, gates, outputs) with the
/// number of flip-flops traversed on the way.
struct WeightedEdge {
  NodeId source;  // Input or Gate
  NodeId sink;    // Gate or Output
  int pin;
  int weight;
  std::vector<NodeId> flipflops;  // source -> sink order
};

struct WeightView {
  std::vector<WeightedEdge> edges;
  std::vector<std::vector<std::size_t>> in_edges;   // by node id
  std::vector<std::vector<std::size_t>> out_edges;  // by node id
  std::vector<NodeId> dangling_flipflops;           // drive nothing combinational
  int total_weight() const;
};

WeightView weight_view(const Netlist& n);
/// Walks back through flip-flops; returns the combinational driver and the depth.
std::pair<NodeId, int> comb_driver(const Netlist& n, NodeId node);

// ---- sequential structure ------------------------------------------------

struct SequentialGraph {
  std::vector<NodeId> flipflops;
  std::map<NodeId, std::size_t> index;
  std::vector<std::vector<std::size_t>> succ;  // ff_a -> ff_b via combinational path
  std::vector<std::vector<std::size_t>> pred;
  std::size_t in_degree(NodeId ff) const { return pred[index.at(ff)].size(); }
  std::size_t out_degree(NodeId ff) const { return succ[index.at(ff)].size(); }
  bool has_edge(NodeId a, NodeId b) const;
};

SequentialGraph sequential_adjacency(const Netlist& n);

using Placement = std::map<std::string, std::pair<double, double>>;
Placement parse_placement_csv(std::istream& in);

double ff_distance(const Netlist& n, const SequentialGraph& g, NodeId a, NodeId b,
                   const Placement* placement = nullptr);

}  // namespace tcam
