#include "tcam/netlist.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include "json.hpp"

namespace tcam {

using json = nlohmann::json;

namespace {

const std::pair<GateKind, std::string_view> kGateNames[] = {
    {GateKind::And, "AND"}, {GateKind::Nand, "NAND"}, {GateKind::Or, "OR"},   {GateKind::Nor, "NOR"},
    {GateKind::Not, "NOT"}, {GateKind::Buf, "BUFF"},  {GateKind::Xor, "XOR"}, {GateKind::Xnor, "XNOR"},
};

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

double interp1(const std::vector<double>& idx, double x, std::size_t& lo, bool& clamped) {
  if (idx.size() == 1) {
    lo = 0;
    return 0.0;
  }
  if (x < idx.front()) {
    clamped = true;
    x = idx.front();
  } else if (x > idx.back()) {
    clamped = true;
    x = idx.back();
  }
  lo = 0;
  while (lo + 2 < idx.size() && x > idx[lo + 1]) ++lo;
  return (x - idx[lo]) / (idx[lo + 1] - idx[lo]);
}

LookupTable table_from_json(const json& j, const char* key) {
  LookupTable t;
  t.slew_index = j.at("slew").get<std::vector<double>>();
  t.load_index = j.at("load").get<std::vector<double>>();
  t.values = j.at(key).get<std::vector<std::vector<double>>>();
  if (t.values.size() != t.slew_index.size()) throw NetlistError("lookup table row count mismatch");
  for (const auto& row : t.values)
    if (row.size() != t.load_index.size()) throw NetlistError("lookup table column count mismatch");
  return t;
}

}  // namespace

std::string_view to_string(GateKind kind) {
  for (const auto& [k, n] : kGateNames)
    if (k == kind) return n;
  return "?";
}

std::optional<GateKind> gate_kind_from_string(std::string_view text) {
  const std::string u = upper(text);
  if (u == "BUF") return GateKind::Buf;
  if (u == "INV") return GateKind::Not;
  for (const auto& [k, n] : kGateNames)
    if (u == n) return k;
  return std::nullopt;
}

bool evaluate(GateKind kind, const std::vector<bool>& in) {
  switch (kind) {
    case GateKind::And:
    case GateKind::Nand: {
      bool v = std::all_of(in.begin(), in.end(), [](bool b) { return b; });
      return kind == GateKind::And ? v : !v;
    }
    case GateKind::Or:
    case GateKind::Nor: {
      bool v = std::any_of(in.begin(), in.end(), [](bool b) { return b; });
      return kind == GateKind::Or ? v : !v;
    }
    case GateKind::Xor:
    case GateKind::Xnor: {
      bool v = false;
      for (bool b : in) v ^= b;
      return kind == GateKind::Xor ? v : !v;
    }
    case GateKind::Not: return !in.at(0);
    case GateKind::Buf: return in.at(0);
  }
  return false;
}

std::optional<bool> controlling_value(GateKind kind) {
  switch (kind) {
    case GateKind::And:
    case GateKind::Nand: return false;
    case GateKind::Or:
    case GateKind::Nor: return true;
    default: return std::nullopt;
  }
}

ParseError::ParseError(int line, const std::string& what)
    : NetlistError(fmt::format("line {}: {}", line, what)), line_(line) {}

// ---- lookup tables ---------------------------------------------------------

double LookupTable::at(double slew, double load, bool* clamped) const {
  if (values.empty()) return 1.0;
  bool c = false;
  std::size_t i = 0, j = 0;
  const double fs = interp1(slew_index, slew, i, c);
  const double fl = interp1(load_index, load, j, c);
  if (clamped) *clamped = c;
  const auto v = [&](std::size_t a, std::size_t b) {
    return values[std::min(a, values.size() - 1)][std::min(b, values[0].size() - 1)];
  };
  const double top = v(i, j) * (1 - fl) + v(i, j + 1) * fl;
  const double bot = v(i + 1, j) * (1 - fl) + v(i + 1, j + 1) * fl;
  return top * (1 - fs) + bot * fs;
}

double LookupTable::typical() const {
  if (values.empty()) return 1.0;
  const double s = 0.5 * (slew_index.front() + slew_index.back());
  const double l = 0.5 * (load_index.front() + load_index.back());
  return at(s, l);
}

// ---- delay library ---------------------------------------------------------

DelayLibrary DelayLibrary::builtin() {
  DelayLibrary lib;
  LookupTable scale;
  scale.slew_index = {0.02, 0.20};
  scale.load_index = {0.5, 4.0};
  scale.values = {{0.99, 1.004}, {0.996, 1.01}};
  LookupTable slew;
  slew.slew_index = scale.slew_index;
  slew.load_index = scale.load_index;
  slew.values = {{0.04, 0.14}, {0.08, 0.18}};
  const auto cell = [&](std::vector<std::vector<double>> rows) {
    CellTiming c;
    c.pin_delay_rows = std::move(rows);
    c.delay_scale = scale;
    c.out_slew = slew;
    c.pin_cap = {1.0, 0.7};
    return c;
  };
  lib.cells_[GateKind::Buf] = cell({{1.0}, {1.3}});
  lib.cells_[GateKind::Not] = cell({{0.6}, {0.8}});
  lib.cells_[GateKind::And] = cell({{1.0, 1.1, 1.2, 1.3}, {1.3, 1.4, 1.55, 1.7}});
  lib.cells_[GateKind::Nand] = cell({{0.8, 0.9, 1.0, 1.1}, {1.05, 1.15, 1.3, 1.45}});
  lib.cells_[GateKind::Or] = cell({{1.1, 1.2, 1.3, 1.4}, {1.4, 1.55, 1.7, 1.8}});
  lib.cells_[GateKind::Nor] = cell({{0.9, 1.0, 1.1, 1.2}, {1.15, 1.3, 1.4, 1.55}});
  lib.cells_[GateKind::Xor] = cell({{1.4, 1.5}, {1.8, 1.95}});
  lib.cells_[GateKind::Xnor] = cell({{1.4, 1.5}, {1.8, 1.95}});
  return lib;
}

DelayLibrary DelayLibrary::from_json_text(const std::string& text) {
  const json j = json::parse(text);
  DelayLibrary lib = builtin();
  if (j.contains("wire_cap")) lib.wire_cap_ = j["wire_cap"].get<double>();
  if (j.contains("flipflop")) {
    const auto& f = j["flipflop"];
    lib.ff_.t_su = f.value("t_su", lib.ff_.t_su);
    lib.ff_.t_h = f.value("t_h", lib.ff_.t_h);
    lib.ff_.t_cq = f.value("t_cq", lib.ff_.t_cq);
    lib.ff_.q_slew = f.value("q_slew", lib.ff_.q_slew);
    lib.ff_.d_cap = f.value("d_cap", lib.ff_.d_cap);
  }
  if (j.contains("cells")) {
    for (const auto& [name, c] : j["cells"].items()) {
      const auto kind = gate_kind_from_string(name);
      if (!kind) throw NetlistError("delay library: unknown gate kind " + name);
      CellTiming cell = lib.cells_[*kind];
      cell.pin_delay_rows = c.at("delays").get<std::vector<std::vector<double>>>();
      for (const auto& row : cell.pin_delay_rows) {
        if (row.empty()) throw NetlistError("delay library: empty delay row for " + name);
        for (double d : row)
          if (!(d > 0)) throw NetlistError("delay library: non-positive pin delay for " + name);
      }
      if (c.contains("pin_cap")) cell.pin_cap = c["pin_cap"].get<std::vector<double>>();
      if (c.contains("lut")) {
        cell.delay_scale = table_from_json(c["lut"], "delay_scale");
        cell.out_slew = table_from_json(c["lut"], "out_slew");
      }
      lib.cells_[*kind] = std::move(cell);
    }
  }
  if (j.contains("instances"))
    for (const auto& [name, rows] : j["instances"].items())
      lib.overrides_[name] = rows.get<std::vector<std::vector<double>>>();
  return lib;
}

DelayLibrary DelayLibrary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NetlistError("cannot open delay library " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string DelayLibrary::to_json_text() const {
  json j;
  j["wire_cap"] = wire_cap_;
  j["flipflop"] = {{"t_su", ff_.t_su}, {"t_h", ff_.t_h}, {"t_cq", ff_.t_cq}, {"q_slew", ff_.q_slew},
                   {"d_cap", ff_.d_cap}};
  for (const auto& [kind, c] : cells_) {
    json cj;
    cj["delays"] = c.pin_delay_rows;
    cj["pin_cap"] = c.pin_cap;
    if (!c.delay_scale.empty())
      cj["lut"] = {{"slew", c.delay_scale.slew_index},
                   {"load", c.delay_scale.load_index},
                   {"delay_scale", c.delay_scale.values},
                   {"out_slew", c.out_slew.values}};
    j["cells"][std::string(to_string(kind))] = cj;
  }
  for (const auto& [name, rows] : overrides_) j["instances"][name] = rows;
  return j.dump(2);
}

const CellTiming& DelayLibrary::cell(GateKind kind) const {
  const auto it = cells_.find(kind);
  if (it == cells_.end()) throw NetlistError(fmt::format("no timing for gate kind {}", to_string(kind)));
  return it->second;
}

int DelayLibrary::size_levels(GateKind kind) const {
  return static_cast<int>(cell(kind).pin_delay_rows.size());
}

double DelayLibrary::pin_delay(GateKind kind, int size_level, int pin) const {
  const auto& rows = cell(kind).pin_delay_rows;
  const auto& row = rows.at(static_cast<std::size_t>(std::clamp(size_level, 0, static_cast<int>(rows.size()) - 1)));
  return row[std::min<std::size_t>(static_cast<std::size_t>(pin), row.size() - 1)];
}

std::optional<std::vector<std::vector<double>>> DelayLibrary::instance_override(const std::string& name) const {
  const auto it = overrides_.find(name);
  if (it == overrides_.end()) return std::nullopt;
  return it->second;
}

double DelayLibrary::buffer_delay() const { return pin_delay(GateKind::Buf, 0, 0); }

// ---- netlist -----------------------------------------------------------------

NodeId Netlist::declare(const std::string& name) {
  if (auto id = find(name)) return *id;
  const auto id = static_cast<NodeId>(nodes_.size());
  Node n;
  n.name = name;
  n.kind = NodeKind::Gate;
  n.size_level = -1;  // undefined marker
  nodes_.push_back(std::move(n));
  index_[name] = id;
  invalidate();
  return id;
}

NodeId Netlist::add_input(const std::string& name) {
  if (find(name)) throw NetlistError("duplicate signal " + name);
  const NodeId id = declare(name);
  nodes_[id].kind = NodeKind::Input;
  nodes_[id].size_level = 0;
  return id;
}

NodeId Netlist::add_output(const std::string& name, NodeId driver) {
  const auto id = static_cast<NodeId>(nodes_.size());
  Node n;
  n.name = name;
  n.kind = NodeKind::Output;
  n.fanin = {driver};
  nodes_.push_back(std::move(n));
  invalidate();
  return id;
}

NodeId Netlist::add_gate(const std::string& name, GateKind kind, std::vector<NodeId> fanin, int size_level) {
  if (find(name)) throw NetlistError("duplicate signal " + name);
  const NodeId id = declare(name);
  define_gate(id, kind, std::move(fanin), size_level);
  return id;
}

NodeId Netlist::add_flipflop(const std::string& name, NodeId d_driver, bool is_retimed) {
  if (find(name)) throw NetlistError("duplicate signal " + name);
  const NodeId id = declare(name);
  define_flipflop(id, d_driver);
  nodes_[id].is_retimed = is_retimed;
  return id;
}

void Netlist::define_gate(NodeId id, GateKind kind, std::vector<NodeId> fanin, int size_level) {
  auto& n = nodes_.at(id);
  if (fanin.empty()) throw NetlistError("gate " + n.name + " has no inputs");
  if ((kind == GateKind::Not || kind == GateKind::Buf) && fanin.size() != 1)
    throw NetlistError("gate " + n.name + " must have exactly one input");
  n.kind = NodeKind::Gate;
  n.gate = kind;
  n.fanin = std::move(fanin);
  n.size_level = std::max(0, size_level);
  refresh_delays(id);
  invalidate();
}

void Netlist::define_flipflop(NodeId id, NodeId d_driver) {
  auto& n = nodes_.at(id);
  n.kind = NodeKind::FlipFlop;
  n.fanin = {d_driver};
  n.size_level = 0;
  n.pin_delays.clear();
  invalidate();
}

void Netlist::set_driver(Pin pin, NodeId driver) {
  nodes_.at(pin.node).fanin.at(static_cast<std::size_t>(pin.pin)) = driver;
  invalidate();
}

void Netlist::set_size(NodeId gate, int level) {
  auto& n = nodes_.at(gate);
  n.size_level = std::clamp(level, 0, size_levels(gate) - 1);
  refresh_delays(gate);
}

void Netlist::set_xi(NodeId gate, double xi) {
  if (xi < 0) throw NetlistError("inserted delay must be non-negative");
  nodes_.at(gate).xi = xi;
}

void Netlist::rename(NodeId id, const std::string& name) {
  auto& n = nodes_.at(id);
  if (n.kind != NodeKind::Output) {
    if (find(name)) throw NetlistError("duplicate signal " + name);
    index_.erase(n.name);
    index_[name] = id;
  }
  n.name = name;
}

void Netlist::set_library(std::shared_ptr<const DelayLibrary> library) {
  library_ = std::move(library);
  for (NodeId id = 0; id < nodes_.size(); ++id)
    if (nodes_[id].kind == NodeKind::Gate && nodes_[id].size_level >= 0) {
      nodes_[id].size_level = std::clamp(nodes_[id].size_level, 0, library_->size_levels(nodes_[id].gate) - 1);
      refresh_delays(id);
    }
}

int Netlist::size_levels(NodeId gate) const {
  const auto& n = nodes_.at(gate);
  const auto over = library_->instance_override(n.name);
  return over && !over->empty() ? static_cast<int>(over->size()) : library_->size_levels(n.gate);
}

double Netlist::level_delay(NodeId gate, int level, int pin) const {
  const auto& n = nodes_.at(gate);
  const auto over = library_->instance_override(n.name);
  if (over && !over->empty()) {
    const auto& row = (*over)[std::min<std::size_t>(static_cast<std::size_t>(level), over->size() - 1)];
    return row[std::min<std::size_t>(static_cast<std::size_t>(pin), row.size() - 1)];
  }
  return library_->pin_delay(n.gate, level, pin);
}

void Netlist::refresh_delays(NodeId id) {
  auto& n = nodes_[id];
  n.pin_delays.resize(n.fanin.size());
  const auto over = library_->instance_override(n.name);
  for (std::size_t p = 0; p < n.fanin.size(); ++p) {
    if (over && !over->empty()) {
      const auto& row = (*over)[std::min<std::size_t>(static_cast<std::size_t>(n.size_level), over->size() - 1)];
      n.pin_delays[p] = row[std::min(p, row.size() - 1)];
    } else {
      n.pin_delays[p] = library_->pin_delay(n.gate, n.size_level, static_cast<int>(p));
    }
  }
}

std::optional<NodeId> Netlist::find(std::string_view name) const {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

NodeId Netlist::at(std::string_view name) const {
  if (auto id = find(name)) return *id;
  throw NetlistError("unknown signal " + std::string(name));
}

std::vector<NodeId> Netlist::of_kind(NodeKind kind) const {
  std::vector<NodeId> out;
  for (NodeId id = 0; id < nodes_.size(); ++id)
    if (nodes_[id].kind == kind) out.push_back(id);
  return out;
}

const std::vector<Pin>& Netlist::fanout(NodeId id) const {
  if (!fanout_valid_) {
    fanout_.assign(nodes_.size(), {});
    for (NodeId v = 0; v < nodes_.size(); ++v)
      for (std::size_t p = 0; p < nodes_[v].fanin.size(); ++p)
        if (nodes_[v].fanin[p] != kNoNode) fanout_[nodes_[v].fanin[p]].push_back({v, static_cast<int>(p)});
    fanout_valid_ = true;
  }
  return fanout_.at(id);
}

std::vector<NodeId> Netlist::topo_gates() const {
  std::vector<int> pending(nodes_.size(), 0);
  std::deque<NodeId> ready;
  std::size_t gate_total = 0;
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    if (nodes_[id].kind != NodeKind::Gate) continue;
    ++gate_total;
    for (NodeId f : nodes_[id].fanin)
      if (nodes_[f].kind == NodeKind::Gate) ++pending[id];
    if (pending[id] == 0) ready.push_back(id);
  }
  std::vector<NodeId> order;
  order.reserve(gate_total);
  while (!ready.empty()) {
    const NodeId g = ready.front();
    ready.pop_front();
    order.push_back(g);
    for (const Pin& p : fanout(g))
      if (nodes_[p.node].kind == NodeKind::Gate && --pending[p.node] == 0) ready.push_back(p.node);
  }
  if (order.size() != gate_total) {
    for (NodeId id = 0; id < nodes_.size(); ++id)
      if (nodes_[id].kind == NodeKind::Gate && pending[id] > 0)
        throw NetlistError("combinational cycle through " + nodes_[id].name);
  }
  return order;
}

void Netlist::validate() const {
  for (const auto& n : nodes_) {
    if (n.kind == NodeKind::Gate && n.size_level < 0) throw NetlistError("undriven signal " + n.name);
    for (NodeId f : n.fanin) {
      if (f == kNoNode || f >= nodes_.size()) throw NetlistError("undriven pin on " + n.name);
      if (nodes_[f].kind == NodeKind::Output) throw NetlistError("output port drives " + n.name);
      if (nodes_[f].kind == NodeKind::Gate && nodes_[f].size_level < 0)
        throw NetlistError("undriven signal " + nodes_[f].name);
    }
    if (n.kind == NodeKind::FlipFlop && n.fanin.size() != 1) throw NetlistError("flip-flop " + n.name + " needs one D");
    if (n.kind == NodeKind::Gate) {
      if (n.pin_delays.size() != n.fanin.size()) throw NetlistError("pin delay count mismatch on " + n.name);
      for (double d : n.pin_delays)
        if (!(d > 0)) throw NetlistError("non-positive pin delay on " + n.name);
      if (n.xi < 0) throw NetlistError("negative inserted delay on " + n.name);
    }
  }
  // A flip-flop loop without any gate is legal but a flip-flop driving itself
  // through flip-flops only is not a combinational cycle; only gates matter here.
  (void)topo_gates();
}

void Netlist::erase(const std::vector<NodeId>& ids) {
  if (ids.empty()) return;
  std::vector<bool> dead(nodes_.size(), false);
  for (NodeId id : ids) dead.at(id) = true;
  std::vector<NodeId> remap(nodes_.size(), kNoNode);
  std::vector<Node> kept;
  for (NodeId id = 0; id < nodes_.size(); ++id)
    if (!dead[id]) {
      remap[id] = static_cast<NodeId>(kept.size());
      kept.push_back(std::move(nodes_[id]));
    }
  for (auto& n : kept)
    for (auto& f : n.fanin) {
      if (dead[f]) throw NetlistError("erased node still drives " + n.name);
      f = remap[f];
    }
  nodes_ = std::move(kept);
  index_.clear();
  for (NodeId id = 0; id < nodes_.size(); ++id)
    if (nodes_[id].kind != NodeKind::Output) index_[nodes_[id].name] = id;
  invalidate();
}

// ---- bench I/O ---------------------------------------------------------------

Netlist parse_bench(std::istream& text, std::shared_ptr<const DelayLibrary> library) {
  if (!library) library = std::make_shared<DelayLibrary>(DelayLibrary::builtin());
  Netlist n(library);
  std::vector<std::pair<std::string, int>> outputs;
  std::map<NodeId, int> defined_at;
  std::string raw;
  int line_no = 0;
  while (std::getline(text, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto open = line.find('(');
    const auto close = line.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open)
      throw ParseError(line_no, "expected '(' ... ')'");
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      const std::string kw = upper(trim(line.substr(0, open)));
      const std::string arg = trim(line.substr(open + 1, close - open - 1));
      if (arg.empty()) throw ParseError(line_no, "empty port name");
      if (kw == "INPUT") {
        if (n.find(arg)) throw ParseError(line_no, "duplicate signal " + arg);
        n.add_input(arg);
        defined_at[n.at(arg)] = line_no;
      } else if (kw == "OUTPUT") {
        outputs.emplace_back(arg, line_no);
      } else {
        throw ParseError(line_no, "unknown directive " + kw);
      }
      continue;
    }
    if (eq > open) throw ParseError(line_no, "malformed assignment");
    const std::string lhs = trim(line.substr(0, eq));
    const std::string fn = trim(line.substr(eq + 1, open - eq - 1));
    if (lhs.empty()) throw ParseError(line_no, "missing signal name");
    std::vector<std::string> args;
    {
      std::stringstream ss(line.substr(open + 1, close - open - 1));
      std::string a;
      while (std::getline(ss, a, ',')) {
        a = trim(a);
        if (a.empty()) throw ParseError(line_no, "empty operand");
        args.push_back(a);
      }
    }
    if (args.empty()) throw ParseError(line_no, "gate without inputs");
    const NodeId id = n.declare(lhs);
    if (defined_at.count(id)) throw ParseError(line_no, "signal " + lhs + " defined twice");
    defined_at[id] = line_no;
    std::vector<NodeId> fanin;
    for (const auto& a : args) fanin.push_back(n.declare(a));
    const std::string ufn = upper(fn);
    if (ufn == "DFF") {
      if (fanin.size() != 1) throw ParseError(line_no, "DFF takes one input");
      n.define_flipflop(id, fanin[0]);
      continue;
    }
    const auto kind = gate_kind_from_string(ufn);
    if (!kind) throw ParseError(line_no, "unknown gate kind " + fn);
    try {
      n.define_gate(id, *kind, std::move(fanin));
    } catch (const NetlistError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  for (NodeId id = 0; id < n.size(); ++id)
    if (!defined_at.count(id) && n.node(id).kind != NodeKind::Output)
      throw NetlistError("undriven signal " + n.node(id).name);
  for (const auto& [name, ln] : outputs) {
    const auto drv = n.find(name);
    if (!drv) throw ParseError(ln, "output " + name + " is undriven");
    n.add_output(name, *drv);
  }
  n.validate();
  return n;
}

Netlist parse_bench_string(const std::string& text, std::shared_ptr<const DelayLibrary> library) {
  std::istringstream in(text);
  return parse_bench(in, std::move(library));
}

Netlist load_bench(const std::string& path, std::shared_ptr<const DelayLibrary> library) {
  std::ifstream in(path);
  if (!in) throw NetlistError("cannot open " + path);
  Netlist n = parse_bench(in, std::move(library));
  const auto slash = path.find_last_of('/');
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  if (const auto dot = base.rfind('.'); dot != std::string::npos) base = base.substr(0, dot);
  n.name = base;
  return n;
}

namespace {

// Names as written. A port whose driver changed keeps its name, so a different
// node still carrying that name is written with a suffix.
std::vector<std::string> written_names(const Netlist& n) {
  std::vector<std::string> names(n.size());
  for (NodeId id = 0; id < n.size(); ++id) names[id] = n.node(id).name;
  std::set<std::string> taken;
  for (NodeId id = 0; id < n.size(); ++id) taken.insert(names[id]);
  for (NodeId id : n.outputs()) {
    const auto& o = n.node(id);
    const NodeId drv = o.fanin[0];
    if (n.node(drv).name == o.name) continue;
    const auto other = n.find(o.name);
    if (!other || *other == id) continue;
    std::string alt = o.name + "_int";
    for (int k = 2; taken.count(alt); ++k) alt = o.name + "_int" + std::to_string(k);
    taken.insert(alt);
    names[*other] = alt;
  }
  return names;
}

}  // namespace

std::string write_bench(const Netlist& n) {
  const auto nm = written_names(n);
  std::ostringstream out;
  out << "# " << (n.name.empty() ? "netlist" : n.name) << "\n";
  for (NodeId id : n.inputs()) out << "INPUT(" << nm[id] << ")\n";
  std::vector<std::pair<std::string, std::string>> aliases;
  for (NodeId id : n.outputs()) {
    const auto& o = n.node(id);
    out << "OUTPUT(" << o.name << ")\n";
    const auto& drv = nm[o.fanin[0]];
    if (drv != o.name) aliases.emplace_back(o.name, drv);
  }
  for (NodeId id : n.flipflops()) out << nm[id] << " = DFF(" << nm[n.node(id).fanin[0]] << ")\n";
  for (NodeId id : n.gates()) {
    const auto& g = n.node(id);
    out << nm[id] << " = " << to_string(g.gate) << "(";
    for (std::size_t p = 0; p < g.fanin.size(); ++p) out << (p ? ", " : "") << nm[g.fanin[p]];
    out << ")\n";
  }
  for (const auto& [port, drv] : aliases) out << port << " = BUFF(" << drv << ")\n";
  return out.str();
}

std::string write_annotations(const Netlist& n) {
  const auto nm = written_names(n);
  json j = json::object();
  for (NodeId id : n.gates()) {
    const auto& g = n.node(id);
    if (g.size_level != 0 || g.xi != 0.0) j[nm[id]] = {{"size", g.size_level}, {"xi", g.xi}};
  }
  return j.dump(1);
}

void apply_annotations(Netlist& n, const std::string& json_text) {
  const json j = json::parse(json_text);
  for (const auto& [name, v] : j.items()) {
    const NodeId id = n.at(name);
    n.set_size(id, v.value("size", 0));
    n.set_xi(id, v.value("xi", 0.0));
  }
}

// ---- weight view ---------------------------------------------------------------

int WeightView::total_weight() const {
  int t = 0;
  for (const auto& e : edges) t += e.weight;
  return t;
}

std::pair<NodeId, int> comb_driver(const Netlist& n, NodeId node) {
  int depth = 0;
  std::set<NodeId> seen;
  while (n.node(node).kind == NodeKind::FlipFlop) {
    if (!seen.insert(node).second) throw NetlistError("flip-flop ring without logic at " + n.node(node).name);
    ++depth;
    node = n.node(node).fanin[0];
  }
  return {node, depth};
}

WeightView weight_view(const Netlist& n) {
  WeightView v;
  v.in_edges.assign(n.size(), {});
  v.out_edges.assign(n.size(), {});
  std::vector<bool> used(n.size(), false);
  for (NodeId id = 0; id < n.size(); ++id) {
    const auto& node = n.node(id);
    if (node.kind != NodeKind::Gate && node.kind != NodeKind::Output) continue;
    for (std::size_t p = 0; p < node.fanin.size(); ++p) {
      WeightedEdge e;
      e.sink = id;
      e.pin = static_cast<int>(p);
      NodeId cur = node.fanin[p];
      while (n.node(cur).kind == NodeKind::FlipFlop) {
        e.flipflops.push_back(cur);
        used[cur] = true;
        cur = n.node(cur).fanin[0];
        if (e.flipflops.size() > n.size()) throw NetlistError("flip-flop ring without logic");
      }
      std::reverse(e.flipflops.begin(), e.flipflops.end());
      e.source = cur;
      e.weight = static_cast<int>(e.flipflops.size());
      v.out_edges[e.source].push_back(v.edges.size());
      v.in_edges[e.sink].push_back(v.edges.size());
      v.edges.push_back(std::move(e));
    }
  }
  for (NodeId id : n.flipflops())
    if (!used[id]) v.dangling_flipflops.push_back(id);
  return v;
}

// ---- sequential adjacency ---------------------------------------------------------

bool SequentialGraph::has_edge(NodeId a, NodeId b) const {
  const auto& s = succ[index.at(a)];
  return std::find(s.begin(), s.end(), index.at(b)) != s.end();
}

SequentialGraph sequential_adjacency(const Netlist& n) {
  SequentialGraph g;
  g.flipflops = n.flipflops();
  for (std::size_t i = 0; i < g.flipflops.size(); ++i) g.index[g.flipflops[i]] = i;
  g.succ.assign(g.flipflops.size(), {});
  g.pred.assign(g.flipflops.size(), {});
  for (std::size_t i = 0; i < g.flipflops.size(); ++i) {
    std::set<std::size_t> reached;
    std::vector<bool> seen(n.size(), false);
    std::vector<NodeId> stack{g.flipflops[i]};
    while (!stack.empty()) {
      const NodeId cur = stack.back();
      stack.pop_back();
      for (const Pin& p : n.fanout(cur)) {
        if (n.is_ff(p.node)) {
          reached.insert(g.index.at(p.node));
        } else if (n.is_gate(p.node) && !seen[p.node]) {
          seen[p.node] = true;
          stack.push_back(p.node);
        }
      }
    }
    for (std::size_t j : reached) {
      g.succ[i].push_back(j);
      g.pred[j].push_back(i);
    }
  }
  return g;
}

Placement parse_placement_csv(std::istream& in) {
  Placement p;
  std::string line;
  int ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string id, x, y;
    if (!std::getline(ss, id, ',') || !std::getline(ss, x, ',') || !std::getline(ss, y, ','))
      throw ParseError(ln, "expected id,x,y");
    if (trim(id) == "id" || trim(id) == "name") continue;
    try {
      p[trim(id)] = {std::stod(x), std::stod(y)};
    } catch (const std::exception&) {
      throw ParseError(ln, "bad coordinate");
    }
  }
  return p;
}

double ff_distance(const Netlist& n, const SequentialGraph& g, NodeId a, NodeId b, const Placement* placement) {
  if (!g.index.count(a) || !g.index.count(b)) throw NetlistError("unknown flip-flop");
  if (placement) {
    const auto pa = placement->find(n.node(a).name);
    const auto pb = placement->find(n.node(b).name);
    if (pa == placement->end() || pb == placement->end()) throw NetlistError("flip-flop missing from placement");
    return std::hypot(pa->second.first - pb->second.first, pa->second.second - pb->second.second);
  }
  if (a == b) return 0.0;
  std::vector<int> dist(g.flipflops.size(), -1);
  std::deque<std::size_t> q{g.index.at(a)};
  dist[q.front()] = 0;
  const std::size_t target = g.index.at(b);
  while (!q.empty()) {
    const auto cur = q.front();
    q.pop_front();
    if (cur == target) return dist[cur];
    for (const auto* adj : {&g.succ[cur], &g.pred[cur]})
      for (std::size_t nx : *adj)
        if (dist[nx] < 0) {
          dist[nx] = dist[cur] + 1;
          q.push_back(nx);
        }
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace tcam
