// Constructed wave-pipelining paths and the two-wave path queries behind them.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tcam/netlist.hpp"
#include "tcam/timing.hpp"

namespace tcam {

enum class WpKind { True, False };
enum class WpMethod { Removal, Duplication };

std::string_view to_string(WpKind k);
std::string_view to_string(WpMethod m);

struct WpRecord {
  // path by node name; ids shift when later constructions erase nodes
  std::vector<std::string> nodes;
  std::vector<int> pins;
  WpKind kind = WpKind::True;
  WpMethod method = WpMethod::Removal;
  std::string site;                  // candidate flip-flop
  std::vector<std::string> removed;  // flip-flops deleted at this site
  WaveCut cut;                       // cut the path crosses
  double delay = 0;                  // launch offset + stage delays, typical
  double dmin = 0, dmax = 0;         // two-wave bounds launch -> capture, typical
  double lookup_dmin = 0, lookup_dmax = 0;
  Gray gray = Gray::Suspicious;
  bool xor_flag = false;
};

std::optional<Path> resolve(const Netlist& n, const WpRecord& r);
Path path_from_names(const Netlist& n, const std::vector<std::string>& nodes, const std::vector<int>& pins);

/// Two-wave paths that cross `cut`, at most `limit` per side of the cut before
/// combining; at most `limit` returned, longest first.
std::vector<Path> paths_through_cut(const Netlist& n, const std::vector<WaveCut>& cuts, const WaveCut& cut,
                                    int limit);

/// Two-wave arrival bounds at capture for paths launched at `launch` only.
std::pair<double, double> wave_bounds(const Netlist& n, const std::vector<WaveCut>& cuts, NodeId launch,
                                      NodeId capture, const TimingConfig& cfg, DelayMode mode = DelayMode::Typical);

/// Builds records for paths crossing new_cuts. Paths whose name key (with "_dup"
/// suffixes stripped) matches one of `preferred` come first.
std::vector<WpRecord> emit_records(const Netlist& n, const std::vector<WaveCut>& all_cuts,
                                   const std::vector<WaveCut>& new_cuts, const TimingConfig& cfg, WpMethod method,
                                   const std::string& site, const std::vector<std::string>& removed,
                                   const std::vector<std::vector<std::string>>& preferred);

/// Recomputes delays and bounds on the final netlist; drops records whose path is gone.
void refresh_records(const Netlist& n, const std::vector<WaveCut>& cuts, const TimingConfig& cfg,
                     std::vector<WpRecord>& records);

std::string records_to_json(const std::vector<WpRecord>& records);
std::vector<WpRecord> records_from_json(const std::string& text);

std::string strip_dup(std::string name);

}  // namespace tcam
