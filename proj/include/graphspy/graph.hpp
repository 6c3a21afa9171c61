#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "graphspy/error.hpp"
#include "graphspy/isa.hpp"
#include "graphspy/vm.hpp"
#include "json.hpp"

namespace graphspy {

enum class EdgeKind : std::uint8_t { FallThrough, BranchTrue, BranchFalse, Jump };
inline constexpr std::size_t kEdgeKindCount = 4;
std::string_view edge_kind_name(EdgeKind kind);
std::optional<EdgeKind> parse_edge_kind(std::string_view text);

struct CfgEdge {
  int src = 0;
  int dst = 0;
  EdgeKind kind = EdgeKind::FallThrough;
  auto operator<=>(const CfgEdge&) const = default;
};

struct Cfg {
  std::string proc;
  int node_count = 0;
  std::vector<CfgEdge> edges;  // sorted, unique

  int out_degree(int node) const;
};

// cell(i, j) = 1 iff some edge i -> j exists, whatever its kind.
struct AdjMatrix {
  int n = 0;
  std::vector<std::uint8_t> cells;  // row-major n*n

  std::uint8_t at(int i, int j) const {
    return cells[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)];
  }
  std::size_t ones() const;
};

class DanglingLabel : public Error {
 public:
  DanglingLabel(const std::string& proc, int target)
      : Error("DanglingLabel", "procedure '" + proc + "' jumps to nonexistent block " +
                                   std::to_string(target)) {}
};

class StackOverflow : public Error {
 public:
  StackOverflow() : Error("StackOverflow", "call depth exceeded while profiling") {}
};

Cfg build_cfg(const Procedure& proc);
AdjMatrix adjacency(const Cfg& cfg);

struct Snapshot {
  std::uint64_t seq = 0;  // number of trace events emitted before the sample
  std::array<std::int64_t, kRegisterCount> registers{};
  std::vector<std::pair<std::uint64_t, std::int64_t>> stored_values;
};

struct CallSite {
  std::string proc;
  int block = 0;
  int index = 0;
  bool operator==(const CallSite&) const = default;
};

struct CctNode {
  int id = 0;
  std::string proc;
  std::optional<CallSite> call_site;  // empty for the root
  int parent = -1;
  std::vector<int> children;
  std::vector<Snapshot> snapshots;
};

struct Cct {
  std::vector<CctNode> nodes;  // index == id
  int root = 0;

  // parent -> child pairs; message passing treats them in both directions.
  std::vector<std::pair<int, int>> edges() const;
};

struct ProfileOptions {
  std::uint64_t max_steps = 100000;
  std::uint64_t sample_period = 50;
  std::size_t snapshot_cap = 8;
  bool force_final_snapshot = false;
  std::size_t max_call_depth = 256;
};

struct ProfileResult {
  Cct cct;
  ExecResult exec;
};

// Profiles one run; the same execution also yields the trace for labeling.
ProfileResult profile_run(const Program& program, const Memory& init_memory,
                          const ProfileOptions& options = {});
Cct profile_cct(const Program& program, const Memory& init_memory,
                const ProfileOptions& options = {});

std::string value_token(std::int64_t v);
std::string address_token(std::uint64_t addr);
std::vector<std::string> value_tokens(const Snapshot& s);

nlohmann::ordered_json cfg_to_json(const Cfg& cfg);
Cfg cfg_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json cct_to_json(const Cct& cct, const std::string& program_id);
Cct cct_from_json(const nlohmann::ordered_json& j);

}  // namespace graphspy
