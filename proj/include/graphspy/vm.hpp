#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "graphspy/isa.hpp"

namespace graphspy {

using Memory = std::map<std::uint64_t, std::int64_t>;

struct Site {
  int proc = -1;  // index into Program::procedures
  int block = 0;
  int index = 0;
  auto operator<=>(const Site&) const = default;
};

// Interns call paths: (parent path, call site) -> path id. Path 0 is the
// entry procedure. Shared by the interpreter (trace contexts) and the CCT.
class CallPathTable {
 public:
  struct Entry {
    int parent = -1;
    Site call_site;  // unused for the root
    int proc = -1;
  };

  explicit CallPathTable(int entry_proc) { entries_.push_back({-1, {}, entry_proc}); }

  int child(int parent, const Site& site, int callee);
  const Entry& operator[](int id) const { return entries_[static_cast<std::size_t>(id)]; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<Entry> entries_;
  std::map<std::pair<int, Site>, int> index_;
};

enum class EventKind : std::uint8_t { Load, Store, Call, Ret, Exec };
std::string_view event_kind_name(EventKind kind);

struct TraceEvent {
  std::uint64_t seq = 0;
  EventKind kind = EventKind::Exec;
  std::uint64_t address = 0;  // Load/Store only
  std::int64_t value = 0;     // Load/Store only
  Site site;
  int context = 0;            // call-path id
  std::uint64_t frame = 0;    // dynamic frame (activation) id
};

using Trace = std::vector<TraceEvent>;

struct Frame {
  Site return_site;  // instruction after the call; proc -1 for the entry frame
  std::uint64_t frame_id = 0;
  int path = 0;
};

struct MachineState {
  std::array<std::int64_t, kRegisterCount> registers{};
  bool flag = false;
  Memory memory;
  Site pc;
  std::vector<Frame> call_stack;  // innermost last; entry frame at the bottom
};

enum class ExitStatus : std::uint8_t { Halted, StepLimit, Fault };
std::string_view exit_status_name(ExitStatus status);

struct ExecOptions {
  std::uint64_t max_steps = 100000;
  bool strict_reads = false;  // Fault instead of reading 0 from unwritten memory
  std::size_t max_call_depth = 256;
  bool record_exec = false;   // emit an Exec event per instruction
};

// Hooks for profilers layered on the interpreter. Called synchronously.
class ExecutionObserver {
 public:
  virtual ~ExecutionObserver() = default;
  // Before `ins` executes. `step` counts executed instructions from 1.
  virtual void on_instruction(const MachineState&, const Instruction&, std::uint64_t /*step*/) {}
  virtual void on_event(const MachineState&, const TraceEvent&) {}
  virtual void on_exit(const MachineState&, ExitStatus) {}
};

struct ExecResult {
  Trace trace;
  MachineState state;
  ExitStatus exit = ExitStatus::Halted;
  std::string fault_reason;
  std::uint64_t steps = 0;
  std::vector<std::uint64_t> steps_per_proc;  // executed instruction count per procedure
  std::vector<bool> executed;                 // procedure executed at least once
};

// Deterministic interpreter. Registers start at zero. `ret` from the entry
// frame ends the run like `halt`.
ExecResult execute(const Program& program, const Memory& init_memory,
                   const ExecOptions& options = {}, ExecutionObserver* observer = nullptr);

struct DeadStoreReport {
  std::uint64_t address = 0;
  Site killed_site;
  std::uint64_t killed_seq = 0;
  Site killing_site;
  std::uint64_t killing_seq = 0;
  bool operator==(const DeadStoreReport&) const = default;
  auto operator<=>(const DeadStoreReport&) const = default;
};

enum class ShadowMode : std::uint8_t { Virgin, WrittenUnread, ReadSinceWrite };

struct ShadowCell {
  ShadowMode mode = ShadowMode::Virgin;
  Site last_store_site;
  std::uint64_t last_store_seq = 0;
};

// Online shadow-memory detector; reports come out in killing_seq order.
class ShadowDetector {
 public:
  void observe(const TraceEvent& event);
  const std::vector<DeadStoreReport>& reports() const { return reports_; }
  ShadowMode mode(std::uint64_t address) const;

 private:
  std::unordered_map<std::uint64_t, ShadowCell> shadow_;
  std::vector<DeadStoreReport> reports_;
};

std::vector<DeadStoreReport> detect_dead_stores(const Trace& trace);

// Quadratic reference: pairs consecutive stores per address by direct scan.
std::vector<DeadStoreReport> brute_force_dead_stores(const Trace& trace);

struct Run {
  Memory init_memory;
  std::uint64_t max_steps = 100000;
};

struct ProcedureLabels {
  std::map<std::string, int> label;        // procedure -> 0|1
  std::map<std::string, bool> exercised;   // executed in at least one run
  std::map<std::string, std::uint64_t> cost;  // executed instructions summed over runs
};

// A procedure is labeled 1 iff some run reports a dead store whose killed
// (earlier) store lies in it.
ProcedureLabels label_procedures(const Program& program, const std::vector<Run>& runs,
                                 const ExecOptions& base_options = {});

// Tab-separated `seq kind addr value proc block idx ctx`, one event per line.
std::string dump_trace(const Program& program, const Trace& trace);

// JSON-lines, keys in declaration order of DeadStoreReport.
std::string reports_to_jsonl(const Program& program, const std::vector<DeadStoreReport>& reports);

}  // namespace graphspy
