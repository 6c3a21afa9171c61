#include "graphspy/vm.hpp"

#include <algorithm>
#include <sstream>

#include "graphspy/error.hpp"
#include "json.hpp"

namespace graphspy {

int CallPathTable::child(int parent, const Site& site, int callee) {
  auto key = std::make_pair(parent, site);
  if (auto it = index_.find(key); it != index_.end()) return it->second;
  int id = static_cast<int>(entries_.size());
  entries_.push_back({parent, site, callee});
  index_.emplace(key, id);
  return id;
}

std::string_view event_kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::Load: return "Load";
    case EventKind::Store: return "Store";
    case EventKind::Call: return "Call";
    case EventKind::Ret: return "Ret";
    case EventKind::Exec: return "Exec";
  }
  return "?";
}

std::string_view exit_status_name(ExitStatus status) {
  switch (status) {
    case ExitStatus::Halted: return "Halted";
    case ExitStatus::StepLimit: return "StepLimit";
    case ExitStatus::Fault: return "Fault";
  }
  return "?";
}

namespace {

std::int64_t wrap_add(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}
std::int64_t wrap_sub(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b));
}
std::int64_t wrap_mul(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b));
}

bool compare(Relation rel, std::int64_t a, std::int64_t b) {
  switch (rel) {
    case Relation::Eq: return a == b;
    case Relation::Ne: return a != b;
    case Relation::Lt: return a < b;
    case Relation::Le: return a <= b;
    case Relation::Gt: return a > b;
    case Relation::Ge: return a >= b;
  }
  return false;
}

class Interpreter {
 public:
  Interpreter(const Program& program, const ExecOptions& options, ExecutionObserver* observer)
      : program_(program), options_(options), observer_(observer),
        paths_(program.index_of(program.entry)) {}

  ExecResult run(const Memory& init_memory) {
    int entry = program_.index_of(program_.entry);
    if (entry < 0) throw Error("UndefinedProcedure", "entry procedure '" + program_.entry + "' not found");
    ExecResult result;
    result.steps_per_proc.assign(program_.procedures.size(), 0);
    result.executed.assign(program_.procedures.size(), false);
    auto& st = result.state;
    st.memory = init_memory;
    st.pc = {entry, 0, 0};
    st.call_stack.push_back({Site{-1, 0, 0}, next_frame_++, 0});

    result.exit = ExitStatus::StepLimit;
    while (result.steps < options_.max_steps) {
      const Procedure& proc = program_.procedures[static_cast<std::size_t>(st.pc.proc)];
      const BasicBlock& block = proc.blocks[static_cast<std::size_t>(st.pc.block)];
      const Instruction& ins = block.instructions[static_cast<std::size_t>(st.pc.index)];
      ++result.steps;
      ++result.steps_per_proc[static_cast<std::size_t>(st.pc.proc)];
      result.executed[static_cast<std::size_t>(st.pc.proc)] = true;
      if (observer_) observer_->on_instruction(st, ins, result.steps);
      if (options_.record_exec) emit(result, EventKind::Exec, 0, 0);

      auto status = step(result, block, ins);
      if (status) {
        result.exit = *status;
        break;
      }
    }
    if (observer_) observer_->on_exit(st, result.exit);
    return result;
  }

 private:
  const TraceEvent& emit(ExecResult& r, EventKind kind, std::uint64_t addr, std::int64_t value) {
    const auto& top = r.state.call_stack.back();
    r.trace.push_back({seq_++, kind, addr, value, r.state.pc, top.path, top.frame_id});
    if (observer_) observer_->on_event(r.state, r.trace.back());
    return r.trace.back();
  }

  std::int64_t read(const MachineState& st, const Operand& o) const {
    return o.kind == Operand::Kind::Imm ? o.imm : st.registers[static_cast<std::size_t>(o.reg)];
  }

  std::uint64_t address(const MachineState& st, const MemRef& m) const {
    return static_cast<std::uint64_t>(st.registers[static_cast<std::size_t>(m.base)]) +
           static_cast<std::uint64_t>(m.offset);
  }

  std::optional<ExitStatus> fault(ExecResult& r, std::string reason) {
    r.fault_reason = std::move(reason);
    return ExitStatus::Fault;
  }

  std::optional<ExitStatus> step(ExecResult& r, const BasicBlock& block, const Instruction& ins) {
    auto& st = r.state;
    auto& regs = st.registers;
    const auto& ops = ins.operands;
    Site next = st.pc;
    if (static_cast<std::size_t>(next.index) + 1 < block.instructions.size()) {
      ++next.index;
    } else {
      ++next.block;
      next.index = 0;
    }

    switch (ins.op) {
      case Opcode::Mov:
        regs[static_cast<std::size_t>(ops[0].reg)] = read(st, ops[1]);
        break;
      case Opcode::Add:
        regs[static_cast<std::size_t>(ops[0].reg)] = wrap_add(read(st, ops[1]), read(st, ops[2]));
        break;
      case Opcode::Sub:
        regs[static_cast<std::size_t>(ops[0].reg)] = wrap_sub(read(st, ops[1]), read(st, ops[2]));
        break;
      case Opcode::Mul:
        regs[static_cast<std::size_t>(ops[0].reg)] = wrap_mul(read(st, ops[1]), read(st, ops[2]));
        break;
      case Opcode::CmpFlag:
        st.flag = compare(ops[0].rel, read(st, ops[1]), read(st, ops[2]));
        break;
      case Opcode::Ld: {
        auto addr = address(st, ops[1].mem);
        auto it = st.memory.find(addr);
        if (it == st.memory.end() && options_.strict_reads)
          return fault(r, "read of unwritten address " + std::to_string(addr));
        std::int64_t v = it == st.memory.end() ? 0 : it->second;
        regs[static_cast<std::size_t>(ops[0].reg)] = v;
        emit(r, EventKind::Load, addr, v);
        break;
      }
      case Opcode::St: {
        auto addr = address(st, ops[0].mem);
        std::int64_t v = regs[static_cast<std::size_t>(ops[1].reg)];
        st.memory[addr] = v;
        emit(r, EventKind::Store, addr, v);
        break;
      }
      case Opcode::Jmp:
        next = {st.pc.proc, ops[0].target, 0};
        break;
      case Opcode::BrTrue:
        if (st.flag) next = {st.pc.proc, ops[0].target, 0};
        break;
      case Opcode::BrFalse:
        if (!st.flag) next = {st.pc.proc, ops[0].target, 0};
        break;
      case Opcode::Call: {
        if (st.call_stack.size() >= options_.max_call_depth)
          return fault(r, "call stack overflow");
        int callee = program_.index_of(ops[0].name);
        if (callee < 0) return fault(r, "call to undefined procedure " + ops[0].name);
        emit(r, EventKind::Call, 0, 0);
        int path = paths_.child(st.call_stack.back().path, st.pc, callee);
        st.call_stack.push_back({next, next_frame_++, path});
        next = {callee, 0, 0};
        break;
      }
      case Opcode::Ret: {
        emit(r, EventKind::Ret, 0, 0);
        Site back = st.call_stack.back().return_site;
        st.call_stack.pop_back();
        if (st.call_stack.empty()) return ExitStatus::Halted;
        next = back;
        break;
      }
      case Opcode::Halt:
        return ExitStatus::Halted;
    }
    st.pc = next;
    return std::nullopt;
  }

  const Program& program_;
  const ExecOptions& options_;
  ExecutionObserver* observer_;
  CallPathTable paths_;
  std::uint64_t seq_ = 0;
  std::uint64_t next_frame_ = 0;
};

}  // namespace

ExecResult execute(const Program& program, const Memory& init_memory, const ExecOptions& options,
                   ExecutionObserver* observer) {
  if (options.max_steps == 0) throw Error("InvalidArgument", "max_steps must be positive", ErrorCategory::Usage);
  Interpreter interp(program, options, observer);
  return interp.run(init_memory);
}

void ShadowDetector::observe(const TraceEvent& e) {
  if (e.kind == EventKind::Store) {
    auto& cell = shadow_[e.address];
    if (cell.mode == ShadowMode::WrittenUnread)
      reports_.push_back({e.address, cell.last_store_site, cell.last_store_seq, e.site, e.seq});
    cell.mode = ShadowMode::WrittenUnread;
    cell.last_store_site = e.site;
    cell.last_store_seq = e.seq;
  } else if (e.kind == EventKind::Load) {
    auto it = shadow_.find(e.address);
    if (it != shadow_.end()) it->second.mode = ShadowMode::ReadSinceWrite;
  }
}

ShadowMode ShadowDetector::mode(std::uint64_t address) const {
  auto it = shadow_.find(address);
  return it == shadow_.end() ? ShadowMode::Virgin : it->second.mode;
}

std::vector<DeadStoreReport> detect_dead_stores(const Trace& trace) {
  ShadowDetector detector;
  for (const auto& e : trace) detector.observe(e);
  return detector.reports();
}

std::vector<DeadStoreReport> brute_force_dead_stores(const Trace& trace) {
  std::vector<DeadStoreReport> out;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace[i].kind != EventKind::Store) continue;
    for (std::size_t j = i + 1; j < trace.size(); ++j) {
      if (trace[j].address != trace[i].address) continue;
      if (trace[j].kind == EventKind::Load) break;
      if (trace[j].kind == EventKind::Store) {
        out.push_back({trace[i].address, trace[i].site, trace[i].seq, trace[j].site, trace[j].seq});
        break;
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.killing_seq < b.killing_seq;
  });
  return out;
}

ProcedureLabels label_procedures(const Program& program, const std::vector<Run>& runs,
                                 const ExecOptions& base_options) {
  if (runs.empty()) throw Error("InvalidArgument", "label_procedures needs at least one run", ErrorCategory::Usage);
  ProcedureLabels out;
  for (const auto& p : program.procedures) {
    out.label[p.name] = 0;
    out.exercised[p.name] = false;
    out.cost[p.name] = 0;
  }
  for (const auto& run : runs) {
    ExecOptions opts = base_options;
    opts.max_steps = run.max_steps;
    auto result = execute(program, run.init_memory, opts);
    for (std::size_t i = 0; i < program.procedures.size(); ++i) {
      const auto& name = program.procedures[i].name;
      if (result.executed[i]) out.exercised[name] = true;
      out.cost[name] += result.steps_per_proc[i];
    }
    for (const auto& r : detect_dead_stores(result.trace))
      out.label[program.procedures[static_cast<std::size_t>(r.killed_site.proc)].name] = 1;
  }
  return out;
}

std::string dump_trace(const Program& program, const Trace& trace) {
  std::ostringstream os;
  for (const auto& e : trace) {
    bool mem = e.kind == EventKind::Load || e.kind == EventKind::Store;
    os << e.seq << '\t' << event_kind_name(e.kind) << '\t';
    if (mem) os << e.address << '\t' << e.value;
    else os << "-\t-";
    os << '\t' << program.procedures[static_cast<std::size_t>(e.site.proc)].name << '\t'
       << e.site.block << '\t' << e.site.index << '\t' << e.context << '\n';
  }
  return os.str();
}

std::string reports_to_jsonl(const Program& program, const std::vector<DeadStoreReport>& reports) {
  auto site = [&](const Site& s) {
    nlohmann::ordered_json j;
    j["proc"] = program.procedures[static_cast<std::size_t>(s.proc)].name;
    j["block"] = s.block;
    j["index"] = s.index;
    return j;
  };
  std::string out;
  for (const auto& r : reports) {
    nlohmann::ordered_json j;
    j["address"] = r.address;
    j["killed_site"] = site(r.killed_site);
    j["killed_seq"] = r.killed_seq;
    j["killing_site"] = site(r.killing_site);
    j["killing_seq"] = r.killing_seq;
    out += j.dump() + '\n';
  }
  return out;
}

}  // namespace graphspy
