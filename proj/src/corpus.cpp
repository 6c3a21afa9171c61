#include "graphspy/corpus.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "graphspy/graph.hpp"

namespace graphspy {

using json = nlohmann::ordered_json;

std::string_view opt_level_name(OptLevel level) { return level == OptLevel::Opt0 ? "Opt0" : "Opt1"; }

std::string config_tag(DialectKind dialect, OptLevel opt) {
  return std::string(dialect_name(dialect)) + "-" + std::string(opt_level_name(opt));
}

std::string_view scenario_name(Scenario s) {
  switch (s) {
    case Scenario::MotifA: return "a";
    case Scenario::MotifB: return "b";
    case Scenario::MotifC: return "c";
    case Scenario::Guarded: return "g";
  }
  return "?";
}

json GenConfig::to_json() const {
  return {{"seed", seed},
          {"procs", {min_procs, max_procs}},
          {"segments", {min_segments, max_segments}},
          {"block_len", {min_block_len, max_block_len}},
          {"call_density", call_density},
          {"loop_probability", loop_probability},
          {"dead_store_injection", dead_store_injection},
          {"scenario_weights", scenario_weights},
          {"dialect", dialect_name(dialect)},
          {"opt", opt_level_name(opt)}};
}

namespace {

// Memory map shared by every generated program.
constexpr std::int64_t kInputBase = 64;
constexpr std::int64_t kGlobalBase = 4096;
constexpr std::int64_t kFrameBase = 512;
constexpr std::int64_t kFrameStride = 32;
constexpr std::int64_t kCellPool = 15;  // frame cells 1..15; cell 0 spills the loop counter

constexpr int rCnt = 0, rGuard = 4, rIn = 5, rGlob = 6, rFrame = 7;

class Rand {
 public:
  explicit Rand(std::uint64_t seed) : g_(seed) {}
  int between(int lo, int hi) { return lo + static_cast<int>(g_() % static_cast<std::uint64_t>(hi - lo + 1)); }
  double unit() { return static_cast<double>(g_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return unit() < p; }
  template <typename V>
  void shuffle(V& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[static_cast<std::size_t>(g_() % i)]);
  }
  std::uint64_t next() { return g_(); }

 private:
  std::mt19937_64 g_;
};

Operand R(int r) { return Operand::make_reg(r); }
Operand I(std::int64_t v) { return Operand::make_imm(v); }
Operand M(int base, std::int64_t off) { return Operand::make_mem(base, off); }

class ProcBuilder {
 public:
  explicit ProcBuilder(std::string name) : name_(std::move(name)) {}

  void op(Opcode code, std::vector<Operand> operands = {}) {
    ins_.push_back({code, std::move(operands), 0});
  }
  std::string label() { return "L" + std::to_string(next_++); }
  void place(const std::string& l) { labels_[l] = ins_.size(); }
  void jump(Opcode code, const std::string& l) { op(code, {Operand::make_label(l)}); }

  Procedure finish() { return assemble_procedure(name_, ins_, labels_); }

 private:
  std::string name_;
  std::vector<Instruction> ins_;
  std::map<std::string, std::size_t> labels_;
  int next_ = 0;
};

struct Plan {
  int id = 0;
  std::string name;
  int parent = -1;
  std::vector<int> children;
  Scenario scenario = Scenario::MotifA;
  bool positive = false;
  bool loop = false;
  int iterations = 1;
  int trips = 1;  // product of iterations along the call path
  std::int64_t input = 1;
  std::int64_t cell = 1;
};

class Generator {
 public:
  Generator(const GenConfig& c) : c_(c), rng_(c.seed) {}

  GeneratedProgram run() {
    const int n = rng_.between(c_.min_procs, c_.max_procs);
    plans_.resize(static_cast<std::size_t>(n) + 1);
    for (int j = 1; j <= n; ++j) plan(j);
    for (int j = 1; j <= n; ++j)
      if (plans_[j].parent > 0) plans_[static_cast<std::size_t>(plans_[j].parent)].children.push_back(j);

    GeneratedProgram out;
    out.program.dialect = c_.dialect;
    out.program.entry = "main";
    out.program.procedures.push_back(build_main());
    for (int j = 1; j <= n; ++j) {
      out.program.procedures.push_back(build_proc(plans_[static_cast<std::size_t>(j)]));
      const auto& p = plans_[static_cast<std::size_t>(j)];
      out.intent[p.name] = std::string(scenario_name(p.scenario)) + (p.positive ? "+" : "-");
    }
    if (c_.opt == OptLevel::Opt1) out.program = redundancy_removal(out.program);
    out.text = print_program(out.program, c_.dialect);
    return out;
  }

 private:
  Scenario draw_scenario(bool allow_c) {
    double total = 0;
    for (std::size_t i = 0; i < kScenarioCount; ++i)
      if (allow_c || i != static_cast<std::size_t>(Scenario::MotifC)) total += c_.scenario_weights[i];
    double u = rng_.unit() * total;
    for (std::size_t i = 0; i < kScenarioCount; ++i) {
      if (!allow_c && i == static_cast<std::size_t>(Scenario::MotifC)) continue;
      if (u < c_.scenario_weights[i]) return static_cast<Scenario>(i);
      u -= c_.scenario_weights[i];
    }
    return allow_c ? Scenario::Guarded : Scenario::MotifB;
  }

  void plan(int j) {
    Plan& p = plans_[static_cast<std::size_t>(j)];
    p.id = j;
    p.name = "f" + std::to_string(j);
    p.scenario = draw_scenario(j > 1);
    p.positive = rng_.chance(c_.dead_store_injection);
    if (j > 1 && (p.scenario == Scenario::MotifC || rng_.chance(c_.call_density)))
      p.parent = rng_.between(1, j - 1);
    // Calls nest loops; the trip-count product along a call path stays <= 64.
    const int outer = p.parent > 0 ? plans_[static_cast<std::size_t>(p.parent)].trips : 1;
    p.loop = p.scenario == Scenario::Guarded || rng_.chance(c_.loop_probability);
    p.iterations = p.loop ? std::min(rng_.between(4, 8), 64 / outer) : 1;
    if (p.iterations < 2) {
      p.loop = false;
      p.iterations = 1;
    }
    p.trips = outer * p.iterations;
    p.cell = rng_.between(1, static_cast<int>(kCellPool));
    const std::int64_t magnitude = rng_.between(1, 1000);
    p.input = magnitude;
    if (p.scenario == Scenario::Guarded) {
      // The guarded read is skipped, and the first store dies, exactly when
      // the input is negative. Twins share their code.
      if (p.positive) p.input = -magnitude;
    }
  }

  Procedure build_main() {
    ProcBuilder b("main");
    b.op(Opcode::Mov, {R(rIn), I(kInputBase)});
    for (std::size_t j = 1; j < plans_.size(); ++j) {
      b.op(Opcode::Mov, {R(1), I(plans_[j].input)});
      b.op(Opcode::St, {M(rIn, static_cast<std::int64_t>(j)), R(1)});
    }
    for (std::size_t j = 1; j < plans_.size(); ++j)
      if (plans_[j].parent < 0) b.op(Opcode::Call, {Operand::make_proc(plans_[j].name)});
    b.op(Opcode::Halt);
    return b.finish();
  }

  int temp() { return rng_.between(1, 3); }

  void arith(ProcBuilder& b) {
    const int t = temp();
    switch (rng_.between(0, 3)) {
      case 0: b.op(Opcode::Mov, {R(t), I(rng_.between(1, 64))}); break;
      case 1: b.op(Opcode::Add, {R(t), R(rng_.between(0, 3)), I(rng_.between(1, 16))}); break;
      case 2: b.op(Opcode::Mul, {R(t), R(rCnt), I(rng_.between(2, 4))}); break;
      default: {
        const int hi = rng_.between(8, 32);
        b.op(Opcode::Add, {R(t), R(rCnt), I(hi)});
        b.op(Opcode::Sub, {R(t), R(t), I(rng_.between(1, hi - 1))});
      }
    }
  }

  // Straight-line filler. Every frame store is read back before the block
  // ends, so filler never produces a dead store.
  void filler(ProcBuilder& b, const Plan& p) {
    const int items = rng_.between(c_.min_block_len, c_.max_block_len);
    std::set<std::int64_t> used{p.cell};
    for (int i = 0; i < items; ++i) {
      if (rng_.chance(0.4)) {
        std::int64_t cell;
        do cell = rng_.between(1, static_cast<int>(kCellPool));
        while (used.count(cell));
        used.insert(cell);
        b.op(Opcode::St, {M(rFrame, cell), R(temp())});
        if (rng_.chance(0.5)) arith(b);
        b.op(Opcode::Ld, {R(temp()), M(rFrame, cell)});
      } else {
        arith(b);
      }
    }
  }

  void diamond(ProcBuilder& b, const Plan& p) {
    auto other = b.label(), join = b.label();
    b.op(Opcode::CmpFlag, {Operand::make_rel(static_cast<Relation>(rng_.between(0, 5))), R(temp()),
                           I(rng_.between(1, 64))});
    b.jump(Opcode::BrTrue, other);
    filler(b, p);
    b.jump(Opcode::Jmp, join);
    b.place(other);
    filler(b, p);
    b.place(join);
  }

  void if_then(ProcBuilder& b, const Plan& p) {
    auto join = b.label();
    b.op(Opcode::CmpFlag, {Operand::make_rel(static_cast<Relation>(rng_.between(0, 5))), R(temp()),
                           I(rng_.between(1, 64))});
    b.jump(Opcode::BrFalse, join);
    filler(b, p);
    b.place(join);
  }

  void call(ProcBuilder& b, const Plan& p, const Plan& child) {
    if (p.loop) b.op(Opcode::St, {M(rFrame, 0), R(rCnt)});
    b.op(Opcode::Call, {Operand::make_proc(child.name)});
    b.op(Opcode::Mov, {R(rFrame), I(kFrameBase + kFrameStride * p.id)});
    if (p.loop) b.op(Opcode::Ld, {R(rCnt), M(rFrame, 0)});
    b.op(Opcode::Ld, {R(rGuard), M(rIn, p.id)});
    if (child.scenario == Scenario::MotifC) {
      // The callee left a result in its global cell. Overwriting it unread
      // kills the callee's store; the twin reads it instead.
      const std::int64_t g = child.id;
      if (child.positive) {
        b.op(Opcode::St, {M(rGlob, g), R(temp())});
        b.op(Opcode::Ld, {R(3), M(rGlob, g)});
      } else {
        b.op(Opcode::Ld, {R(3), M(rGlob, g)});
        b.op(Opcode::Add, {R(2), R(3), I(rng_.between(1, 16))});
      }
    }
  }

  void motif(ProcBuilder& b, const Plan& p) {
    const std::int64_t k = p.cell;
    switch (p.scenario) {
      case Scenario::MotifA:
        b.op(Opcode::St, {M(rFrame, k), R(1)});
        // Register-only work between the stores; the twin reads the cell.
        if (p.positive) {
          b.op(Opcode::Add, {R(3), R(1), I(rng_.between(1, 16))});
          b.op(Opcode::Add, {R(2), R(3), I(rng_.between(1, 16))});
        } else {
          b.op(Opcode::Ld, {R(3), M(rFrame, k)});
          b.op(Opcode::Ld, {R(2), M(rFrame, k)});
        }
        b.op(Opcode::St, {M(rFrame, k), R(2)});
        b.op(Opcode::Ld, {R(3), M(rFrame, k)});
        break;
      case Scenario::MotifB: {
        auto other = b.label(), join = b.label();
        b.op(Opcode::Add, {R(1), R(rCnt), I(rng_.between(1, 16))});
        b.op(Opcode::St, {M(rFrame, k), R(1)});
        b.op(Opcode::CmpFlag, {Operand::make_rel(static_cast<Relation>(rng_.between(0, 5))), R(1),
                               I(rng_.between(1, 16))});
        b.jump(Opcode::BrTrue, other);
        // Positive arms touch registers only; the twin reads the cell back.
        b.op(Opcode::Add, {R(2), R(1), I(rng_.between(1, 16))});
        if (p.positive) b.op(Opcode::Add, {R(3), R(2), I(rng_.between(1, 16))});
        else b.op(Opcode::Ld, {R(3), M(rFrame, k)});
        b.jump(Opcode::Jmp, join);
        b.place(other);
        b.op(Opcode::Mul, {R(2), R(1), I(2)});
        if (p.positive) b.op(Opcode::Add, {R(3), R(1), I(rng_.between(1, 16))});
        else b.op(Opcode::Ld, {R(3), M(rFrame, k)});
        b.place(join);
        b.op(Opcode::St, {M(rFrame, k), R(2)});
        b.op(Opcode::Ld, {R(3), M(rFrame, k)});
        break;
      }
      case Scenario::Guarded: {
        auto skip = b.label();
        // Values derive from the input, so its sign shows in snapshots.
        b.op(Opcode::Add, {R(1), R(rGuard), I(rng_.between(1, 16))});
        b.op(Opcode::St, {M(rFrame, k), R(1)});
        b.op(Opcode::CmpFlag, {Operand::make_rel(Relation::Lt), R(rGuard), I(0)});
        b.jump(Opcode::BrTrue, skip);
        b.op(Opcode::Ld, {R(3), M(rFrame, k)});
        b.place(skip);
        b.op(Opcode::Add, {R(2), R(1), I(rng_.between(1, 16))});
        b.op(Opcode::St, {M(rFrame, k), R(2)});
        b.op(Opcode::Ld, {R(3), M(rFrame, k)});
        break;
      }
      case Scenario::MotifC:
        break;  // emitted after the loop, see build_proc
    }
  }

  Procedure build_proc(const Plan& p) {
    ProcBuilder b(p.name);
    b.op(Opcode::Mov, {R(rFrame), I(kFrameBase + kFrameStride * p.id)});
    b.op(Opcode::Mov, {R(rGlob), I(kGlobalBase)});
    b.op(Opcode::Mov, {R(rIn), I(kInputBase)});
    b.op(Opcode::Ld, {R(rGuard), M(rIn, p.id)});
    if (p.loop) b.op(Opcode::Mov, {R(rCnt), I(0)});
    const auto head = b.label();
    b.place(head);

    // Segment kinds: 0 filler, 1 diamond, 2 if-then, 3 motif, 4+k call child k.
    std::vector<int> segments;
    const int fill = rng_.between(c_.min_segments, c_.max_segments);
    for (int i = 0; i < fill; ++i) segments.push_back(rng_.between(0, 2));
    segments.push_back(3);
    for (std::size_t k = 0; k < p.children.size(); ++k) segments.push_back(4 + static_cast<int>(k));
    rng_.shuffle(segments);
    filler(b, p);  // the loop head never starts with a branch
    for (int s : segments) {
      switch (s) {
        case 0: filler(b, p); break;
        case 1: diamond(b, p); break;
        case 2: if_then(b, p); break;
        case 3:
          // Branches on both sides give the motif a basic block of its own.
          if (p.scenario != Scenario::MotifC) {
            if_then(b, p);
            motif(b, p);
            const auto next = b.label();
            b.jump(Opcode::Jmp, next);
            b.place(next);
          }
          break;
        default: call(b, p, plans_[static_cast<std::size_t>(p.children[static_cast<std::size_t>(s - 4)])]);
      }
    }
    if (p.loop) {
      b.op(Opcode::Add, {R(rCnt), R(rCnt), I(1)});
      b.op(Opcode::CmpFlag, {Operand::make_rel(Relation::Lt), R(rCnt), I(p.iterations)});
      b.jump(Opcode::BrTrue, head);
    }
    if (p.scenario == Scenario::MotifC) {
      // Outside the loop: a store repeated per iteration would die by itself.
      b.op(Opcode::Add, {R(1), R(rCnt), I(rng_.between(1, 16))});
      b.op(Opcode::St, {M(rGlob, p.id), R(1)});
    }
    b.op(Opcode::Ret);
    return b.finish();
  }

  GenConfig c_;
  Rand rng_;
  std::vector<Plan> plans_;
};

bool writes_register(const Instruction& ins, int reg) {
  switch (ins.op) {
    case Opcode::Mov:
    case Opcode::Add:
    case Opcode::Sub:
    case Opcode::Mul:
    case Opcode::Ld:
      return ins.operands[0].kind == Operand::Kind::Reg && ins.operands[0].reg == reg;
    default:
      return false;
  }
}

// True when the store at position i of the block is overwritten later in the
// same block with no possible read in between.
bool locally_dead(const std::vector<Instruction>& block, std::size_t i) {
  const MemRef m = block[i].operands[0].mem;
  for (std::size_t j = i + 1; j < block.size(); ++j) {
    const auto& ins = block[j];
    if (ins.op == Opcode::St && ins.operands[0].mem == m) return true;
    if (ins.op == Opcode::Ld) {
      const MemRef r = ins.operands[1].mem;
      if (r.base != m.base || r.offset == m.offset) return false;  // same cell, or may alias
    }
    if (ins.op == Opcode::Call) return false;
    if (writes_register(ins, m.base)) return false;
  }
  return false;
}

}  // namespace

Program redundancy_removal(const Program& program) {
  Program out = program;
  for (auto& proc : out.procedures) {
    std::vector<Instruction> flat;
    std::map<std::string, std::size_t> labels;
    for (const auto& block : proc.blocks) {
      std::vector<bool> keep(block.instructions.size(), true);
      for (std::size_t i = 0; i < block.instructions.size(); ++i)
        if (block.instructions[i].op == Opcode::St && locally_dead(block.instructions, i)) keep[i] = false;
      // A label always lands on the first surviving instruction; the block's
      // final instruction is never a store, so one always survives.
      for (const auto& l : block.labels) labels[l] = flat.size();
      for (std::size_t i = 0; i < block.instructions.size(); ++i) {
        if (!keep[i]) continue;
        Instruction ins = block.instructions[i];
        if (ins.op == Opcode::Mul && ins.operands[2].kind == Operand::Kind::Imm && ins.operands[2].imm == 2)
          ins = {Opcode::Add, {ins.operands[0], ins.operands[1], ins.operands[1]}, ins.line};
        for (auto& o : ins.operands) o.target = -1;
        flat.push_back(std::move(ins));
      }
    }
    proc = assemble_procedure(proc.name, flat, labels);
  }
  return out;
}

GeneratedProgram generate_program(const GenConfig& config) {
  if (config.min_procs < 1 || config.min_procs > config.max_procs || config.min_segments < 0 ||
      config.min_segments > config.max_segments || config.min_block_len < 1 ||
      config.min_block_len > config.max_block_len)
    throw Error("InvalidArgument", "generator ranges must be non-empty", ErrorCategory::Usage);
  for (double p : {config.call_density, config.loop_probability, config.dead_store_injection})
    if (p < 0 || p > 1) throw Error("InvalidArgument", "generator probabilities must lie in [0,1]", ErrorCategory::Usage);
  if (config.max_procs > 14) throw Error("InvalidArgument", "at most 14 procedures fit the input area", ErrorCategory::Usage);
  return Generator(config).run();
}

std::vector<SampleRecord> program_samples(const Program& program, const std::string& program_id,
                                          const std::string& tag,
                                          const std::map<std::string, std::string>& intent) {
  ProfileOptions opts;
  opts.max_steps = kGenMaxSteps;
  auto run = profile_run(program, {}, opts);
  if (run.exec.exit != ExitStatus::Halted)
    throw Error("GenerationError", "program " + program_id + " did not halt: " +
                                       std::string(exit_status_name(run.exec.exit)));
  std::vector<int> label(program.procedures.size(), 0);
  for (const auto& r : detect_dead_stores(run.exec.trace)) label[static_cast<std::size_t>(r.killed_site.proc)] = 1;

  std::vector<CctNodeRecord> cct;
  for (const auto& node : run.cct.nodes) {
    CctNodeRecord rec{node.proc, node.parent, {}};
    for (const auto& s : node.snapshots)
      for (auto& t : value_tokens(s)) rec.tokens.push_back(std::move(t));
    cct.push_back(std::move(rec));
  }

  std::vector<SampleRecord> out;
  for (std::size_t i = 0; i < program.procedures.size(); ++i) {
    const auto& proc = program.procedures[i];
    if (proc.name == program.entry || !run.exec.executed[i]) continue;
    SampleRecord s;
    s.program_id = program_id;
    s.proc = proc.name;
    s.tag = tag;
    s.dialect = program.dialect;
    for (const auto& block : proc.blocks) {
      std::vector<std::vector<std::string>> ins;
      for (const auto& x : block.instructions) ins.push_back(token_texts(x, program.dialect));
      s.blocks.push_back(std::move(ins));
    }
    s.cfg = build_cfg(proc);
    s.cct = cct;
    s.label = label[i];
    s.cost = run.exec.steps_per_proc[i];
    if (auto it = intent.find(proc.name); it != intent.end()) s.motif = it->second;
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

std::string generator_version() {
  // Bump when generated programs or sample records change shape.
  static const std::string kVersion = "gen-4";
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(kVersion)));
  return kVersion + "-" + buf;
}

std::uint64_t config_seed(std::uint64_t seed, const std::string& tag) {
  return fnv1a(tag, fnv1a(std::to_string(seed)));
}

namespace {

json split_counts(const std::vector<SampleRecord>& v) {
  std::size_t pos = 0;
  for (const auto& s : v) pos += static_cast<std::size_t>(s.label);
  return {{"total", v.size()}, {"positive", pos}, {"negative", v.size() - pos}};
}

void shuffle_samples(std::vector<SampleRecord>& v, std::uint64_t seed) {
  Rand r(seed);
  r.shuffle(v);
}

}  // namespace

DatasetSplit build_dataset(const GenConfig& base, std::size_t samples, const SplitRatios& ratios,
                           std::uint64_t seed, std::size_t max_programs) {
  const double sum = ratios.train + ratios.val + ratios.test;
  if (std::abs(sum - 1.0) > 1e-9 || ratios.train < 0 || ratios.val < 0 || ratios.test < 0)
    throw Error("InvalidArgument", "split ratios must be non-negative and sum to 1", ErrorCategory::Usage);
  if (max_programs == 0) max_programs = std::max<std::size_t>(200, samples * 4);

  const std::string tag = config_tag(base.dialect, base.opt);
  const std::size_t n_train = static_cast<std::size_t>(std::llround(ratios.train * static_cast<double>(samples)));
  const std::size_t n_val = static_cast<std::size_t>(std::llround(ratios.val * static_cast<double>(samples)));
  const std::size_t n_test = samples - std::min(samples, n_train + n_val);
  const std::array<std::size_t, 3> want{n_train, n_val, n_test};

  DatasetSplit split;
  split.tag = tag;
  std::array<std::vector<SampleRecord>*, 3> roles{&split.train, &split.val, &split.test};
  Rand rng(seed);
  std::size_t role = 0, programs = 0;
  std::array<std::size_t, 2> have{0, 0};
  auto quota = [&](std::size_t r, int cls) { return cls == 1 ? want[r] / 2 : want[r] - want[r] / 2; };
  auto role_full = [&] { return have[0] >= quota(role, 0) && have[1] >= quota(role, 1); };

  while (role < 3 && role_full()) {
    ++role;
    have = {0, 0};
  }
  while (role < 3) {
    if (programs >= max_programs)
      throw GenerationBudgetExceeded("could not fill balanced " + tag + " splits within " +
                                     std::to_string(max_programs) + " programs");
    GenConfig g = base;
    g.seed = rng.next();
    auto gen = generate_program(g);
    char id[32];
    std::snprintf(id, sizeof id, "%s/%06zu", tag.c_str(), programs++);
    auto parsed = parse_program(gen.text, base.dialect);
    for (auto& s : program_samples(parsed, id, tag, gen.intent)) {
      const int cls = s.label;
      if (have[static_cast<std::size_t>(cls)] >= quota(role, cls)) continue;
      ++have[static_cast<std::size_t>(cls)];
      roles[role]->push_back(std::move(s));
    }
    while (role < 3 && role_full()) {
      ++role;
      have = {0, 0};
    }
  }
  for (std::size_t r = 0; r < 3; ++r) shuffle_samples(*roles[r], seed + 1 + r);

  auto generator_json = base.to_json();
  generator_json.erase("seed");
  split.manifest = {{"tag", tag},
                    {"seed", seed},
                    {"generator_version", generator_version()},
                    {"generator", generator_json},
                    {"ratios", {ratios.train, ratios.val, ratios.test}},
                    {"programs", programs},
                    {"counts", {{"train", split_counts(split.train)},
                                {"val", split_counts(split.val)},
                                {"test", split_counts(split.test)}}}};
  return split;
}

DatasetSplit mix_hybrid(const std::vector<DatasetSplit>& splits, std::uint64_t seed) {
  DatasetSplit h;
  h.tag = "Hybrid";
  json sources = json::array();
  for (const auto& s : splits) {
    h.train.insert(h.train.end(), s.train.begin(), s.train.end());
    h.val.insert(h.val.end(), s.val.begin(), s.val.end());
    h.test.insert(h.test.end(), s.test.begin(), s.test.end());
    sources.push_back(s.tag);
  }
  shuffle_samples(h.train, seed + 1);
  shuffle_samples(h.val, seed + 2);
  shuffle_samples(h.test, seed + 3);
  h.manifest = {{"tag", "Hybrid"},
                {"seed", seed},
                {"generator_version", generator_version()},
                {"sources", sources},
                {"counts", {{"train", split_counts(h.train)},
                            {"val", split_counts(h.val)},
                            {"test", split_counts(h.test)}}}};
  return h;
}

}  // namespace graphspy
