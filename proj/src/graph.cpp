#include "graphspy/graph.hpp"

#include <algorithm>
#include <bit>

namespace graphspy {

std::string_view edge_kind_name(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::FallThrough: return "FallThrough";
    case EdgeKind::BranchTrue: return "BranchTrue";
    case EdgeKind::BranchFalse: return "BranchFalse";
    case EdgeKind::Jump: return "Jump";
  }
  return "?";
}

std::optional<EdgeKind> parse_edge_kind(std::string_view text) {
  for (std::size_t i = 0; i < kEdgeKindCount; ++i) {
    auto k = static_cast<EdgeKind>(i);
    if (edge_kind_name(k) == text) return k;
  }
  return std::nullopt;
}

int Cfg::out_degree(int node) const {
  return static_cast<int>(std::count_if(edges.begin(), edges.end(),
                                        [&](const CfgEdge& e) { return e.src == node; }));
}

std::size_t AdjMatrix::ones() const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
}

Cfg build_cfg(const Procedure& proc) {
  Cfg cfg;
  cfg.proc = proc.name;
  cfg.node_count = static_cast<int>(proc.blocks.size());
  auto add = [&](int src, int dst, EdgeKind kind) {
    if (dst < 0 || dst >= cfg.node_count) throw DanglingLabel(proc.name, dst);
    cfg.edges.push_back({src, dst, kind});
  };
  for (const auto& b : proc.blocks) {
    const Instruction& last = b.instructions.back();
    const int next = b.id + 1;
    switch (last.op) {
      case Opcode::Ret:
      case Opcode::Halt:
        break;
      case Opcode::Jmp:
        add(b.id, last.operands[0].target, EdgeKind::Jump);
        break;
      case Opcode::BrTrue:
        add(b.id, last.operands[0].target, EdgeKind::BranchTrue);
        add(b.id, next, EdgeKind::BranchFalse);
        break;
      case Opcode::BrFalse:
        add(b.id, last.operands[0].target, EdgeKind::BranchFalse);
        add(b.id, next, EdgeKind::BranchTrue);
        break;
      default:
        add(b.id, next, EdgeKind::FallThrough);
        break;
    }
  }
  std::sort(cfg.edges.begin(), cfg.edges.end());
  cfg.edges.erase(std::unique(cfg.edges.begin(), cfg.edges.end()), cfg.edges.end());
  return cfg;
}

AdjMatrix adjacency(const Cfg& cfg) {
  AdjMatrix a;
  a.n = cfg.node_count;
  a.cells.assign(static_cast<std::size_t>(a.n) * static_cast<std::size_t>(a.n), 0);
  for (const auto& e : cfg.edges)
    a.cells[static_cast<std::size_t>(e.src) * static_cast<std::size_t>(a.n) +
            static_cast<std::size_t>(e.dst)] = 1;
  return a;
}

std::vector<std::pair<int, int>> Cct::edges() const {
  std::vector<std::pair<int, int>> out;
  for (const auto& n : nodes)
    for (int c : n.children) out.emplace_back(n.id, c);
  return out;
}

namespace {

class CctBuilder : public ExecutionObserver {
 public:
  CctBuilder(const Program& program, const ProfileOptions& options)
      : program_(program), options_(options) {
    CctNode root;
    root.id = 0;
    root.proc = program.entry;
    cct_.nodes.push_back(std::move(root));
    stack_.push_back({0, {}});
  }

  void on_instruction(const MachineState& st, const Instruction&, std::uint64_t step) override {
    if (step % options_.sample_period == 0) sample(st);
  }

  void on_event(const MachineState&, const TraceEvent& e) override {
    events_ = e.seq + 1;
    switch (e.kind) {
      case EventKind::Store:
        stack_.back().pending.emplace_back(e.address, e.value);
        break;
      case EventKind::Call: {
        const auto& ins = program_.procedures[static_cast<std::size_t>(e.site.proc)]
                              .blocks[static_cast<std::size_t>(e.site.block)]
                              .instructions[static_cast<std::size_t>(e.site.index)];
        CallSite site{program_.procedures[static_cast<std::size_t>(e.site.proc)].name, e.site.block,
                      e.site.index};
        stack_.push_back({child(stack_.back().node, site, ins.operands[0].name), {}});
        break;
      }
      case EventKind::Ret:
        stack_.pop_back();
        if (stack_.empty()) stack_.push_back({0, {}});  // returned from entry
        break;
      default:
        break;
    }
  }

  void on_exit(const MachineState& st, ExitStatus) override {
    if (options_.force_final_snapshot) sample(st);
  }

  Cct take() { return std::move(cct_); }

 private:
  struct ActiveFrame {
    int node;
    std::vector<std::pair<std::uint64_t, std::int64_t>> pending;
  };

  int child(int parent, const CallSite& site, const std::string& callee) {
    for (int c : cct_.nodes[static_cast<std::size_t>(parent)].children) {
      const auto& n = cct_.nodes[static_cast<std::size_t>(c)];
      if (n.proc == callee && n.call_site == site) return c;
    }
    CctNode node;
    node.id = static_cast<int>(cct_.nodes.size());
    node.proc = callee;
    node.call_site = site;
    node.parent = parent;
    cct_.nodes[static_cast<std::size_t>(parent)].children.push_back(node.id);
    cct_.nodes.push_back(std::move(node));
    return cct_.nodes.back().id;
  }

  void sample(const MachineState& st) {
    auto& frame = stack_.back();
    auto& node = cct_.nodes[static_cast<std::size_t>(frame.node)];
    if (node.snapshots.size() >= options_.snapshot_cap) return;
    Snapshot s;
    s.seq = events_;
    s.registers = st.registers;
    s.stored_values = std::move(frame.pending);
    frame.pending.clear();
    node.snapshots.push_back(std::move(s));
  }

  const Program& program_;
  const ProfileOptions& options_;
  Cct cct_;
  std::vector<ActiveFrame> stack_;
  std::uint64_t events_ = 0;
};

}  // namespace

ProfileResult profile_run(const Program& program, const Memory& init_memory,
                          const ProfileOptions& options) {
  if (options.sample_period == 0)
    throw Error("InvalidArgument", "sample_period must be at least 1", ErrorCategory::Usage);
  CctBuilder builder(program, options);
  ExecOptions exec;
  exec.max_steps = options.max_steps;
  exec.max_call_depth = options.max_call_depth;
  ProfileResult out;
  out.exec = execute(program, init_memory, exec, &builder);
  if (out.exec.exit == ExitStatus::Fault && out.exec.fault_reason == "call stack overflow")
    throw StackOverflow();
  out.cct = builder.take();
  return out;
}

Cct profile_cct(const Program& program, const Memory& init_memory, const ProfileOptions& options) {
  return profile_run(program, init_memory, options).cct;
}

std::string value_token(std::int64_t v) {
  if (v == 0) return "V0";
  std::uint64_t mag = v < 0 ? static_cast<std::uint64_t>(-(v + 1)) + 1 : static_cast<std::uint64_t>(v);
  int lg = 63 - std::countl_zero(mag);
  return std::string(v < 0 ? "V-" : "V+") + std::to_string(lg);
}

std::string address_token(std::uint64_t addr) {
  int lg = addr == ~std::uint64_t{0} ? 64 : 63 - std::countl_zero(addr + 1);
  return "A" + std::to_string(lg);
}

std::vector<std::string> value_tokens(const Snapshot& s) {
  std::vector<std::string> out;
  out.reserve(s.registers.size() + 2 * s.stored_values.size());
  for (auto r : s.registers) out.push_back(value_token(r));
  for (const auto& [addr, v] : s.stored_values) {
    out.push_back(address_token(addr));
    out.push_back(value_token(v));
  }
  return out;
}

nlohmann::ordered_json cfg_to_json(const Cfg& cfg) {
  nlohmann::ordered_json j;
  j["kind"] = "cfg";
  j["proc"] = cfg.proc;
  auto nodes = nlohmann::ordered_json::array();
  for (int i = 0; i < cfg.node_count; ++i) nodes.push_back(i);
  j["nodes"] = std::move(nodes);
  auto edges = nlohmann::ordered_json::array();
  for (const auto& e : cfg.edges) edges.push_back({e.src, e.dst, edge_kind_name(e.kind)});
  j["edges"] = std::move(edges);
  return j;
}

Cfg cfg_from_json(const nlohmann::ordered_json& j) {
  Cfg cfg;
  cfg.proc = j.at("proc").get<std::string>();
  cfg.node_count = static_cast<int>(j.at("nodes").size());
  for (const auto& e : j.at("edges")) {
    auto kind = parse_edge_kind(e.at(2).get<std::string>());
    if (!kind) throw Error("FormatError", "unknown edge kind in cfg record");
    cfg.edges.push_back({e.at(0).get<int>(), e.at(1).get<int>(), *kind});
  }
  return cfg;
}

nlohmann::ordered_json cct_to_json(const Cct& cct, const std::string& program_id) {
  nlohmann::ordered_json j;
  j["kind"] = "cct";
  j["program"] = program_id;
  auto nodes = nlohmann::ordered_json::array();
  for (const auto& n : cct.nodes) {
    nlohmann::ordered_json jn;
    jn["id"] = n.id;
    jn["proc"] = n.proc;
    jn["parent"] = n.parent;
    if (n.call_site) {
      jn["call_site"] = {{"proc", n.call_site->proc}, {"block", n.call_site->block},
                         {"index", n.call_site->index}};
    } else {
      jn["call_site"] = nullptr;
    }
    jn["children"] = n.children;
    auto snaps = nlohmann::ordered_json::array();
    for (const auto& s : n.snapshots) {
      nlohmann::ordered_json js;
      js["seq"] = s.seq;
      js["registers"] = s.registers;
      auto stored = nlohmann::ordered_json::array();
      for (const auto& [a, v] : s.stored_values) stored.push_back({a, v});
      js["stored_values"] = std::move(stored);
      snaps.push_back(std::move(js));
    }
    jn["snapshots"] = std::move(snaps);
    nodes.push_back(std::move(jn));
  }
  j["nodes"] = std::move(nodes);
  auto edges = nlohmann::ordered_json::array();
  for (auto [p, c] : cct.edges()) edges.push_back({p, c, "call"});
  j["edges"] = std::move(edges);
  return j;
}

Cct cct_from_json(const nlohmann::ordered_json& j) {
  Cct cct;
  for (const auto& jn : j.at("nodes")) {
    CctNode n;
    n.id = jn.at("id").get<int>();
    n.proc = jn.at("proc").get<std::string>();
    n.parent = jn.at("parent").get<int>();
    if (!jn.at("call_site").is_null()) {
      const auto& cs = jn.at("call_site");
      n.call_site = CallSite{cs.at("proc").get<std::string>(), cs.at("block").get<int>(),
                             cs.at("index").get<int>()};
    }
    n.children = jn.at("children").get<std::vector<int>>();
    for (const auto& js : jn.at("snapshots")) {
      Snapshot s;
      s.seq = js.at("seq").get<std::uint64_t>();
      s.registers = js.at("registers").get<std::array<std::int64_t, kRegisterCount>>();
      for (const auto& p : js.at("stored_values"))
        s.stored_values.emplace_back(p.at(0).get<std::uint64_t>(), p.at(1).get<std::int64_t>());
      n.snapshots.push_back(std::move(s));
    }
    cct.nodes.push_back(std::move(n));
  }
  return cct;
}

}  // namespace graphspy
