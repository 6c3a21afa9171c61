#include <gtest/gtest.h>

#include <limits>
#include <set>

#include "graphspy/corpus.hpp"
#include "graphspy/graph.hpp"

using namespace graphspy;

namespace {

Procedure proc_of(const char* text, const char* name = "main") {
  static std::vector<Program> keep;
  keep.push_back(parse_program(text, DialectKind::A));
  return *keep.back().find(name);
}

bool has_edge(const Cfg& c, int s, int d, EdgeKind k) {
  return std::find(c.edges.begin(), c.edges.end(), CfgEdge{s, d, k}) != c.edges.end();
}

const char* kDiamond = R"(proc main:
  cmp lt, r1, 0
  jt neg
  mov r2, 1
  jmp join
neg:
  mov r2, 2
join:
  st [r0+0], r2
  halt
)";

const char* kPaths = R"(proc main:
  call sub
  call cmp
  halt

proc sub:
  call cmp
  ret

proc cmp:
  mov r1, 1
  ret
)";

const char* kTwice = R"(proc main:
  mov r1, 0
L:
  call f
  add r1, r1, 1
  cmp lt, r1, 2
  jt L
  halt

proc f:
  mov r2, 4
  st [r0+9], r2
  ret
)";

}  // namespace

TEST(Cfg, StraightLine) {
  auto c = build_cfg(proc_of("proc main:\n  mov r1, 1\n  add r1, r1, 2\n  halt\n"));
  EXPECT_EQ(c.node_count, 1);
  EXPECT_TRUE(c.edges.empty());
  auto a = adjacency(c);
  EXPECT_EQ(a.n, 1);
  EXPECT_EQ(a.ones(), 0u);
}

TEST(Cfg, CallFallsThrough) {
  auto c = build_cfg(proc_of("proc main:\n  mov r1, 1\n  call f\n  halt\nproc f:\n  ret\n"));
  ASSERT_EQ(c.node_count, 2);
  EXPECT_EQ(c.edges, (std::vector<CfgEdge>{{0, 1, EdgeKind::FallThrough}}));
}

TEST(Cfg, Diamond) {
  auto c = build_cfg(proc_of(kDiamond));
  ASSERT_EQ(c.node_count, 4);
  EXPECT_TRUE(has_edge(c, 0, 2, EdgeKind::BranchTrue));
  EXPECT_TRUE(has_edge(c, 0, 1, EdgeKind::BranchFalse));
  EXPECT_TRUE(has_edge(c, 1, 3, EdgeKind::Jump));
  EXPECT_TRUE(has_edge(c, 2, 3, EdgeKind::FallThrough));
  EXPECT_EQ(c.edges.size(), 4u);
  EXPECT_EQ(adjacency(c).ones(), 4u);
  EXPECT_EQ(c.out_degree(3), 0);
}

TEST(Cfg, BrFalseFallThroughIsTrueEdge) {
  auto c = build_cfg(proc_of("proc main:\n  cmp eq, r1, 0\n  jf out\n  mov r1, 1\nout:\n  halt\n"));
  EXPECT_TRUE(has_edge(c, 0, 2, EdgeKind::BranchFalse));
  EXPECT_TRUE(has_edge(c, 0, 1, EdgeKind::BranchTrue));
}

TEST(Cfg, LoopBackEdge) {
  auto c = build_cfg(proc_of("proc main:\n  mov r1, 0\nL:\n  add r1, r1, 1\n  cmp lt, r1, 4\n  jt L\n  halt\n"));
  ASSERT_EQ(c.node_count, 3);
  EXPECT_TRUE(has_edge(c, 1, 1, EdgeKind::BranchTrue));
  EXPECT_TRUE(has_edge(c, 1, 2, EdgeKind::BranchFalse));
  auto a = adjacency(c);
  EXPECT_EQ(a.at(1, 1), 1);
  EXPECT_EQ(a.at(0, 0), 0);
}

TEST(Cfg, DanglingTargetIsRejected) {
  auto p = proc_of("proc main:\n  jmp L\nL:\n  halt\n");
  p.blocks[0].instructions[0].operands[0].target = 7;
  EXPECT_THROW(build_cfg(p), DanglingLabel);
}

TEST(Cfg, CorpusInvariants) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    GenConfig g;
    g.seed = seed;
    g.opt = seed % 2 ? OptLevel::Opt0 : OptLevel::Opt1;
    auto prog = generate_program(g).program;
    auto reparsed = parse_program(print_program(prog, DialectKind::B), DialectKind::B);
    for (std::size_t p = 0; p < prog.procedures.size(); ++p) {
      const auto& proc = prog.procedures[p];
      auto c = build_cfg(proc);
      EXPECT_EQ(c.node_count, static_cast<int>(proc.blocks.size()));
      int total = 0;
      for (int n = 0; n < c.node_count; ++n) total += c.out_degree(n);
      EXPECT_EQ(total, static_cast<int>(c.edges.size()));
      for (const auto& e : c.edges) {
        EXPECT_LT(e.src, c.node_count);
        EXPECT_LT(e.dst, c.node_count);
      }
      for (const auto& b : proc.blocks) {
        auto op = b.instructions.back().op;
        if (op == Opcode::BrTrue || op == Opcode::BrFalse) {
          EXPECT_EQ(c.out_degree(b.id), 2);
          int t = 0, f = 0;
          for (const auto& e : c.edges)
            if (e.src == b.id) (e.kind == EdgeKind::BranchTrue ? t : f) += 1;
          EXPECT_EQ(t, 1);
          EXPECT_EQ(f, 1);
        }
        if (op == Opcode::Ret || op == Opcode::Halt) EXPECT_EQ(c.out_degree(b.id), 0);
      }
      auto a = adjacency(c);
      EXPECT_EQ(a.cells, adjacency(build_cfg(reparsed.procedures[p])).cells);
      for (int i = 0; i < a.n; ++i)
        if (a.at(i, i)) EXPECT_TRUE(has_edge(c, i, i, EdgeKind::BranchTrue) || has_edge(c, i, i, EdgeKind::Jump) ||
                                    has_edge(c, i, i, EdgeKind::BranchFalse));
    }
  }
}

TEST(Cfg, JsonRoundTrip) {
  auto c = build_cfg(proc_of(kDiamond));
  auto j = cfg_to_json(c);
  EXPECT_EQ(j["kind"], "cfg");
  EXPECT_EQ(j.dump(), R"({"kind":"cfg","proc":"main","nodes":[0,1,2,3],"edges":[[0,1,"BranchFalse"],[0,2,"BranchTrue"],[1,3,"Jump"],[2,3,"FallThrough"]]})");
  auto back = cfg_from_json(j);
  EXPECT_EQ(back.edges, c.edges);
  EXPECT_EQ(back.node_count, c.node_count);
}

TEST(Cct, SameSiteMerges) {
  auto p = parse_program(kTwice, DialectKind::A);
  ProfileOptions o;
  o.sample_period = 1;
  auto cct = profile_cct(p, {}, o);
  ASSERT_EQ(cct.nodes.size(), 2u);
  EXPECT_EQ(cct.nodes[0].proc, "main");
  EXPECT_EQ(cct.nodes[1].proc, "f");
  EXPECT_EQ(cct.nodes[1].parent, 0);
  EXPECT_EQ(cct.nodes[1].snapshots.size(), 6u);  // three instructions, two calls
}

TEST(Cct, DistinctPathsStayDistinct) {
  auto cct = profile_cct(parse_program(kPaths, DialectKind::A), {});
  int cmp_nodes = 0;
  for (const auto& n : cct.nodes) cmp_nodes += n.proc == "cmp";
  EXPECT_EQ(cmp_nodes, 2);
  EXPECT_EQ(cct.nodes.size(), 4u);
  EXPECT_EQ(cct.edges().size(), 3u);
}

TEST(Cct, LongPeriodAndFinalSnapshot) {
  auto p = parse_program(kPaths, DialectKind::A);
  ProfileOptions o;
  o.sample_period = 1000;
  auto cct = profile_cct(p, {}, o);
  for (const auto& n : cct.nodes) EXPECT_LE(n.snapshots.size(), 1u);
  o.force_final_snapshot = true;
  auto forced = profile_cct(p, {}, o);
  EXPECT_EQ(forced.nodes[0].snapshots.size(), 1u);
  EXPECT_THROW(profile_cct(p, {}, ProfileOptions{100000, 0}), Error);
}

TEST(Cct, CapAndOverflow) {
  auto p = parse_program(kTwice, DialectKind::A);
  ProfileOptions o;
  o.sample_period = 1;
  o.snapshot_cap = 2;
  for (const auto& n : profile_cct(p, {}, o).nodes) EXPECT_LE(n.snapshots.size(), 2u);
  auto rec = parse_program("proc main:\n  call main\n  halt\n", DialectKind::A);
  EXPECT_THROW(profile_cct(rec, {}), StackOverflow);
}

TEST(Cct, DeterministicTreeAndSoundSnapshots) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    GenConfig g;
    g.seed = seed;
    auto prog = generate_program(g).program;
    ProfileOptions o;
    o.max_steps = kGenMaxSteps;
    auto a = profile_run(prog, {}, o);
    auto b = profile_run(prog, {}, o);
    EXPECT_EQ(cct_to_json(a.cct, "p").dump(), cct_to_json(b.cct, "p").dump());
    std::set<std::tuple<std::string, std::uint64_t, std::int64_t>> stores;
    for (const auto& e : a.exec.trace)
      if (e.kind == EventKind::Store)
        stores.emplace(prog.procedures[static_cast<std::size_t>(e.site.proc)].name, e.address, e.value);
    for (const auto& n : a.cct.nodes) {
      if (n.parent >= 0) EXPECT_LT(n.parent, n.id);  // parents precede children: acyclic
      for (const auto& s : n.snapshots)
        for (const auto& [addr, v] : s.stored_values) EXPECT_TRUE(stores.count({n.proc, addr, v}));
    }
    auto back = cct_from_json(cct_to_json(a.cct, "p"));
    EXPECT_EQ(cct_to_json(back, "p").dump(), cct_to_json(a.cct, "p").dump());
  }
}

TEST(Tokens, Buckets) {
  EXPECT_EQ(value_token(0), "V0");
  EXPECT_EQ(value_token(5), "V+2");
  EXPECT_EQ(value_token(7), "V+2");
  EXPECT_EQ(value_token(1), "V+0");
  EXPECT_EQ(value_token(-1), "V-0");
  EXPECT_EQ(value_token(-9), "V-3");
  EXPECT_EQ(value_token(std::numeric_limits<std::int64_t>::max()), "V+62");
  EXPECT_EQ(value_token(std::numeric_limits<std::int64_t>::min()), "V-63");
  EXPECT_EQ(address_token(0), "A0");
  EXPECT_EQ(address_token(4096), "A12");
  Snapshot s;
  s.registers = {0, 5, 0, 0, 0, 0, 0, -2};
  s.stored_values = {{64, 7}};
  auto t = value_tokens(s);
  ASSERT_EQ(t.size(), 10u);
  EXPECT_EQ(t[8], "A6");
  EXPECT_EQ(t[9], "V+2");
}

TEST(Tokens, BoundedVocabulary) {
  std::set<std::string> all;
  for (std::int64_t v : {std::int64_t{0}, std::int64_t{1}, std::int64_t{-1}}) all.insert(value_token(v));
  for (int k = 1; k < 63; ++k) {
    all.insert(value_token(std::int64_t{1} << k));
    all.insert(value_token(-(std::int64_t{1} << k)));
  }
  all.insert(value_token(std::numeric_limits<std::int64_t>::min()));
  EXPECT_LE(all.size(), 130u);

  std::set<std::string> seen;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    GenConfig g;
    g.seed = seed;
    auto cct = profile_run(generate_program(g).program, {}, {kGenMaxSteps}).cct;
    for (const auto& n : cct.nodes)
      for (const auto& s : n.snapshots)
        for (const auto& t : value_tokens(s))
          if (t[0] == 'V') seen.insert(t);
  }
  EXPECT_LE(seen.size(), 130u);
  for (const auto& t : seen) EXPECT_TRUE(all.count(t)) << t;
}
