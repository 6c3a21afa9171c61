#include <gtest/gtest.h>

#include <random>

#include "graphspy/corpus.hpp"
#include "graphspy/selfcheck.hpp"
#include "graphspy/vm.hpp"

using namespace graphspy;

namespace {

TraceEvent mem_event(std::uint64_t seq, EventKind kind, std::uint64_t addr, int index = 0) {
  TraceEvent e;
  e.seq = seq;
  e.kind = kind;
  e.address = addr;
  e.site = {0, 0, index};
  return e;
}

std::size_t count_kind(const Trace& t, EventKind k) {
  return static_cast<std::size_t>(std::count_if(t.begin(), t.end(), [&](const TraceEvent& e) { return e.kind == k; }));
}

const char* kStraddle = R"(proc main:
  mov r6, 100
  call f
  call g
  halt

proc f:
  mov r1, 1
  st [r6+0], r1
  ret

proc g:
  mov r1, 2
  st [r6+0], r1
  ret

proc h:
  st [r6+0], r1
  st [r6+0], r1
  ret
)";

}  // namespace

TEST(Execute, SingleStore) {
  auto p = parse_program("proc main:\n  mov r1, 5\n  st [r0+0], r1\n  halt\n", DialectKind::A);
  auto r = execute(p, {});
  EXPECT_EQ(r.exit, ExitStatus::Halted);
  ASSERT_EQ(count_kind(r.trace, EventKind::Store), 1u);
  const auto& s = *std::find_if(r.trace.begin(), r.trace.end(), [](const TraceEvent& e) { return e.kind == EventKind::Store; });
  EXPECT_EQ(s.address, 0u);
  EXPECT_EQ(s.value, 5);
  EXPECT_EQ(r.state.memory.at(0), 5);
}

TEST(Execute, CallRetDiscipline) {
  auto p = parse_program("proc main:\n  call f\n  mov r2, 7\n  halt\nproc f:\n  mov r1, 3\n  ret\n", DialectKind::A);
  auto r = execute(p, {});
  ASSERT_EQ(r.exit, ExitStatus::Halted);
  EXPECT_EQ(count_kind(r.trace, EventKind::Call), 1u);
  EXPECT_EQ(count_kind(r.trace, EventKind::Ret), 1u);
  EXPECT_EQ(r.state.registers[1], 3);
  EXPECT_EQ(r.state.registers[2], 7);  // resumed after the call
  EXPECT_EQ(r.state.call_stack.size(), 1u);
}

TEST(Execute, ArithmeticBranchesAndLoads) {
  auto p = parse_program(R"(proc main:
  mov r1, 6
  mul r2, r1, 7
  sub r2, r2, 2
  st [r0+10], r2
  ld r3, [r0+10]
  cmp eq, r3, 40
  jf bad
  mov r4, 1
  halt
bad:
  mov r4, 2
  halt
)", DialectKind::A);
  auto r = execute(p, {});
  EXPECT_EQ(r.state.registers[3], 40);
  EXPECT_EQ(r.state.registers[4], 1);
  EXPECT_EQ(count_kind(r.trace, EventKind::Load), 1u);
}

TEST(Execute, UnwrittenReadsAndLimits) {
  auto p = parse_program("proc main:\n  ld r1, [r0+3]\n  halt\n", DialectKind::A);
  auto lax = execute(p, {});
  EXPECT_EQ(lax.exit, ExitStatus::Halted);
  EXPECT_EQ(lax.state.registers[1], 0);
  EXPECT_EQ(count_kind(lax.trace, EventKind::Load), 1u);
  ExecOptions strict;
  strict.strict_reads = true;
  EXPECT_EQ(execute(p, {}, strict).exit, ExitStatus::Fault);
  EXPECT_EQ(execute(p, {{3, 9}}, strict).state.registers[1], 9);

  auto spin = parse_program("proc main:\nL:\n  jmp L\n", DialectKind::A);
  ExecOptions few;
  few.max_steps = 50;
  auto r = execute(spin, {}, few);
  EXPECT_EQ(r.exit, ExitStatus::StepLimit);
  EXPECT_EQ(r.steps, 50u);

  auto rec = parse_program("proc main:\n  call main\n  halt\n", DialectKind::A);
  EXPECT_EQ(execute(rec, {}).exit, ExitStatus::Fault);
}

TEST(Execute, TraceInvariantsAndDeterminism) {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    GenConfig c;
    c.seed = seed;
    auto g = generate_program(c);
    auto a = execute(g.program, {}, {kGenMaxSteps});
    auto b = execute(g.program, {}, {kGenMaxSteps});
    EXPECT_EQ(a.exit, ExitStatus::Halted);
    EXPECT_EQ(dump_trace(g.program, a.trace), dump_trace(g.program, b.trace));
    for (std::size_t i = 1; i < a.trace.size(); ++i) EXPECT_LT(a.trace[i - 1].seq, a.trace[i].seq);
  }
}

TEST(Detect, DefinitionExamples) {
  Trace two{mem_event(0, EventKind::Store, 8, 0), mem_event(1, EventKind::Store, 8, 1)};
  auto r = detect_dead_stores(two);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].killed_seq, 0u);
  EXPECT_EQ(r[0].killing_seq, 1u);
  EXPECT_EQ(r[0].killed_site.index, 0);

  Trace read_back{mem_event(0, EventKind::Store, 8), mem_event(1, EventKind::Load, 8), mem_event(2, EventKind::Store, 8)};
  EXPECT_TRUE(detect_dead_stores(read_back).empty());

  Trace other{mem_event(0, EventKind::Store, 8), mem_event(1, EventKind::Store, 9), mem_event(2, EventKind::Store, 8)};
  auto o = brute_force_dead_stores(other);
  ASSERT_EQ(o.size(), 1u);
  EXPECT_EQ(o[0].address, 8u);
  EXPECT_TRUE(brute_force_dead_stores({}).empty());
  EXPECT_TRUE(detect_dead_stores({}).empty());
}

TEST(Detect, ShadowModes) {
  ShadowDetector d;
  EXPECT_EQ(d.mode(5), ShadowMode::Virgin);
  d.observe(mem_event(0, EventKind::Load, 5));
  EXPECT_EQ(d.mode(5), ShadowMode::Virgin);  // never stored
  d.observe(mem_event(1, EventKind::Store, 5));
  EXPECT_EQ(d.mode(5), ShadowMode::WrittenUnread);
  d.observe(mem_event(2, EventKind::Load, 5));
  EXPECT_EQ(d.mode(5), ShadowMode::ReadSinceWrite);
}

TEST(Detect, MotivatingFixtures) {
  for (const auto& f : motivating_fixtures()) EXPECT_EQ(f.reported, f.expected) << f.name;
  auto held = parse_program(kHeldInRegisterFixture, DialectKind::A);
  auto back = parse_program(kReadBackFixture, DialectKind::A);
  EXPECT_EQ(detect_dead_stores(execute(held, {}).trace).size(), 1u);
  EXPECT_EQ(detect_dead_stores(execute(back, {}).trace).size(), 0u);
  EXPECT_EQ(label_procedures(back, {graphspy::Run{}}).label.at("main"), 0);
}

TEST(Detect, RandomEquivalence) {
  auto r = oracle_equivalence(1000, 200, 8, 11);
  EXPECT_EQ(r.traces, 1000u);
  EXPECT_EQ(r.mismatches, 0u);
  EXPECT_GT(r.reports, 0u);
}

TEST(Detect, ReportsInKillingOrderWithNoInterveningLoad) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 200; ++k) {
    auto t = random_trace(rng, 120, 4);
    auto reports = detect_dead_stores(t);
    for (std::size_t i = 1; i < reports.size(); ++i) EXPECT_LT(reports[i - 1].killing_seq, reports[i].killing_seq);
    for (const auto& r : reports) {
      EXPECT_LT(r.killed_seq, r.killing_seq);
      for (const auto& e : t)
        if (e.kind == EventKind::Load && e.address == r.address)
          EXPECT_FALSE(e.seq > r.killed_seq && e.seq < r.killing_seq);
    }
  }
}

TEST(Detect, CorpusTraces) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    GenConfig c;
    c.seed = seed;
    c.opt = seed % 2 ? OptLevel::Opt0 : OptLevel::Opt1;
    auto g = generate_program(c);
    auto t = execute(g.program, {}, {kGenMaxSteps}).trace;
    EXPECT_TRUE(same_reports(detect_dead_stores(t), brute_force_dead_stores(t)));
  }
}

TEST(Label, AttributesToKilledStore) {
  auto p = parse_program(kStraddle, DialectKind::A);
  auto l = label_procedures(p, {graphspy::Run{}});
  EXPECT_EQ(l.label.at("f"), 1);
  EXPECT_EQ(l.label.at("g"), 0);
  EXPECT_EQ(l.label.at("main"), 0);
  EXPECT_EQ(l.label.at("h"), 0);  // dead pair, but never executed
  EXPECT_FALSE(l.exercised.at("h"));
  EXPECT_TRUE(l.exercised.at("g"));
}

TEST(Label, NoStoresMeansZero) {
  auto p = parse_program("proc main:\n  call f\n  halt\nproc f:\n  mov r1, 1\n  ret\n", DialectKind::A);
  EXPECT_EQ(label_procedures(p, {graphspy::Run{}}).label.at("f"), 0);
}

TEST(Label, MonotoneInRunsAndDeterministic) {
  auto p = parse_program(R"(proc main:
  ld r1, [r0+16384]
  cmp gt, r1, 0
  jf skip
  call f
skip:
  halt

proc f:
  st [r0+8], r1
  st [r0+8], r1
  ret
)", DialectKind::A);
  std::vector<graphspy::Run> runs{graphspy::Run{}};
  EXPECT_EQ(label_procedures(p, runs).label.at("f"), 0);
  runs.push_back(graphspy::Run{{{16384, 3}}, 1000});
  auto both = label_procedures(p, runs);
  EXPECT_EQ(both.label.at("f"), 1);
  EXPECT_EQ(label_procedures(p, runs).label, both.label);

  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    GenConfig c;
    c.seed = seed;
    auto g = generate_program(c);
    std::vector<graphspy::Run> rs{graphspy::Run{{}, kGenMaxSteps}};
    auto before = label_procedures(g.program, rs).label;
    rs.push_back(graphspy::Run{{{kArgumentBase, -5}, {kArgumentBase + 1, 9}}, kGenMaxSteps});
    auto after = label_procedures(g.program, rs).label;
    for (const auto& [proc, l] : before) EXPECT_GE(after.at(proc), l);
  }
}
