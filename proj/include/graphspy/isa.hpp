#pragma once

// MiniASM: a small load/store instruction set with two surface dialects.
//
// Canonical operand order (independent of dialect):
//   mov     rd, src          src is a register or immediate
//   add/sub/mul rd, ra, src
//   cmpflag rel, ra, src     flag <- (ra rel src)
//   ld      rd, [rb+imm]
//   st      [rb+imm], rs
//   jmp/br_true/br_false label
//   call    proc
//   ret, halt

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace graphspy {

enum class Opcode : std::uint8_t {
  Mov, Add, Sub, Mul, CmpFlag, Ld, St, Jmp, BrTrue, BrFalse, Call, Ret, Halt
};
inline constexpr std::size_t kOpcodeCount = 13;
inline constexpr std::size_t kRegisterCount = 8;

enum class Relation : std::uint8_t { Eq, Ne, Lt, Le, Gt, Ge };

enum class DialectKind : std::uint8_t { A, B };

enum class TokenKind : std::uint8_t {
  Opcode, Register, Immediate, MemRef, Label, ProcName, Relation
};

struct Token {
  std::string text;
  TokenKind kind;
  bool operator==(const Token&) const = default;
};

struct MemRef {
  int base = 0;            // register index
  std::int64_t offset = 0; // non-negative
  bool operator==(const MemRef&) const = default;
};

struct Operand {
  enum class Kind : std::uint8_t { Reg, Imm, Mem, Label, Proc, Rel };
  Kind kind = Kind::Reg;
  int reg = 0;
  std::int64_t imm = 0;
  MemRef mem;
  Relation rel = Relation::Eq;
  std::string name;  // label or procedure name
  int target = -1;   // resolved block id for labels

  static Operand make_reg(int r) { Operand o; o.kind = Kind::Reg; o.reg = r; return o; }
  static Operand make_imm(std::int64_t v) { Operand o; o.kind = Kind::Imm; o.imm = v; return o; }
  static Operand make_mem(int base, std::int64_t off) {
    Operand o; o.kind = Kind::Mem; o.mem = {base, off}; return o;
  }
  static Operand make_label(std::string n) {
    Operand o; o.kind = Kind::Label; o.name = std::move(n); return o;
  }
  static Operand make_proc(std::string n) {
    Operand o; o.kind = Kind::Proc; o.name = std::move(n); return o;
  }
  static Operand make_rel(Relation r) { Operand o; o.kind = Kind::Rel; o.rel = r; return o; }

  bool operator==(const Operand&) const = default;
};

struct Instruction {
  Opcode op = Opcode::Halt;
  std::vector<Operand> operands;
  int line = 0;  // source line, 0 when synthesized; ignored by equality

  bool operator==(const Instruction& other) const {
    return op == other.op && operands == other.operands;
  }
};

struct BasicBlock {
  int id = 0;
  std::vector<Instruction> instructions;
  std::vector<std::string> labels;  // labels attached to the block entry
  bool operator==(const BasicBlock&) const = default;
};

struct Procedure {
  std::string name;
  std::vector<BasicBlock> blocks;
  int entry_block = 0;

  std::size_t instruction_count() const;
  bool operator==(const Procedure&) const = default;
};

struct Program {
  std::vector<Procedure> procedures;  // source order
  std::string entry = "main";
  DialectKind dialect = DialectKind::A;

  const Procedure* find(std::string_view name) const;
  int index_of(std::string_view name) const;  // -1 if absent
  bool operator==(const Program&) const = default;
};

// Surface vocabulary of one dialect. The mnemonic map is a bijection over
// the canonical opcodes and the two dialects share no mnemonic.
struct Dialect {
  DialectKind kind;
  std::array<std::string_view, kOpcodeCount> mnemonics;
  char register_prefix;

  std::string_view mnemonic(Opcode op) const { return mnemonics[static_cast<std::size_t>(op)]; }
  std::optional<Opcode> opcode(std::string_view mnemonic) const;
  std::string register_name(int r) const;
  std::optional<int> parse_register(std::string_view text) const;
};

const Dialect& dialect(DialectKind kind);
std::string_view dialect_name(DialectKind kind);
std::optional<DialectKind> parse_dialect_name(std::string_view text);

std::string_view canonical_name(Opcode op);
std::string_view relation_name(Relation rel);
std::optional<Relation> parse_relation(std::string_view text);

std::size_t arity(Opcode op);
bool is_control_flow(Opcode op);  // jmp, br_*, call, ret, halt
bool is_terminator(Opcode op);    // control never falls through: jmp, ret, halt

Program parse_program(std::string_view text, DialectKind dialect);

// Renders a program in the given dialect; parse_program(print_program(p, d), d) == p
// up to the dialect field.
std::string print_program(const Program& program, DialectKind dialect);
std::string print_instruction(const Instruction& ins, DialectKind dialect);

// Standard leaders partition. `labels` maps label names to instruction
// indices in [0, instructions.size()). Label operands are not resolved here.
std::vector<BasicBlock> partition_blocks(const std::vector<Instruction>& instructions,
                                         const std::map<std::string, std::size_t>& labels);

// Partitions `instructions` into blocks and resolves label operands to block
// ids. Throws SyntaxError for empty procedures, dangling labels or a final
// instruction that falls through; UndefinedLabel for unknown jump targets.
Procedure assemble_procedure(std::string name, const std::vector<Instruction>& instructions,
                             const std::map<std::string, std::size_t>& labels,
                             int header_line = 0);

std::vector<Token> tokenize_instruction(const Instruction& ins, DialectKind dialect);
std::vector<std::string> token_texts(const Instruction& ins, DialectKind dialect);

}  // namespace graphspy
