#include "graphspy/isa.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

#include "graphspy/error.hpp"

namespace graphspy {

namespace {

constexpr Dialect kDialectA{
    DialectKind::A,
    {"mov", "add", "sub", "mul", "cmp", "ld", "st", "jmp", "jt", "jf", "call", "ret", "halt"},
    'r'};

constexpr Dialect kDialectB{
    DialectKind::B,
    {"mv", "adds", "subs", "muls", "cmpf", "ldr", "str", "b", "b.t", "b.f", "bl", "rtn", "hlt"},
    'x'};

constexpr std::array<std::string_view, kOpcodeCount> kCanonical = {
    "mov", "add", "sub", "mul", "cmpflag", "ld", "st", "jmp", "br_true", "br_false", "call", "ret",
    "halt"};

constexpr std::array<std::string_view, 6> kRelations = {"eq", "ne", "lt", "le", "gt", "ge"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto head = static_cast<unsigned char>(s.front());
  if (!(std::isalpha(head) || head == '_' || head == '.')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || u == '_' || u == '.';
  });
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t v = 0;
  if (s.empty()) return std::nullopt;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split_operands(std::string_view s) {
  std::vector<std::string_view> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == ',') {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

struct OperandParser {
  const Dialect& d;
  int line;

  Operand reg(std::string_view s) const {
    auto r = d.parse_register(s);
    if (!r) throw SyntaxError(line, "expected register, got '" + std::string(s) + "'");
    return Operand::make_reg(*r);
  }
  Operand reg_or_imm(std::string_view s) const {
    if (auto r = d.parse_register(s)) return Operand::make_reg(*r);
    if (auto v = parse_int(s)) return Operand::make_imm(*v);
    throw SyntaxError(line, "expected register or immediate, got '" + std::string(s) + "'");
  }
  Operand mem(std::string_view s) const {
    if (s.size() < 2 || s.front() != '[' || s.back() != ']')
      throw SyntaxError(line, "expected memory operand, got '" + std::string(s) + "'");
    std::string inner;
    for (char c : s.substr(1, s.size() - 2))
      if (!std::isspace(static_cast<unsigned char>(c))) inner.push_back(c);
    auto plus = inner.find('+');
    std::string_view base = plus == std::string::npos ? std::string_view(inner)
                                                      : std::string_view(inner).substr(0, plus);
    std::int64_t off = 0;
    if (plus != std::string::npos) {
      auto v = parse_int(std::string_view(inner).substr(plus + 1));
      if (!v || *v < 0) throw SyntaxError(line, "bad memory offset in '" + std::string(s) + "'");
      off = *v;
    }
    auto r = d.parse_register(base);
    if (!r) throw SyntaxError(line, "bad base register in '" + std::string(s) + "'");
    return Operand::make_mem(*r, off);
  }
  Operand label(std::string_view s) const {
    if (!is_identifier(s)) throw SyntaxError(line, "bad label '" + std::string(s) + "'");
    return Operand::make_label(std::string(s));
  }
  Operand proc(std::string_view s) const {
    if (!is_identifier(s)) throw SyntaxError(line, "bad procedure name '" + std::string(s) + "'");
    return Operand::make_proc(std::string(s));
  }
  Operand rel(std::string_view s) const {
    auto r = parse_relation(s);
    if (!r) throw SyntaxError(line, "bad relation '" + std::string(s) + "'");
    return Operand::make_rel(*r);
  }
};

Instruction parse_instruction(std::string_view text, const Dialect& d, int line) {
  auto space = text.find_first_of(" \t");
  std::string_view mnemonic = text.substr(0, space);
  std::string_view rest = space == std::string_view::npos ? std::string_view{} : text.substr(space);
  auto op = d.opcode(mnemonic);
  if (!op) throw UnknownMnemonic(line, std::string(mnemonic));

  auto parts = split_operands(rest);
  if (parts.size() != arity(*op)) {
    throw SyntaxError(line, std::string(mnemonic) + " expects " + std::to_string(arity(*op)) +
                                " operands, got " + std::to_string(parts.size()));
  }
  OperandParser p{d, line};
  Instruction ins;
  ins.op = *op;
  ins.line = line;
  switch (*op) {
    case Opcode::Mov:
      ins.operands = {p.reg(parts[0]), p.reg_or_imm(parts[1])};
      break;
    case Opcode::Add:
    case Opcode::Sub:
    case Opcode::Mul:
      ins.operands = {p.reg(parts[0]), p.reg(parts[1]), p.reg_or_imm(parts[2])};
      break;
    case Opcode::CmpFlag:
      ins.operands = {p.rel(parts[0]), p.reg(parts[1]), p.reg_or_imm(parts[2])};
      break;
    case Opcode::Ld:
      ins.operands = {p.reg(parts[0]), p.mem(parts[1])};
      break;
    case Opcode::St:
      // Dialect B writes the source register first.
      if (d.kind == DialectKind::A)
        ins.operands = {p.mem(parts[0]), p.reg(parts[1])};
      else
        ins.operands = {p.mem(parts[1]), p.reg(parts[0])};
      break;
    case Opcode::Jmp:
    case Opcode::BrTrue:
    case Opcode::BrFalse:
      ins.operands = {p.label(parts[0])};
      break;
    case Opcode::Call:
      ins.operands = {p.proc(parts[0])};
      break;
    case Opcode::Ret:
    case Opcode::Halt:
      break;
  }
  return ins;
}

std::string render_operand(const Operand& o, const Dialect& d) {
  switch (o.kind) {
    case Operand::Kind::Reg: return d.register_name(o.reg);
    case Operand::Kind::Imm: return std::to_string(o.imm);
    case Operand::Kind::Mem:
      return "[" + d.register_name(o.mem.base) + "+" + std::to_string(o.mem.offset) + "]";
    case Operand::Kind::Label:
    case Operand::Kind::Proc: return o.name;
    case Operand::Kind::Rel: return std::string(relation_name(o.rel));
  }
  return {};
}

}  // namespace

std::size_t Procedure::instruction_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks) n += b.instructions.size();
  return n;
}

const Procedure* Program::find(std::string_view name) const {
  for (const auto& p : procedures)
    if (p.name == name) return &p;
  return nullptr;
}

int Program::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < procedures.size(); ++i)
    if (procedures[i].name == name) return static_cast<int>(i);
  return -1;
}

std::optional<Opcode> Dialect::opcode(std::string_view m) const {
  for (std::size_t i = 0; i < kOpcodeCount; ++i)
    if (mnemonics[i] == m) return static_cast<Opcode>(i);
  return std::nullopt;
}

std::string Dialect::register_name(int r) const {
  return std::string(1, register_prefix) + std::to_string(r);
}

std::optional<int> Dialect::parse_register(std::string_view text) const {
  if (text.size() != 2 || text[0] != register_prefix) return std::nullopt;
  if (text[1] < '0' || text[1] >= '0' + static_cast<int>(kRegisterCount)) return std::nullopt;
  return text[1] - '0';
}

const Dialect& dialect(DialectKind kind) { return kind == DialectKind::A ? kDialectA : kDialectB; }

std::string_view dialect_name(DialectKind kind) { return kind == DialectKind::A ? "A" : "B"; }

std::optional<DialectKind> parse_dialect_name(std::string_view text) {
  if (text == "A" || text == "a") return DialectKind::A;
  if (text == "B" || text == "b") return DialectKind::B;
  return std::nullopt;
}

std::string_view canonical_name(Opcode op) { return kCanonical[static_cast<std::size_t>(op)]; }

std::string_view relation_name(Relation rel) { return kRelations[static_cast<std::size_t>(rel)]; }

std::optional<Relation> parse_relation(std::string_view text) {
  for (std::size_t i = 0; i < kRelations.size(); ++i)
    if (kRelations[i] == text) return static_cast<Relation>(i);
  return std::nullopt;
}

std::size_t arity(Opcode op) {
  switch (op) {
    case Opcode::Mov: case Opcode::Ld: case Opcode::St: return 2;
    case Opcode::Add: case Opcode::Sub: case Opcode::Mul: case Opcode::CmpFlag: return 3;
    case Opcode::Jmp: case Opcode::BrTrue: case Opcode::BrFalse: case Opcode::Call: return 1;
    case Opcode::Ret: case Opcode::Halt: return 0;
  }
  return 0;
}

bool is_control_flow(Opcode op) {
  switch (op) {
    case Opcode::Jmp: case Opcode::BrTrue: case Opcode::BrFalse:
    case Opcode::Call: case Opcode::Ret: case Opcode::Halt:
      return true;
    default:
      return false;
  }
}

bool is_terminator(Opcode op) {
  return op == Opcode::Jmp || op == Opcode::Ret || op == Opcode::Halt;
}

std::vector<BasicBlock> partition_blocks(const std::vector<Instruction>& instructions,
                                         const std::map<std::string, std::size_t>& labels) {
  const std::size_t n = instructions.size();
  std::vector<bool> leader(n, false);
  if (n > 0) leader[0] = true;
  for (const auto& [name, idx] : labels)
    if (idx < n) leader[idx] = true;
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (is_control_flow(instructions[i].op)) leader[i + 1] = true;

  std::multimap<std::size_t, std::string> labels_at;
  for (const auto& [name, idx] : labels) labels_at.emplace(idx, name);

  std::vector<BasicBlock> blocks;
  for (std::size_t i = 0; i < n; ++i) {
    if (leader[i]) {
      BasicBlock b;
      b.id = static_cast<int>(blocks.size());
      auto [lo, hi] = labels_at.equal_range(i);
      for (auto it = lo; it != hi; ++it) b.labels.push_back(it->second);
      blocks.push_back(std::move(b));
    }
    blocks.back().instructions.push_back(instructions[i]);
  }
  return blocks;
}

Procedure assemble_procedure(std::string name, const std::vector<Instruction>& instructions,
                             const std::map<std::string, std::size_t>& labels, int header_line) {
  if (instructions.empty()) throw SyntaxError(header_line, "procedure '" + name + "' is empty");
  for (const auto& [label, idx] : labels) {
    if (idx >= instructions.size())
      throw SyntaxError(header_line, "label '" + label + "' does not precede an instruction");
  }
  if (!is_terminator(instructions.back().op)) {
    throw SyntaxError(instructions.back().line,
                      "control falls off the end of procedure '" + name + "'");
  }
  Procedure proc;
  proc.name = std::move(name);
  proc.blocks = partition_blocks(instructions, labels);

  std::map<std::string, int> block_of_label;
  for (const auto& b : proc.blocks)
    for (const auto& l : b.labels) block_of_label[l] = b.id;

  for (auto& b : proc.blocks) {
    for (auto& ins : b.instructions) {
      for (auto& o : ins.operands) {
        if (o.kind != Operand::Kind::Label) continue;
        auto it = block_of_label.find(o.name);
        if (it == block_of_label.end()) throw UndefinedLabel(ins.line, o.name);
        o.target = it->second;
      }
    }
  }
  return proc;
}

Program parse_program(std::string_view text, DialectKind dialect_kind) {
  const Dialect& d = dialect(dialect_kind);
  Program program;
  program.dialect = dialect_kind;

  struct Pending {
    std::string name;
    int line;
    std::vector<Instruction> instructions;
    std::map<std::string, std::size_t> labels;
  };
  std::vector<Pending> pending;
  std::set<std::string> names;

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    if (auto c = raw.find(';'); c != std::string_view::npos) raw = raw.substr(0, c);
    std::string_view line = trim(raw);
    if (line.empty()) continue;

    if (line.rfind("proc", 0) == 0 && line.size() > 4 &&
        std::isspace(static_cast<unsigned char>(line[4]))) {
      if (line.back() != ':') throw SyntaxError(line_no, "procedure header must end with ':'");
      std::string name(trim(line.substr(4, line.size() - 5)));
      if (!is_identifier(name)) throw SyntaxError(line_no, "bad procedure name '" + name + "'");
      if (!names.insert(name).second)
        throw SyntaxError(line_no, "duplicate procedure '" + name + "'");
      pending.push_back({name, line_no, {}, {}});
      continue;
    }
    if (line.back() == ':') {
      std::string label(trim(line.substr(0, line.size() - 1)));
      if (!is_identifier(label)) throw SyntaxError(line_no, "bad label '" + label + "'");
      if (pending.empty()) throw SyntaxError(line_no, "label outside of a procedure");
      auto& cur = pending.back();
      if (!cur.labels.emplace(label, cur.instructions.size()).second)
        throw SyntaxError(line_no, "duplicate label '" + label + "'");
      continue;
    }
    if (pending.empty()) throw SyntaxError(line_no, "instruction outside of a procedure");
    pending.back().instructions.push_back(parse_instruction(line, d, line_no));
  }

  if (pending.empty()) throw SyntaxError(line_no, "program has no procedures");
  for (auto& p : pending)
    program.procedures.push_back(
        assemble_procedure(std::move(p.name), p.instructions, p.labels, p.line));

  for (const auto& proc : program.procedures)
    for (const auto& b : proc.blocks)
      for (const auto& ins : b.instructions)
        if (ins.op == Opcode::Call && !program.find(ins.operands[0].name))
          throw UndefinedProcedure(ins.line, ins.operands[0].name);

  program.entry = program.find("main") ? "main" : program.procedures.front().name;
  return program;
}

std::string print_instruction(const Instruction& ins, DialectKind dialect_kind) {
  const Dialect& d = dialect(dialect_kind);
  std::string out(d.mnemonic(ins.op));
  std::vector<const Operand*> order;
  for (const auto& o : ins.operands) order.push_back(&o);
  if (ins.op == Opcode::St && dialect_kind == DialectKind::B) std::swap(order[0], order[1]);
  for (std::size_t i = 0; i < order.size(); ++i) {
    out += i == 0 ? " " : ", ";
    out += render_operand(*order[i], d);
  }
  return out;
}

std::string print_program(const Program& program, DialectKind dialect_kind) {
  std::ostringstream os;
  for (std::size_t p = 0; p < program.procedures.size(); ++p) {
    const auto& proc = program.procedures[p];
    if (p > 0) os << '\n';
    os << "proc " << proc.name << ":\n";
    for (const auto& b : proc.blocks) {
      for (const auto& l : b.labels) os << l << ":\n";
      for (const auto& ins : b.instructions) os << "  " << print_instruction(ins, dialect_kind) << '\n';
    }
  }
  return os.str();
}

std::vector<Token> tokenize_instruction(const Instruction& ins, DialectKind dialect_kind) {
  const Dialect& d = dialect(dialect_kind);
  std::vector<Token> out;
  out.push_back({std::string(d.mnemonic(ins.op)), TokenKind::Opcode});
  for (const auto& o : ins.operands) {
    switch (o.kind) {
      case Operand::Kind::Reg:
        out.push_back({d.register_name(o.reg), TokenKind::Register});
        break;
      case Operand::Kind::Imm:
        out.push_back({std::to_string(o.imm), TokenKind::Immediate});
        break;
      case Operand::Kind::Mem:
        out.push_back({d.register_name(o.mem.base), TokenKind::Register});
        out.push_back({"+", TokenKind::MemRef});
        out.push_back({std::to_string(o.mem.offset), TokenKind::Immediate});
        break;
      case Operand::Kind::Label:
        out.push_back({o.name, TokenKind::Label});
        break;
      case Operand::Kind::Proc:
        out.push_back({o.name, TokenKind::ProcName});
        break;
      case Operand::Kind::Rel:
        out.push_back({std::string(relation_name(o.rel)), TokenKind::Relation});
        break;
    }
  }
  return out;
}

std::vector<std::string> token_texts(const Instruction& ins, DialectKind dialect_kind) {
  std::vector<std::string> out;
  for (auto& t : tokenize_instruction(ins, dialect_kind)) out.push_back(std::move(t.text));
  return out;
}

}  // namespace graphspy
