#include "hwgn2/assembler.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <optional>
#include <unordered_map>
#include <vector>

#include "hwgn2/error.hpp"

namespace hwgn2::mips {
namespace {

struct Tok {
  std::string text;
  std::size_t column = 0;
};

struct Line {
  std::size_t number = 0;
  std::vector<Tok> toks;
};

// Splits on whitespace and commas; keeps "(" ")" attached handling to the
// memory-operand parser.
std::vector<Tok> split(std::string_view line) {
  std::vector<Tok> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (c == '#' || c == ';') break;
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) && line[i] != ',' && line[i] != '#' &&
           line[i] != ';')
      ++i;
    out.push_back({std::string(line.substr(start, i - start)), start + 1});
  }
  return out;
}

std::string upper(std::string_view s) {
  std::string u(s);
  for (auto& c : u) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return u;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  bool neg = false;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    neg = s[0] == '-';
    s.remove_prefix(1);
  }
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    base = 16;
    s.remove_prefix(2);
  }
  if (s.empty()) return std::nullopt;
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (ec != std::errc() || p != s.data() + s.size() || v > (1ull << 40)) return std::nullopt;
  return neg ? -static_cast<std::int64_t>(v) : static_cast<std::int64_t>(v);
}

bool is_label_name(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_' || s[0] == '.')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
  return true;
}

class Assembler {
 public:
  MipsProgram run(std::string_view text) {
    std::vector<Line> lines = tokenize(text);
    // Pass 1: labels.
    std::uint32_t pc = 0;
    for (auto& l : lines) {
      if (!l.toks.empty() && l.toks[0].text.back() == ':') {
        const std::string name = l.toks[0].text.substr(0, l.toks[0].text.size() - 1);
        if (!is_label_name(name)) throw ParseError("bad label '" + name + "'", l.number, l.toks[0].column);
        if (labels_.count(name)) throw ParseError("duplicate label '" + name + "'", l.number, l.toks[0].column);
        labels_[name] = pc;
        l.toks.erase(l.toks.begin());
      }
      if (!l.toks.empty() && l.toks[0].text[0] != '.') ++pc;
      else if (!l.toks.empty() && upper(l.toks[0].text) == ".INST") ++pc;
    }
    // Pass 2.
    for (const auto& l : lines) {
      if (l.toks.empty()) continue;
      line_ = l.number;
      if (l.toks[0].text[0] == '.') directive(l.toks);
      else instruction(l.toks);
    }
    prog_.validate();
    return std::move(prog_);
  }

 private:
  static std::vector<Line> tokenize(std::string_view text) {
    std::vector<Line> lines;
    std::size_t pos = 0, number = 0;
    while (pos <= text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      ++number;
      lines.push_back({number, split(text.substr(pos, end - pos))});
      if (end == text.size()) break;
      pos = end + 1;
    }
    return lines;
  }

  [[noreturn]] void fail(const std::string& what, const Tok& t) const { throw ParseError(what, line_, t.column); }

  std::int64_t number(const Tok& t, std::int64_t lo, std::int64_t hi, const char* what) const {
    auto v = parse_int(t.text);
    if (!v) fail(std::string("expected ") + what + ", got '" + t.text + "'", t);
    if (*v < lo || *v > hi)
      fail(std::string(what) + " " + t.text + " out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]", t);
    return *v;
  }

  unsigned reg(const Tok& t) const {
    std::string_view s = t.text;
    if (s.size() >= 2 && (s[0] == 'r' || s[0] == 'R' || s[0] == '$')) {
      auto v = parse_int(s.substr(1));
      if (v && *v >= 0 && *v < 32 && s.substr(1).find_first_not_of("0123456789") == std::string_view::npos)
        return static_cast<unsigned>(*v);
    }
    fail("expected register r0..r31, got '" + t.text + "'", t);
  }

  void arity(const std::vector<Tok>& toks, std::size_t n) const {
    if (toks.size() != n + 1)
      fail(toks[0].text + " takes " + std::to_string(n) + " operand(s), got " + std::to_string(toks.size() - 1), toks[0]);
  }

  std::uint32_t label_or_number(const Tok& t, std::int64_t lo, std::int64_t hi, const char* what) const {
    if (is_label_name(t.text) && !parse_int(t.text)) {
      auto it = labels_.find(t.text);
      if (it == labels_.end()) fail("undefined label '" + t.text + "'", t);
      return it->second;
    }
    return static_cast<std::uint32_t>(number(t, lo, hi, what));
  }

  void directive(const std::vector<Tok>& toks) {
    const std::string d = upper(toks[0].text);
    if (d == ".MEMORY") {
      arity(toks, 1);
      prog_.dmem_words = static_cast<std::uint32_t>(number(toks[1], 16, 4096, "memory size"));
      CpuStepConfig{prog_.dmem_words, true, false}.validate();
    } else if (d == ".INPUT" || d == ".OUTPUT") {
      arity(toks, 2);
      Region r{static_cast<std::uint32_t>(number(toks[1], 0, 4095, "address")),
               static_cast<std::uint32_t>(number(toks[2], 0, 4096, "word count"))};
      (d == ".INPUT" ? prog_.evaluator_input_region : prog_.output_region) = r;
    } else if (d == ".DMEM") {
      arity(toks, 1);
      cursor_ = static_cast<std::uint32_t>(number(toks[1], 0, 4095, "address"));
    } else if (d == ".WORDS") {
      if (toks.size() < 2) fail(".words needs at least one value", toks[0]);
      for (std::size_t i = 1; i < toks.size(); ++i) {
        if (cursor_ > 4095) fail("data address beyond 4095", toks[i]);
        const auto v = number(toks[i], INT32_MIN, UINT32_MAX, "word");
        prog_.dmem_init_garbler[cursor_++] = static_cast<std::uint32_t>(v);
      }
    } else if (d == ".INST") {
      arity(toks, 1);
      prog_.instructions.push_back({static_cast<std::uint32_t>(number(toks[1], 0, UINT32_MAX, "instruction word"))});
    } else {
      fail("unknown directive '" + toks[0].text + "'", toks[0]);
    }
  }

  void instruction(const std::vector<Tok>& toks) {
    const std::string m = upper(toks[0].text);
    if (m == "NOP") {
      arity(toks, 0);
      prog_.instructions.push_back({0});
      return;
    }
    const auto op = op_from_mnemonic(m);
    if (!op) fail("unknown mnemonic '" + toks[0].text + "'", toks[0]);
    const std::uint32_t pc = static_cast<std::uint32_t>(prog_.instructions.size());
    const std::uint8_t code = code_of(*op);
    std::uint32_t w = 0;
    switch (format(*op)) {
      case Format::R3:
        arity(toks, 3);
        w = encode_r(code, reg(toks[2]), reg(toks[3]), reg(toks[1]), 0);
        break;
      case Format::Shift:
        arity(toks, 3);
        w = encode_r(code, 0, reg(toks[2]), reg(toks[1]), static_cast<unsigned>(number(toks[3], 0, 31, "shift amount")));
        break;
      case Format::Rs:
        arity(toks, 1);
        w = encode_r(code, reg(toks[1]), 0, 0, 0);
        break;
      case Format::RsRt:
        arity(toks, 2);
        w = encode_r(code, reg(toks[1]), reg(toks[2]), 0, 0);
        break;
      case Format::Rd:
        arity(toks, 1);
        w = encode_r(code, 0, 0, reg(toks[1]), 0);
        break;
      case Format::None:
        arity(toks, 0);
        w = encode_r(code, 0, 0, 0, 0);
        break;
      case Format::ImmS:
        arity(toks, 3);
        w = encode_i(code, reg(toks[2]), reg(toks[1]),
                     static_cast<std::uint16_t>(number(toks[3], -32768, 32767, "signed immediate")));
        break;
      case Format::ImmU:
        arity(toks, 3);
        w = encode_i(code, reg(toks[2]), reg(toks[1]),
                     static_cast<std::uint16_t>(number(toks[3], 0, 65535, "unsigned immediate")));
        break;
      case Format::Lui:
        arity(toks, 2);
        w = encode_i(code, 0, reg(toks[1]), static_cast<std::uint16_t>(number(toks[2], 0, 65535, "unsigned immediate")));
        break;
      case Format::Mem: {
        arity(toks, 2);
        const std::string& t = toks[2].text;
        const auto open = t.find('(');
        if (open == std::string::npos || t.back() != ')') fail("expected offset(rN), got '" + t + "'", toks[2]);
        const Tok off{open == 0 ? "0" : t.substr(0, open), toks[2].column};
        const Tok base{t.substr(open + 1, t.size() - open - 2), toks[2].column + open + 1};
        w = encode_i(code, reg(base), reg(toks[1]), static_cast<std::uint16_t>(number(off, -32768, 32767, "offset")));
        break;
      }
      case Format::Branch: {
        arity(toks, 3);
        std::int64_t offset;
        const Tok& t = toks[3];
        if (is_label_name(t.text)) {
          offset = static_cast<std::int64_t>(label_or_number(t, 0, 0, "")) - (pc + 1);
          if (offset < -32768 || offset > 32767) fail("branch to '" + t.text + "' out of range", t);
        } else {
          offset = number(t, -32768, 32767, "branch offset");
        }
        w = encode_i(code, reg(toks[1]), reg(toks[2]), static_cast<std::uint16_t>(offset));
        break;
      }
      case Format::Jump:
        arity(toks, 1);
        w = encode_j(code, label_or_number(toks[1], 0, (1 << 26) - 1, "jump target"));
        break;
    }
    prog_.instructions.push_back({w});
  }

  MipsProgram prog_;
  std::unordered_map<std::string, std::uint32_t> labels_;
  std::uint32_t cursor_ = 0;
  std::size_t line_ = 0;
};

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

std::string hex16(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%04x", v);
  return buf;
}

std::string signed_offset(std::int32_t v) { return (v >= 0 ? "+" : "") + std::to_string(v); }

}  // namespace

MipsProgram assemble(std::string_view text) { return Assembler().run(text); }

std::string disassemble_word(std::uint32_t w) {
  const Op op = classify(w);
  const Fields f = fields(w);
  auto r = [](unsigned n) { return "r" + std::to_string(n); };
  std::string s;
  if (op != Op::Invalid) {
    const std::string m(mnemonic(op));
    switch (format(op)) {
      case Format::R3: s = m + " " + r(f.rd) + ", " + r(f.rs) + ", " + r(f.rt); break;
      case Format::Shift: s = m + " " + r(f.rd) + ", " + r(f.rt) + ", " + std::to_string(f.shamt); break;
      case Format::Rs: s = m + " " + r(f.rs); break;
      case Format::RsRt: s = m + " " + r(f.rs) + ", " + r(f.rt); break;
      case Format::Rd: s = m + " " + r(f.rd); break;
      case Format::None: s = m; break;
      case Format::ImmS: s = m + " " + r(f.rt) + ", " + r(f.rs) + ", " + std::to_string(sext16(f.imm)); break;
      case Format::ImmU: s = m + " " + r(f.rt) + ", " + r(f.rs) + ", " + hex16(f.imm); break;
      case Format::Lui: s = m + " " + r(f.rt) + ", " + hex16(f.imm); break;
      case Format::Mem: s = m + " " + r(f.rt) + ", " + std::to_string(sext16(f.imm)) + "(" + r(f.rs) + ")"; break;
      case Format::Branch: s = m + " " + r(f.rs) + ", " + r(f.rt) + ", " + signed_offset(sext16(f.imm)); break;
      case Format::Jump: s = m + " " + std::to_string(f.target); break;
    }
    // Fields the text form cannot carry force the raw form.
    if (assemble(s).instructions.at(0).word == w) return s;
  }
  return ".inst " + hex32(w);
}

std::string disassemble(const MipsProgram& p) {
  std::string out;
  out += ".memory " + std::to_string(p.dmem_words) + "\n";
  out += ".input " + std::to_string(p.evaluator_input_region.base) + " " + std::to_string(p.evaluator_input_region.count) + "\n";
  out += ".output " + std::to_string(p.output_region.base) + " " + std::to_string(p.output_region.count) + "\n";
  std::uint32_t next = UINT32_MAX;
  int on_line = 0;
  for (const auto& [addr, word] : p.dmem_init_garbler) {
    if (addr != next || on_line == 8) {
      if (on_line) out += "\n";
      if (addr != next) out += ".dmem " + std::to_string(addr) + "\n";
      out += ".words";
      on_line = 0;
    }
    out += " " + hex32(word);
    ++on_line;
    next = addr + 1;
  }
  if (on_line) out += "\n";
  for (const auto& i : p.instructions) out += disassemble_word(i.word) + "\n";
  return out;
}

}  // namespace hwgn2::mips
