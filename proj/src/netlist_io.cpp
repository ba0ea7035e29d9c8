#include "hwgn2/netlist_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "hwgn2/error.hpp"

namespace hwgn2::circuit {

std::string to_text(const Netlist& n) {
  std::string s;
  s.reserve(32 * n.gates.size() + 64);
  s += "NETLIST g=" + std::to_string(n.n_garbler_inputs) + " e=" + std::to_string(n.n_evaluator_inputs) +
       " o=" + std::to_string(n.n_outputs()) + "\n";
  for (const Gate& g : n.gates) {
    s += "G ";
    s += std::to_string(g.id);
    s += ' ';
    s += to_string(g.kind);
    s += ' ';
    s += std::to_string(g.in0);
    if (g.in1 != kNoWire) {
      s += ' ';
      s += std::to_string(g.in1);
    }
    s += " -> ";
    s += std::to_string(g.out);
    s += '\n';
  }
  s += "OUT";
  for (WireId w : n.output_wires) {
    s += ' ';
    s += std::to_string(w);
  }
  s += '\n';
  return s;
}

namespace {

struct Token {
  std::string_view text;
  std::size_t column;  // 1-based
};

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] == '#') break;
    if (line[i] == ' ' || line[i] == '\t' || line[i] == '\r') {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r' && line[i] != '#') ++i;
    out.push_back({line.substr(start, i - start), start + 1});
  }
  return out;
}

std::uint32_t parse_u32(const Token& t, std::size_t line) {
  std::uint32_t v = 0;
  auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
  if (ec != std::errc() || p != t.text.data() + t.text.size())
    throw ParseError("expected unsigned integer, got '" + std::string(t.text) + "'", line, t.column);
  return v;
}

std::uint32_t parse_header_field(const Token& t, std::string_view key, std::size_t line) {
  if (t.text.size() <= key.size() + 1 || t.text.substr(0, key.size()) != key || t.text[key.size()] != '=')
    throw ParseError("expected '" + std::string(key) + "=<n>', got '" + std::string(t.text) + "'", line, t.column);
  Token value{t.text.substr(key.size() + 1), t.column + key.size() + 1};
  return parse_u32(value, line);
}

}  // namespace

Netlist from_text(std::string_view text) {
  Netlist n;
  bool have_header = false;
  bool have_out = false;
  std::uint32_t declared_outputs = 0;
  std::size_t line_no = 0;
  std::size_t out_line = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    const auto toks = tokenize(line);
    if (toks.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const std::string_view head = toks[0].text;
    if (!have_header) {
      if (head != "NETLIST") throw ParseError("expected NETLIST header, got '" + std::string(head) + "'", line_no, toks[0].column);
      if (toks.size() != 4) throw ParseError("header needs g=, e= and o= fields", line_no, toks[0].column);
      n.n_garbler_inputs = parse_header_field(toks[1], "g", line_no);
      n.n_evaluator_inputs = parse_header_field(toks[2], "e", line_no);
      declared_outputs = parse_header_field(toks[3], "o", line_no);
      have_header = true;
    } else if (have_out) {
      throw ParseError("content after OUT line: '" + std::string(head) + "'", line_no, toks[0].column);
    } else if (head == "G") {
      if (toks.size() != 6 && toks.size() != 7)
        throw ParseError("gate line needs 'G <id> <KIND> <in0> [<in1>] -> <out>'", line_no, toks[0].column);
      Gate g;
      g.id = parse_u32(toks[1], line_no);
      auto kind = gate_kind_from_string(toks[2].text);
      if (!kind) throw ParseError("unknown gate kind '" + std::string(toks[2].text) + "'", line_no, toks[2].column);
      g.kind = *kind;
      g.in0 = parse_u32(toks[3], line_no);
      std::size_t arrow = 4;
      if (toks.size() == 7) {
        g.in1 = parse_u32(toks[4], line_no);
        arrow = 5;
      }
      if (toks[arrow].text != "->")
        throw ParseError("expected '->', got '" + std::string(toks[arrow].text) + "'", line_no, toks[arrow].column);
      g.out = parse_u32(toks[arrow + 1], line_no);
      if (is_unary(g.kind) != (g.in1 == kNoWire))
        throw ParseError("gate " + std::string(toks[2].text) + " has wrong operand count", line_no, toks[2].column);
      n.gates.push_back(g);
    } else if (head == "OUT") {
      for (std::size_t i = 1; i < toks.size(); ++i) n.output_wires.push_back(parse_u32(toks[i], line_no));
      have_out = true;
      out_line = line_no;
    } else {
      throw ParseError("unknown record '" + std::string(head) + "'", line_no, toks[0].column);
    }
    if (end == text.size()) break;
  }
  if (!have_header) throw ParseError("missing NETLIST header", line_no);
  if (!have_out) throw ParseError("missing OUT line", line_no);
  if (n.output_wires.size() != declared_outputs)
    throw ParseError("header declares o=" + std::to_string(declared_outputs) + " but OUT lists " +
                         std::to_string(n.output_wires.size()) + " wires",
                     out_line);
  require_valid(n);
  return n;
}

void save_netlist(const Netlist& netlist, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  const std::string text = to_text(netlist);
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw Error("write failed: " + path.string());
}

Netlist load_netlist(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return from_text(ss.str());
}

}  // namespace hwgn2::circuit
