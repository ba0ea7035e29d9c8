#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "hwgn2/circuit.hpp"

namespace hwgn2::circuit {

/// Canonical text form:
///   NETLIST g=<n> e=<n> o=<n>
///   G <id> <KIND> <in0> [<in1>] -> <out>
///   OUT <w0> <w1> ...
/// `#` starts a comment. See docs/formats.md.
std::string to_text(const Netlist& netlist);

/// Parses and validates. Throws ParseError (with line/column) or
/// ValidationError.
Netlist from_text(std::string_view text);

void save_netlist(const Netlist& netlist, const std::filesystem::path& path);
Netlist load_netlist(const std::filesystem::path& path);

}  // namespace hwgn2::circuit
