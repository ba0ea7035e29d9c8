#include "ref_mips.hpp"

namespace hwgn2::oracle {

bool RefCpu::step(std::uint32_t insn) {
  if (halted) return true;
  const unsigned op = insn >> 26;
  const unsigned s = (insn >> 21) & 0x1f, t = (insn >> 16) & 0x1f, d = (insn >> 11) & 0x1f;
  const unsigned sh = (insn >> 6) & 0x1f, fn = insn & 0x3f;
  const std::uint32_t u16 = insn & 0xffff;
  const std::uint32_t s16 = (u16 & 0x8000) ? (u16 | 0xffff0000u) : u16;
  const std::uint32_t a = r[s], b = r[t];
  std::uint32_t next = (pc + 1) & 0xffff;
  int dst = -1;
  std::uint32_t val = 0;
  if (op == 0) {
    switch (fn) {
      case 0x20: case 0x21: dst = d; val = a + b; break;
      case 0x22: dst = d; val = a - b; break;
      case 0x24: dst = d; val = a & b; break;
      case 0x25: dst = d; val = a | b; break;
      case 0x26: dst = d; val = a ^ b; break;
      case 0x27: dst = d; val = ~(a | b); break;
      case 0x2a: dst = d; val = (int32_t)a < (int32_t)b; break;
      case 0x2b: dst = d; val = a < b; break;
      case 0x00: dst = d; val = b << sh; break;
      case 0x02: dst = d; val = b >> sh; break;
      case 0x03: dst = d; val = sh ? ((b >> sh) | ((b & 0x80000000u) ? ~(0xffffffffu >> sh) : 0)) : b; break;
      case 0x08: next = a & 0xffff; break;
      case 0x18: lo = (std::uint32_t)((std::uint64_t)a * b); break;
      case 0x12: dst = d; val = lo; break;
      case 0x3f: halted = true; next = pc; break;
      default: return false;
    }
  } else {
    switch (op) {
      case 0x08: case 0x09: dst = t; val = a + s16; break;
      case 0x0c: dst = t; val = a & u16; break;
      case 0x0d: dst = t; val = a | u16; break;
      case 0x0e: dst = t; val = a ^ u16; break;
      case 0x0a: dst = t; val = (int32_t)a < (int32_t)s16; break;
      case 0x0f: dst = t; val = u16 << 16; break;
      case 0x23: {
        const std::uint32_t addr = a + s16;
        if (addr >= mem.size()) return false;
        dst = t;
        val = mem[addr];
        break;
      }
      case 0x2b: {
        const std::uint32_t addr = a + s16;
        if (addr >= mem.size()) return false;
        mem[addr] = b;
        break;
      }
      case 0x04: if (a == b) next = (pc + 1 + s16) & 0xffff; break;
      case 0x05: if (a != b) next = (pc + 1 + s16) & 0xffff; break;
      case 0x02: next = insn & 0xffff; break;
      case 0x03: dst = 31; val = (pc + 1) & 0xffff; next = insn & 0xffff; break;
      default: return false;
    }
  }
  if (dst > 0) r[dst] = val;
  pc = next;
  return true;
}

}  // namespace hwgn2::oracle
