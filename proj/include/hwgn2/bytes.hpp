#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "hwgn2/block.hpp"
#include "hwgn2/error.hpp"

namespace hwgn2 {

using Bytes = std::vector<std::uint8_t>;

/// Little-endian append-only serializer.
class ByteWriter {
 public:
  ByteWriter() = default;
  explicit ByteWriter(std::size_t reserve) { out_.reserve(reserve); }

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void block(Block b) {
    const std::size_t at = out_.size();
    out_.resize(at + 16);
    b.store(out_.data() + at);
  }
  void raw(std::span<const std::uint8_t> data) { out_.insert(out_.end(), data.begin(), data.end()); }
  /// u32 length prefix followed by the blocks.
  void blocks(std::span<const Block> bs) {
    u32(static_cast<std::uint32_t>(bs.size()));
    const std::size_t at = out_.size();
    out_.resize(at + 16 * bs.size());
    for (std::size_t i = 0; i < bs.size(); ++i) bs[i].store(out_.data() + at + 16 * i);
  }
  void bytes(std::span<const std::uint8_t> data) {
    u32(static_cast<std::uint32_t>(data.size()));
    raw(data);
  }

  std::size_t size() const { return out_.size(); }
  Bytes& buffer() { return out_; }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

/// Bounds-checked reader over a payload; every overrun throws with the byte
/// offset at which it happened.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{data_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{data_[pos_ + i]} << (8 * i);
    pos_ += 8;
    return v;
  }
  Block block() {
    need(16);
    Block b = Block::load(data_.data() + pos_);
    pos_ += 16;
    return b;
  }
  std::span<const std::uint8_t> raw(std::size_t n) {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<Block> blocks(std::size_t max_count = SIZE_MAX) {
    const std::uint32_t n = u32();
    if (n > max_count) throw Error("block list of " + std::to_string(n) + " exceeds limit at offset " + std::to_string(pos_));
    need(16 * std::size_t{n});
    std::vector<Block> bs(n);
    for (auto& b : bs) {
      b = Block::load(data_.data() + pos_);
      pos_ += 16;
    }
    return bs;
  }
  Bytes bytes() {
    const std::uint32_t n = u32();
    auto s = raw(n);
    return Bytes(s.begin(), s.end());
  }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  void expect_end() const {
    if (pos_ != data_.size())
      throw Error("trailing " + std::to_string(data_.size() - pos_) + " bytes at offset " + std::to_string(pos_));
  }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n)
      throw Error("truncated payload: need " + std::to_string(n) + " bytes at offset " + std::to_string(pos_) +
                  ", have " + std::to_string(data_.size() - pos_));
  }
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace hwgn2
