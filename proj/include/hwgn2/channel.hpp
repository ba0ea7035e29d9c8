#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hwgn2/bytes.hpp"
#include "hwgn2/digest.hpp"

namespace hwgn2::net {

enum class Tag : std::uint8_t {
  Hello = 1,
  PhiMeta = 2,
  Ot1 = 3,
  Ot2 = 4,
  Ot3 = 5,
  Batch = 6,
  Yback = 7,
  Decode = 8,
  Output = 9,
  OpenSeed = 10,
  Verdict = 11,
  Err = 12,
};

std::string_view to_string(Tag t);

inline constexpr std::size_t kFrameHeaderBytes = 5;
inline constexpr std::uint32_t kMaxFramePayload = 0xfffffff0u;

struct Frame {
  Tag tag = Tag::Err;
  Bytes payload;
};

struct TranscriptEntry {
  bool sent = false;
  Tag tag = Tag::Err;
  std::uint32_t length = 0;
  Digest digest{};
  friend bool operator==(const TranscriptEntry&, const TranscriptEntry&) = default;
};

using Transcript = std::vector<TranscriptEntry>;

/// Ordered, reliable, framed message stream between the two parties.
class Channel {
 public:
  virtual ~Channel() = default;

  void send(Tag tag, Bytes payload);
  Frame recv();
  /// Receives and checks the tag. An ERR frame or a different tag raises
  /// ProtocolError naming the received frame's index.
  Frame expect(Tag tag);
  /// Sends ERR with a message; never throws.
  void send_error(std::string_view message) noexcept;

  std::uint64_t bytes_sent() const { return bytes_sent_; }
  std::uint64_t bytes_received() const { return bytes_received_; }
  std::size_t frames_received() const { return frames_received_; }

  /// When enabled, every frame's tag and length is logged, plus its SHA-256
  /// digest when `digests` is set.
  void enable_transcript(bool on, bool digests = true) {
    transcript_on_ = on;
    transcript_digests_ = digests;
  }
  const Transcript& transcript() const { return transcript_; }

 protected:
  virtual void send_frame(Frame&& frame) = 0;
  virtual Frame recv_frame() = 0;

 private:
  void log(bool sent, const Frame& f);

  std::uint64_t bytes_sent_ = 0;
  std::uint64_t bytes_received_ = 0;
  std::size_t frames_received_ = 0;
  bool transcript_on_ = false;
  bool transcript_digests_ = true;
  Transcript transcript_;
};

/// Two connected in-process endpoints. Payload buffers are moved, not copied.
std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_loopback_pair();

/// TCP binding: one connection per session.
std::unique_ptr<Channel> tcp_listen(std::uint16_t port);
std::unique_ptr<Channel> tcp_connect(const std::string& host, std::uint16_t port, int timeout_ms = 10000);

/// Splits "host:port" (host may be empty for listening).
std::pair<std::string, std::uint16_t> parse_address(std::string_view addr);

}  // namespace hwgn2::net
