#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hwgn2/block.hpp"
#include "hwgn2/bytes.hpp"
#include "hwgn2/channel.hpp"
#include "hwgn2/group.hpp"
#include "hwgn2/prg.hpp"

namespace hwgn2::ot {

using MessagePair = std::pair<Block, Block>;

inline constexpr std::size_t kCiphertextBytes = 32;  // 16-byte payload + 16-byte tag

// Three-message 1-out-of-2 OT, n transfers in parallel:
//   OT1  S -> R  A = g^a
//   OT2  R -> S  B_i = g^b_i (choice 0) or A * g^b_i (choice 1)
//   OT3  S -> R  AEAD_{k0}(m0_i), AEAD_{k1}(m1_i) with k0 = H(B_i^a), k1 = H((B_i / A)^a)
// The receiver derives k_{c_i} = H(A^b_i) and can open only that ciphertext.

class OtSender {
 public:
  OtSender(const Group& group, std::vector<MessagePair> pairs, Prg& prg);
  /// Pairs supplied later with set_pairs(), before third_message().
  OtSender(const Group& group, Prg& prg);
  void set_pairs(std::vector<MessagePair> pairs) { pairs_ = std::move(pairs); }
  Bytes first_message();
  Bytes third_message(std::span<const std::uint8_t> second);

 private:
  const Group& group_;
  std::vector<MessagePair> pairs_;
  Scalar a_{};
  Element A_{};
};

class OtReceiver {
 public:
  OtReceiver(const Group& group, std::vector<std::uint8_t> choices, Prg& prg);
  Bytes second_message(std::span<const std::uint8_t> first);
  /// Throws if any chosen ciphertext fails authentication.
  std::vector<Block> finish(std::span<const std::uint8_t> third);

  /// Tries to open ciphertext `which` of transfer i with the receiver's only
  /// key. Succeeds only for the chosen side; used to audit that property.
  std::optional<Block> try_open(std::span<const std::uint8_t> third, std::size_t i, int which) const;

 private:
  const Group& group_;
  std::vector<std::uint8_t> choices_;
  std::vector<Scalar> b_;
  std::vector<Element> B_;
  Element A_{};
};

/// Runs the sender side over a channel (OT1 out, OT2 in, OT3 out).
void ot_send(net::Channel& ch, const Group& group, std::vector<MessagePair> pairs, Prg& prg);
/// Runs the receiver side over a channel.
std::vector<Block> ot_receive(net::Channel& ch, const Group& group, std::vector<std::uint8_t> choices, Prg& prg);

struct TransferResult {
  std::vector<Block> received;
  std::uint64_t rounds = 0;
  std::uint64_t bytes_sender_to_receiver = 0;
  std::uint64_t bytes_receiver_to_sender = 0;
};

/// Both roles over an in-process loopback pair. One call is one round.
TransferResult ot_transfer(const Group& group, std::vector<MessagePair> pairs, std::vector<std::uint8_t> choices,
                           const Seed& seed);

}  // namespace hwgn2::ot
