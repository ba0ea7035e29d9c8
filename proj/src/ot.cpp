#include "hwgn2/ot.hpp"

#include <sodium.h>

#include <thread>

#include "hwgn2/digest.hpp"
#include "hwgn2/error.hpp"

namespace hwgn2::ot {
namespace {

using Key = std::array<std::uint8_t, crypto_aead_chacha20poly1305_ietf_KEYBYTES>;

Key derive_key(const Element& A, const Element& B, const Element& shared, std::uint64_t index) {
  Sha256 h;
  h.update("hwgn2-ot-key");
  h.update(std::span<const std::uint8_t>(A));
  h.update(std::span<const std::uint8_t>(B));
  h.update(std::span<const std::uint8_t>(shared));
  h.update_u64(index);
  const Digest d = h.finish();
  Key k;
  std::copy(d.begin(), d.begin() + k.size(), k.begin());
  return k;
}

const std::uint8_t kNonce[crypto_aead_chacha20poly1305_ietf_NPUBBYTES] = {};

void seal(const Key& k, Block m, std::uint8_t* out) {
  std::uint8_t pt[16];
  m.store(pt);
  unsigned long long clen = 0;
  crypto_aead_chacha20poly1305_ietf_encrypt(out, &clen, pt, sizeof pt, nullptr, 0, nullptr, kNonce, k.data());
}

std::optional<Block> open(const Key& k, const std::uint8_t* c) {
  std::uint8_t pt[16];
  unsigned long long mlen = 0;
  if (crypto_aead_chacha20poly1305_ietf_decrypt(pt, &mlen, nullptr, c, kCiphertextBytes, nullptr, 0, kNonce,
                                                k.data()) != 0)
    return std::nullopt;
  return Block::load(pt);
}

Element read_element(ByteReader& r) {
  Element e;
  auto s = r.raw(e.size());
  std::copy(s.begin(), s.end(), e.begin());
  return e;
}

}  // namespace

OtSender::OtSender(const Group& group, std::vector<MessagePair> pairs, Prg& prg)
    : group_(group), pairs_(std::move(pairs)) {
  ensure_sodium();
  if (pairs_.empty()) throw Error("OT: no message pairs");
  a_ = group_.random_scalar(prg);
  A_ = group_.generator_pow(a_);
}

OtSender::OtSender(const Group& group, Prg& prg) : group_(group) {
  ensure_sodium();
  a_ = group_.random_scalar(prg);
  A_ = group_.generator_pow(a_);
}

Bytes OtSender::first_message() {
  ByteWriter w;
  w.raw(A_);
  return w.take();
}

Bytes OtSender::third_message(std::span<const std::uint8_t> second) {
  ByteReader r(second);
  const std::uint32_t n = r.u32();
  if (n != pairs_.size())
    throw Error("OT: receiver sent " + std::to_string(n) + " choices for " + std::to_string(pairs_.size()) + " pairs");
  ByteWriter w(4 + 2 * kCiphertextBytes * n);
  w.u32(n);
  std::uint8_t c[kCiphertextBytes];
  for (std::uint32_t i = 0; i < n; ++i) {
    const Element B = read_element(r);
    group_.check(B);
    const Key k0 = derive_key(A_, B, group_.pow(B, a_), i);
    const Key k1 = derive_key(A_, B, group_.pow(group_.div(B, A_), a_), i);
    seal(k0, pairs_[i].first, c);
    w.raw(c);
    seal(k1, pairs_[i].second, c);
    w.raw(c);
  }
  r.expect_end();
  return w.take();
}

OtReceiver::OtReceiver(const Group& group, std::vector<std::uint8_t> choices, Prg& prg)
    : group_(group), choices_(std::move(choices)) {
  ensure_sodium();
  if (choices_.empty()) throw Error("OT: no choice bits");
  b_.reserve(choices_.size());
  for (std::size_t i = 0; i < choices_.size(); ++i) b_.push_back(group_.random_scalar(prg));
}

Bytes OtReceiver::second_message(std::span<const std::uint8_t> first) {
  ByteReader r(first);
  A_ = read_element(r);
  r.expect_end();
  group_.check(A_);
  ByteWriter w(4 + 32 * choices_.size());
  w.u32(static_cast<std::uint32_t>(choices_.size()));
  B_.clear();
  for (std::size_t i = 0; i < choices_.size(); ++i) {
    Element B = group_.generator_pow(b_[i]);
    if (choices_[i]) B = group_.mul(A_, B);
    B_.push_back(B);
    w.raw(B);
  }
  return w.take();
}

std::optional<Block> OtReceiver::try_open(std::span<const std::uint8_t> third, std::size_t i, int which) const {
  ByteReader r(third);
  const std::uint32_t n = r.u32();
  if (n != choices_.size() || i >= n) throw Error("OT: ciphertext count mismatch");
  r.raw(i * 2 * kCiphertextBytes);
  const auto c0 = r.raw(kCiphertextBytes);
  const auto c1 = r.raw(kCiphertextBytes);
  const Key k = derive_key(A_, B_[i], group_.pow(A_, b_[i]), i);
  return open(k, which ? c1.data() : c0.data());
}

std::vector<Block> OtReceiver::finish(std::span<const std::uint8_t> third) {
  ByteReader r(third);
  const std::uint32_t n = r.u32();
  if (n != choices_.size()) throw Error("OT: got " + std::to_string(n) + " ciphertext pairs, expected " + std::to_string(choices_.size()));
  std::vector<Block> out;
  out.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto c0 = r.raw(kCiphertextBytes);
    const auto c1 = r.raw(kCiphertextBytes);
    const Key k = derive_key(A_, B_[i], group_.pow(A_, b_[i]), i);
    auto m = open(k, choices_[i] ? c1.data() : c0.data());
    if (!m) throw Error("OT: ciphertext " + std::to_string(i) + " failed authentication");
    out.push_back(*m);
  }
  r.expect_end();
  return out;
}

void ot_send(net::Channel& ch, const Group& group, std::vector<MessagePair> pairs, Prg& prg) {
  OtSender s(group, std::move(pairs), prg);
  ch.send(net::Tag::Ot1, s.first_message());
  const net::Frame f = ch.expect(net::Tag::Ot2);
  ch.send(net::Tag::Ot3, s.third_message(f.payload));
}

std::vector<Block> ot_receive(net::Channel& ch, const Group& group, std::vector<std::uint8_t> choices, Prg& prg) {
  OtReceiver r(group, std::move(choices), prg);
  const net::Frame f1 = ch.expect(net::Tag::Ot1);
  ch.send(net::Tag::Ot2, r.second_message(f1.payload));
  const net::Frame f3 = ch.expect(net::Tag::Ot3);
  return r.finish(f3.payload);
}

TransferResult ot_transfer(const Group& group, std::vector<MessagePair> pairs, std::vector<std::uint8_t> choices,
                           const Seed& seed) {
  if (pairs.size() != choices.size())
    throw Error("OT: " + std::to_string(pairs.size()) + " pairs but " + std::to_string(choices.size()) + " choices");
  auto [sender_end, receiver_end] = net::make_loopback_pair();
  std::exception_ptr sender_error;
  std::thread sender([&, ch = sender_end.get()] {
    try {
      Prg prg(derive_seed(seed, "ot-sender", 0));
      ot_send(*ch, group, std::move(pairs), prg);
    } catch (...) {
      sender_error = std::current_exception();
      ch->send_error("sender failed");
    }
  });
  TransferResult res;
  std::exception_ptr receiver_error;
  try {
    Prg prg(derive_seed(seed, "ot-receiver", 0));
    res.received = ot_receive(*receiver_end, group, std::move(choices), prg);
  } catch (...) {
    receiver_error = std::current_exception();
    receiver_end.reset();
  }
  sender.join();
  if (sender_error) std::rethrow_exception(sender_error);
  if (receiver_error) std::rethrow_exception(receiver_error);
  res.rounds = 1;
  res.bytes_sender_to_receiver = sender_end->bytes_sent();
  res.bytes_receiver_to_sender = receiver_end->bytes_sent();
  return res;
}

}  // namespace hwgn2::ot
