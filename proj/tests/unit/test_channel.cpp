#include <gtest/gtest.h>

#include <thread>

#include "hwgn2/channel.hpp"
#include "hwgn2/error.hpp"

using namespace hwgn2;
using namespace hwgn2::net;

TEST(Channel, LoopbackOrdersFramesAndCountsBytes) {
  auto [a, b] = make_loopback_pair();
  a->send(Tag::Hello, Bytes{1, 2, 3});
  a->send(Tag::Batch, Bytes(100, 7));
  EXPECT_EQ(b->expect(Tag::Hello).payload, (Bytes{1, 2, 3}));
  EXPECT_EQ(b->recv().payload.size(), 100u);
  EXPECT_EQ(a->bytes_sent(), 5 + 3 + 5 + 100u);
  EXPECT_EQ(b->bytes_received(), a->bytes_sent());
}

TEST(Channel, ExpectReportsFramePosition) {
  auto [a, b] = make_loopback_pair();
  a->send(Tag::Hello, {});
  a->send(Tag::Yback, {});
  b->expect(Tag::Hello);
  try {
    b->expect(Tag::Batch);
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.frame_index(), 1u);
  }
  a->send_error("boom");
  EXPECT_THROW(b->expect(Tag::Batch), ProtocolError);
}

TEST(Channel, ClosedPeerRaises) {
  auto [a, b] = make_loopback_pair();
  a.reset();
  EXPECT_THROW(b->recv(), ChannelError);
}

TEST(Channel, TcpRoundTrip) {
  const std::uint16_t port = 39000 + static_cast<std::uint16_t>(::getpid() % 2000);
  std::thread server([port] {
    auto ch = tcp_listen(port);
    Frame f = ch->expect(Tag::Hello);
    ch->send(Tag::Output, std::move(f.payload));
  });
  auto c = tcp_connect("127.0.0.1", port);
  c->send(Tag::Hello, Bytes(70000, 9));
  const Frame f = c->expect(Tag::Output);
  server.join();
  EXPECT_EQ(f.payload, Bytes(70000, 9));
}

TEST(Channel, ParseAddress) {
  EXPECT_EQ(parse_address("127.0.0.1:9000"), (std::pair<std::string, std::uint16_t>{"127.0.0.1", 9000}));
  EXPECT_EQ(parse_address(":7").second, 7);
  EXPECT_THROW(parse_address("host:99999"), Error);
}
