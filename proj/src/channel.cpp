#include "hwgn2/channel.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <thread>

#include "hwgn2/error.hpp"

namespace hwgn2::net {

std::string_view to_string(Tag t) {
  switch (t) {
    case Tag::Hello: return "HELLO";
    case Tag::PhiMeta: return "PHI_META";
    case Tag::Ot1: return "OT1";
    case Tag::Ot2: return "OT2";
    case Tag::Ot3: return "OT3";
    case Tag::Batch: return "BATCH";
    case Tag::Yback: return "YBACK";
    case Tag::Decode: return "DECODE";
    case Tag::Output: return "OUTPUT";
    case Tag::OpenSeed: return "OPEN_SEED";
    case Tag::Verdict: return "VERDICT";
    case Tag::Err: return "ERR";
  }
  return "?";
}

void Channel::log(bool sent, const Frame& f) {
  if (!transcript_on_) return;
  TranscriptEntry e;
  e.sent = sent;
  e.tag = f.tag;
  e.length = static_cast<std::uint32_t>(f.payload.size());
  if (transcript_digests_) e.digest = sha256(f.payload);
  transcript_.push_back(e);
}

void Channel::send(Tag tag, Bytes payload) {
  if (payload.size() > kMaxFramePayload) throw ChannelError("frame payload too large");
  Frame f{tag, std::move(payload)};
  log(true, f);
  bytes_sent_ += kFrameHeaderBytes + f.payload.size();
  send_frame(std::move(f));
}

Frame Channel::recv() {
  Frame f = recv_frame();
  bytes_received_ += kFrameHeaderBytes + f.payload.size();
  ++frames_received_;
  log(false, f);
  return f;
}

Frame Channel::expect(Tag tag) {
  Frame f = recv();
  const std::size_t index = frames_received_ - 1;
  if (f.tag == Tag::Err)
    throw ProtocolError("peer aborted: " + std::string(f.payload.begin(), f.payload.end()), index);
  if (f.tag != tag)
    throw ProtocolError("expected " + std::string(to_string(tag)) + ", got " + std::string(to_string(f.tag)), index);
  return f;
}

void Channel::send_error(std::string_view message) noexcept {
  try {
    send(Tag::Err, Bytes(message.begin(), message.end()));
  } catch (...) {
  }
}

namespace {

struct Queue {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<Frame> frames;
  bool closed = false;
};

class LoopbackChannel final : public Channel {
 public:
  LoopbackChannel(std::shared_ptr<Queue> out, std::shared_ptr<Queue> in) : out_(std::move(out)), in_(std::move(in)) {}
  ~LoopbackChannel() override {
    std::lock_guard lock(out_->mu);
    out_->closed = true;
    out_->cv.notify_all();
  }

 protected:
  void send_frame(Frame&& f) override {
    std::lock_guard lock(out_->mu);
    out_->frames.push_back(std::move(f));
    out_->cv.notify_all();
  }
  Frame recv_frame() override {
    std::unique_lock lock(in_->mu);
    in_->cv.wait(lock, [&] { return !in_->frames.empty() || in_->closed; });
    if (in_->frames.empty()) throw ChannelError("peer closed the channel");
    Frame f = std::move(in_->frames.front());
    in_->frames.pop_front();
    return f;
  }

 private:
  std::shared_ptr<Queue> out_;
  std::shared_ptr<Queue> in_;
};

class TcpChannel final : public Channel {
 public:
  explicit TcpChannel(int fd) : fd_(fd) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }
  ~TcpChannel() override { ::close(fd_); }

 protected:
  void send_frame(Frame&& f) override {
    std::uint8_t header[kFrameHeaderBytes];
    header[0] = static_cast<std::uint8_t>(f.tag);
    const auto len = static_cast<std::uint32_t>(f.payload.size());
    for (int i = 0; i < 4; ++i) header[1 + i] = static_cast<std::uint8_t>(len >> (8 * i));
    write_all(header, sizeof header);
    write_all(f.payload.data(), f.payload.size());
  }
  Frame recv_frame() override {
    std::uint8_t header[kFrameHeaderBytes];
    read_all(header, sizeof header);
    Frame f;
    f.tag = static_cast<Tag>(header[0]);
    if (header[0] < static_cast<std::uint8_t>(Tag::Hello) || header[0] > static_cast<std::uint8_t>(Tag::Err))
      throw ChannelError("unknown frame tag " + std::to_string(header[0]));
    std::uint32_t len = 0;
    for (int i = 0; i < 4; ++i) len |= std::uint32_t{header[1 + i]} << (8 * i);
    if (len > kMaxFramePayload) throw ChannelError("frame length out of range");
    f.payload.resize(len);
    read_all(f.payload.data(), len);
    return f;
  }

 private:
  void write_all(const std::uint8_t* p, std::size_t n) {
    while (n > 0) {
      const ssize_t w = ::send(fd_, p, n, MSG_NOSIGNAL);
      if (w < 0 && errno == EINTR) continue;
      if (w <= 0) throw ChannelError(std::string("send failed: ") + std::strerror(errno));
      p += w;
      n -= static_cast<std::size_t>(w);
    }
  }
  void read_all(std::uint8_t* p, std::size_t n) {
    while (n > 0) {
      const ssize_t r = ::recv(fd_, p, n, 0);
      if (r < 0 && errno == EINTR) continue;
      if (r == 0) throw ChannelError("connection closed by peer");
      if (r < 0) throw ChannelError(std::string("recv failed: ") + std::strerror(errno));
      p += r;
      n -= static_cast<std::size_t>(r);
    }
  }
  int fd_;
};

}  // namespace

std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_loopback_pair() {
  auto a = std::make_shared<Queue>();
  auto b = std::make_shared<Queue>();
  return {std::make_unique<LoopbackChannel>(a, b), std::make_unique<LoopbackChannel>(b, a)};
}

std::unique_ptr<Channel> tcp_listen(std::uint16_t port) {
  const int srv = ::socket(AF_INET, SOCK_STREAM, 0);
  if (srv < 0) throw ChannelError(std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(srv, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = htons(port);
  if (::bind(srv, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(srv, 1) < 0) {
    const std::string msg = std::strerror(errno);
    ::close(srv);
    throw ChannelError("cannot listen on port " + std::to_string(port) + ": " + msg);
  }
  const int fd = ::accept(srv, nullptr, nullptr);
  ::close(srv);
  if (fd < 0) throw ChannelError(std::string("accept: ") + std::strerror(errno));
  return std::make_unique<TcpChannel>(fd);
}

std::unique_ptr<Channel> tcp_connect(const std::string& host, std::uint16_t port, int timeout_ms) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (::getaddrinfo(host.empty() ? "127.0.0.1" : host.c_str(), service.c_str(), &hints, &res) != 0 || !res)
    throw ChannelError("cannot resolve " + host);
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  std::string last_error;
  while (true) {
    const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (fd >= 0 && ::connect(fd, res->ai_addr, res->ai_addrlen) == 0) {
      ::freeaddrinfo(res);
      return std::make_unique<TcpChannel>(fd);
    }
    last_error = std::strerror(errno);
    if (fd >= 0) ::close(fd);
    if (std::chrono::steady_clock::now() >= deadline) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  ::freeaddrinfo(res);
  throw ChannelError("connection to " + host + ":" + service + " failed: " + last_error);
}

std::pair<std::string, std::uint16_t> parse_address(std::string_view addr) {
  const auto colon = addr.rfind(':');
  std::string_view host = colon == std::string_view::npos ? std::string_view{} : addr.substr(0, colon);
  std::string_view port_text = colon == std::string_view::npos ? addr : addr.substr(colon + 1);
  unsigned port = 0;
  auto [p, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc() || p != port_text.data() + port_text.size() || port == 0 || port > 65535)
    throw Error("bad address '" + std::string(addr) + "': expected host:port");
  return {std::string(host), static_cast<std::uint16_t>(port)};
}

}  // namespace hwgn2::net
