#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hwgn2 {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input. Line/column are 1-based; 0 means unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column = 0)
      : Error(format(what, line, column)), line_(line), column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  static std::string format(const std::string& what, std::size_t line, std::size_t column) {
    if (line == 0) return what;
    std::string pos = std::to_string(line);
    if (column != 0) pos += ":" + std::to_string(column);
    return pos + ": " + what;
  }
  std::size_t line_;
  std::size_t column_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ChannelError : public Error {
 public:
  using Error::Error;
};

/// A peer violated the session protocol. `frame_index` is the 0-based index of
/// the offending frame in the receiving party's log.
class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& what, std::size_t frame_index)
      : Error("frame " + std::to_string(frame_index) + ": " + what), frame_index_(frame_index) {}

  std::size_t frame_index() const { return frame_index_; }

 private:
  std::size_t frame_index_;
};

}  // namespace hwgn2
