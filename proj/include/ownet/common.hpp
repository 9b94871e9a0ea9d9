#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ownet {

/// Dense node index into a FirmGraph.
using NodeId = std::uint32_t;

/// Neighbor definition: out = investees, in = investors, undirected = both.
enum class Direction : std::uint8_t { out, in, undirected };

std::string_view to_string(Direction direction);
Direction parse_direction(std::string_view text);

/// Base class for recoverable errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input record. `line()` is 1-based and counts the header.
class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, const std::string& what);

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

}  // namespace ownet
