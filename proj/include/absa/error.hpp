#pragma once

#include <stdexcept>
#include <string>

namespace absa {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Errors tied to a position in an input file.
struct ParseError : Error {
  ParseError(const std::string& msg, int line_no)
      : Error(msg + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
  int line;
};

}  // namespace absa
