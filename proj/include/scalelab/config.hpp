#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace scalelab {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A configured resource limit was exceeded (point counts, closure sizes,
// window sizes). Never downgraded to a silent truncation.
struct LimitError : Error {
  explicit LimitError(const std::string& what) : Error(what) {}
};

struct ParseError : Error {
  explicit ParseError(const std::string& what) : Error(what) {}
  ParseError(const std::string& what, int line)
      : Error("line " + std::to_string(line) + ": " + what), line_no(line) {}
  int line_no = 0;
};

struct ValueError : Error {
  explicit ValueError(const std::string& what) : Error(what) {}
};

struct Limits {
  std::size_t max_points = 100'000;    // permutation degree / quotient points
  std::size_t max_closure = 1'000'000; // explicit element enumeration
  std::size_t max_cosets = 100'000;    // coset enumeration
};

inline Limits& limits() {
  static Limits instance;
  return instance;
}

}  // namespace scalelab
