#pragma once

#include <stdexcept>
#include <string>

namespace ovseg {

// Invalid in-memory structures, bad parameters, bad flag combinations.
class validation_error : public std::runtime_error {
 public:
  explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed file contents: wrong magic, truncation, out-of-range payloads.
class format_error : public validation_error {
 public:
  explicit format_error(const std::string& what) : validation_error(what) {}
};

// Filesystem-level failures (open/read/write).
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

// A broken internal invariant; indicates a bug, not bad input.
class internal_error : public std::logic_error {
 public:
  explicit internal_error(const std::string& what) : std::logic_error(what) {}
};

}  // namespace ovseg
