#pragma once

#include <stdexcept>
#include <string>

namespace pathmarl {

/// Malformed input file (bad row length, missing fields).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Input violates a documented contract (labels, duplicates, shapes, ranges).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A non-finite value appeared during training; carries the module that raised it.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& module, const std::string& what)
      : std::runtime_error("[" + module + "] " + what), module_(module) {}
  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

}  // namespace pathmarl
