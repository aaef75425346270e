#pragma once

#include <stdexcept>
#include <string>

namespace jigsaw {

// Caller passed arguments that violate an operation's preconditions.
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

// A persisted artifact could not be read back (missing, truncated, inconsistent).
class LoadError : public std::runtime_error {
 public:
  explicit LoadError(const std::string& what) : std::runtime_error(what) {}
};

// An invariant that the library itself is responsible for was broken.
class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace jigsaw
