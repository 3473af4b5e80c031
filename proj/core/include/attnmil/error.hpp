#pragma once

#include <stdexcept>
#include <string>

namespace attnmil {

// Raised for violated preconditions, malformed input files and I/O failures.
// Anything else escaping the library is a bug.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

[[noreturn]] inline void fail(const std::string& message) { throw Error(message); }

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(message);
}

}  // namespace attnmil
