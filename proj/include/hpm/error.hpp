#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace hpm {

// Error classes map 1:1 onto CLI exit codes.
enum class Errc : int {
  usage = 2,   // bad flags / unknown subcommand
  io = 3,      // missing or unreadable input
  schema = 4,  // header / column / format mismatch
  data = 5,    // semantically invalid data or model preconditions
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string msg) : std::runtime_error(std::move(msg)), code_(code) {}
  Errc code() const noexcept { return code_; }
  int exit_code() const noexcept { return static_cast<int>(code_); }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace hpm
