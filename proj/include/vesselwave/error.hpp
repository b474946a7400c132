#pragma once

#include <stdexcept>
#include <string>

namespace vesselwave {

// Categories surface in the CLI as `error[<category>]: ...` and select the exit code.
enum class ErrorKind {
  io,
  config,
  parameter,
  data,
  training,
  dataset,
  load,
};

const char* to_string(ErrorKind kind);
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace vesselwave
