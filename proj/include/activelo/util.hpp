#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace activelo {

enum class ErrorKind {
  invalid_argument,
  io,
  parse,
  infeasible,
  numeric,
  internal,
};

// Core error type. The C API maps ErrorKind onto activelo_status codes and
// the CLI maps it onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

// Warnings go to stderr so machine-readable stdout stays clean.
void log_warn(const std::string& message);

// Runs fn(i) for i in [0, n) on up to `workers` threads. Work items must not
// share mutable state. The first exception thrown by any item is rethrown.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

// 0 means "pick from hardware"; anything else is clamped to [1, 256].
int resolve_workers(int requested);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace activelo
