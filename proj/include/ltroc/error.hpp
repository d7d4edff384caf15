#pragma once

#include <stdexcept>
#include <string>

namespace ltroc {

/// Error classes map one-to-one onto CLI exit codes.
enum class ErrorKind { Usage = 1, Ingest = 2, Estimation = 3, Io = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail_estimation(const std::string& what) {
  throw Error(ErrorKind::Estimation, what);
}

}  // namespace ltroc
