#pragma once

#include <stdexcept>
#include <string>

namespace shaftdock {

/// Failure categories; the CLI maps them onto process exit codes.
enum class ErrorKind {
  Processing = 1,
  Io = 2,
  Config = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error processing_error(const std::string& what) { return {ErrorKind::Processing, what}; }
inline Error io_error(const std::string& what) { return {ErrorKind::Io, what}; }
inline Error config_error(const std::string& what) { return {ErrorKind::Config, what}; }

}  // namespace shaftdock
