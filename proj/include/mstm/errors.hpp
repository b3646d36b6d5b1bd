#pragma once

#include <stdexcept>
#include <string>

namespace mstm {

// Base error for numerical / model failures (CLI exit code 1).
class MstmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or missing inputs: files, config keys, malformed data (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg, std::string path = "")
      : std::runtime_error(msg), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace mstm
