#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>

namespace nca {

// Broad failure classes. The CLI maps these onto exit codes.
enum class ErrorClass {
  usage,
  config,
  contract,
  format,
  size_budget,
  task_mismatch,
  numeric,
  io,
};

const char* to_string(ErrorClass cls) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), class_(cls) {}
  ErrorClass error_class() const noexcept { return class_; }

 private:
  ErrorClass class_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorClass::usage, what) {}
};

// Inconsistent dimensions or parameters (channel mismatch, bad fire rate, ...).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorClass::config, what) {}
};

// Caller broke a precondition (coordinates out of bounds, shape mismatch).
class ContractViolation : public Error {
 public:
  explicit ContractViolation(const std::string& what) : Error(ErrorClass::contract, what) {}
};

enum class FormatErrc {
  bad_magic,
  bad_version,
  bad_header,
  truncated,
  trailing_bytes,
  crc_mismatch,
  non_finite_weight,
  bad_image,
};

const char* to_string(FormatErrc code) noexcept;

class FormatError : public Error {
 public:
  FormatError(FormatErrc code, const std::string& what)
      : Error(ErrorClass::format, std::string(to_string(code)) + ": " + what), code_(code) {}
  FormatErrc code() const noexcept { return code_; }

 private:
  FormatErrc code_;
};

class SizeBudgetError : public Error {
 public:
  SizeBudgetError(std::size_t actual, std::size_t allowed);
  std::size_t actual() const noexcept { return actual_; }
  std::size_t allowed() const noexcept { return allowed_; }

 private:
  std::size_t actual_;
  std::size_t allowed_;
};

class TaskMismatchError : public Error {
 public:
  explicit TaskMismatchError(const std::string& what) : Error(ErrorClass::task_mismatch, what) {}
};

class NumericFault : public Error {
 public:
  NumericFault(int step, const std::string& what);
  int step() const noexcept { return step_; }

 private:
  int step_;
};

class IoError : public Error {
 public:
  IoError(const std::filesystem::path& path, const std::string& what)
      : Error(ErrorClass::io, path.string() + ": " + what), path_(path) {}
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace nca
