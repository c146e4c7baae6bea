#include "nca/error.hpp"

namespace nca {

const char* to_string(ErrorClass cls) noexcept {
  switch (cls) {
    case ErrorClass::usage: return "usage";
    case ErrorClass::config: return "config";
    case ErrorClass::contract: return "contract";
    case ErrorClass::format: return "format";
    case ErrorClass::size_budget: return "size-budget";
    case ErrorClass::task_mismatch: return "task-mismatch";
    case ErrorClass::numeric: return "numeric-fault";
    case ErrorClass::io: return "io";
  }
  return "unknown";
}

const char* to_string(FormatErrc code) noexcept {
  switch (code) {
    case FormatErrc::bad_magic: return "bad-magic";
    case FormatErrc::bad_version: return "bad-version";
    case FormatErrc::bad_header: return "bad-header";
    case FormatErrc::truncated: return "truncated";
    case FormatErrc::trailing_bytes: return "trailing-bytes";
    case FormatErrc::crc_mismatch: return "crc-mismatch";
    case FormatErrc::non_finite_weight: return "non-finite-weight";
    case FormatErrc::bad_image: return "bad-image";
  }
  return "unknown";
}

SizeBudgetError::SizeBudgetError(std::size_t actual, std::size_t allowed)
    : Error(ErrorClass::size_budget, "serialized model is " + std::to_string(actual) +
                                         " bytes, budget is " + std::to_string(allowed) + " bytes"),
      actual_(actual),
      allowed_(allowed) {}

NumericFault::NumericFault(int step, const std::string& what)
    : Error(ErrorClass::numeric, "step " + std::to_string(step) + ": " + what), step_(step) {}

}  // namespace nca
