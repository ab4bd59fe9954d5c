#pragma once

#include <stdexcept>
#include <string>

namespace ietlab {

enum class ErrorKind {
  NotHurwitz,
  ZeroVector,
  Overflow,
  NoZeroFound,
  HorizonExceeded,
  DegenerateGain,
  DegenerateG,
  RuleMismatch,
  NotApplicable,
  Config,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotHurwitz: return "NotHurwitz";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::Overflow: return "Overflow";
    case ErrorKind::NoZeroFound: return "NoZeroFound";
    case ErrorKind::HorizonExceeded: return "HorizonExceeded";
    case ErrorKind::DegenerateGain: return "DegenerateGain";
    case ErrorKind::DegenerateG: return "DegenerateG";
    case ErrorKind::RuleMismatch: return "RuleMismatch";
    case ErrorKind::NotApplicable: return "NotApplicable";
    case ErrorKind::Config: return "ConfigError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace ietlab
