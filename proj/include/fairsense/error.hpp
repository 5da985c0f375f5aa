#pragma once

#include <stdexcept>
#include <string>

namespace fairsense {

// Error categories map one-to-one onto the C API status codes.
enum class ErrorKind {
  kInvalidArgument,  // bad option / precondition on a scalar argument
  kIo,               // unreadable or unwritable file
  kParse,            // malformed CSV row or JSON document
  kData,             // well-formed input whose content violates a contract
  kDimension,        // shape mismatch
  kDomain,           // value outside an operation's mathematical domain
  kContract,         // API misuse (e.g. backward from a non-scalar)
  kNumeric,          // non-finite result during training
  kMismatch,         // schema fingerprint / format version mismatch
  kEmptyGroup,       // metric conditioned on an empty group
  kUndefinedRatio,   // disparate impact with zero privileged rate
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

const char* to_string(ErrorKind kind) noexcept;

}  // namespace fairsense
