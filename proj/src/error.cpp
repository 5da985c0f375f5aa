#include "fairsense/error.hpp"

namespace fairsense {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kIo: return "io error";
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kData: return "data error";
    case ErrorKind::kDimension: return "dimension error";
    case ErrorKind::kDomain: return "domain error";
    case ErrorKind::kContract: return "contract error";
    case ErrorKind::kNumeric: return "numeric failure";
    case ErrorKind::kMismatch: return "mismatch";
    case ErrorKind::kEmptyGroup: return "empty group";
    case ErrorKind::kUndefinedRatio: return "undefined ratio";
  }
  return "unknown";
}

}  // namespace fairsense
