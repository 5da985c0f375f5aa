#pragma once

#include <string>
#include <string_view>

namespace fairsense {

// Parses a complete decimal real; "inf"/"+inf"/"infinity" map to +infinity.
// Throws Error(kParse) on anything else.
double parse_real(std::string_view text);

// Shortest text that parses back to exactly `value`, at most 17 significant
// digits. Infinity prints as "inf".
std::string format_real(double value);

std::string sha256_hex(std::string_view bytes);

}  // namespace fairsense
