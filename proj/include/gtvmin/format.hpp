#pragma once

#include <string>
#include <string_view>

namespace gtvmin {

/// Locale-independent decimal with 17 significant digits ('.' separator).
/// Infinities print as "inf"/"-inf", NaN as "nan".
std::string format_real(double value);

/// Parses a full token as a double; throws ValidationError naming `what`.
double parse_real(std::string_view token, std::string_view what);

/// Parses a full token as a non-negative integer.
unsigned long long parse_count(std::string_view token, std::string_view what);

} // namespace gtvmin
