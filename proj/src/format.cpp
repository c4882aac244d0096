#include "gtvmin/format.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include "gtvmin/errors.hpp"

namespace gtvmin {

std::string format_real(double value) {
  if (std::isnan(value))
    return "nan";
  if (std::isinf(value))
    return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value,
                                 std::chars_format::general, 17);
  if (ec != std::errc{})
    throw ValidationError("cannot format real value");
  return std::string(buf, end);
}

double parse_real(std::string_view token, std::string_view what) {
  double value = 0.0;
  const char *first = token.data();
  const char *last = token.data() + token.size();
  // from_chars rejects a leading '+', which some writers emit.
  if (first != last && *first == '+')
    ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || first == last)
    throw ValidationError("invalid real number '" + std::string(token) +
                          "' in " + std::string(what));
  return value;
}

unsigned long long parse_count(std::string_view token, std::string_view what) {
  unsigned long long value = 0;
  auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size() || token.empty())
    throw ValidationError("invalid integer '" + std::string(token) + "' in " +
                          std::string(what));
  return value;
}

} // namespace gtvmin
