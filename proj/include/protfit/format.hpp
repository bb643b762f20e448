#pragma once

#include <string>
#include <string_view>

namespace protfit {

/// Shortest decimal text that round-trips to the same double; locale independent.
std::string format_double(double x);

/// Strict, locale-independent parse of a full string as a double.
double parse_double(std::string_view text);

}  // namespace protfit
