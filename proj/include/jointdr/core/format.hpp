#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace jointdr {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 14695981039346656037ull);
std::uint64_t fnv1a(std::span<const double> values);
std::string hex64(std::uint64_t v);

/// Quotes a CSV field when it contains a comma, quote or line break.
std::string csv_field(std::string_view s);

}  // namespace jointdr
