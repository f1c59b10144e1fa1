#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace ksdyn {

/// FNV-1a over the bytes of the input.
std::uint64_t fnv1a64(std::string_view bytes);

/// Value x for hashing plus a fixed-width lowercase hex rendering.
std::string hex64(std::uint64_t value);

/// Percent-escapes '%', whitespace and control bytes so the result is a
/// single printable token. Round-trips through percent_unescape.
std::string percent_escape(std::string_view raw);
std::string percent_unescape(std::string_view escaped);

/// Shortest decimal rendering that round-trips a double exactly.
std::string format_double(double value);

/// Worker count for data-parallel loops: KSDYN_THREADS if set and positive,
/// otherwise hardware concurrency, never less than 1.
unsigned worker_count();

}  // namespace ksdyn
