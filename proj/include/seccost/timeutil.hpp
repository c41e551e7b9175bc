#pragma once

#include <cstdint>
#include <string>

namespace seccost {

// Wall clock, UTC milliseconds since epoch. Used only for record timestamps.
int64_t wall_utc_ms();

// Monotonic clock, nanoseconds. Used for all durations.
int64_t monotonic_ns();

// "2026-08-10T15:12:03.123Z"
std::string to_iso8601_ms(int64_t utc_ms);
int64_t from_iso8601_ms(const std::string& s);

// Round-trippable double formatting for the store files.
std::string format_double(double v);
double parse_double(const std::string& s);

} // namespace seccost
