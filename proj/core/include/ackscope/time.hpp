#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace ackscope {

// Simulated time: integer milliseconds since the scenario epoch.
using SimTime = std::int64_t;
using Millis = std::int64_t;

inline constexpr Millis kSecond = 1000;
inline constexpr Millis kMinute = 60 * kSecond;
inline constexpr Millis kHour = 60 * kMinute;

// "250ms", "20s", "10min", "2h", "1d" or a bare integer (milliseconds).
Millis parse_duration(std::string_view text);

// "HH:MM" or "HH:MM:SS" as milliseconds since midnight.
Millis parse_time_of_day(std::string_view text);

// Accepts either a time of day (relative to `epoch_of_day`) or a duration
// offset. "19:28" with epoch "19:00" is 28 minutes.
SimTime parse_instant(std::string_view text, Millis epoch_of_day);

std::string format_time_of_day(SimTime t, Millis epoch_of_day);

}  // namespace ackscope
