#include "ackscope/time.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <string>

#include "ackscope/errors.hpp"

namespace ackscope {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

Millis parse_duration(std::string_view text) {
  text = trim(text);
  if (text.empty()) throw InvalidInput("empty duration");

  // from_chars for double is missing from older libstdc++.
  double value = 0.0;
  std::size_t consumed = 0;
  try {
    value = std::stod(std::string(text), &consumed);
  } catch (const std::exception&) {
    throw InvalidInput("bad duration '" + std::string(text) + "'");
  }
  std::string_view unit = trim(text.substr(consumed));
  double scale = 1.0;
  if (unit.empty() || unit == "ms") {
    scale = 1.0;
  } else if (unit == "s") {
    scale = kSecond;
  } else if (unit == "min" || unit == "m") {
    scale = kMinute;
  } else if (unit == "h") {
    scale = kHour;
  } else if (unit == "d") {
    scale = 24.0 * kHour;
  } else {
    throw InvalidInput("bad duration unit '" + std::string(unit) + "'");
  }
  if (value < 0) throw InvalidInput("negative duration '" + std::string(text) + "'");
  return static_cast<Millis>(value * scale + 0.5);
}

Millis parse_time_of_day(std::string_view text) {
  text = trim(text);
  int parts[3] = {0, 0, 0};
  int count = 0;
  while (!text.empty()) {
    if (count == 3) throw InvalidInput("bad time of day '" + std::string(text) + "'");
    auto colon = text.find(':');
    std::string_view field = text.substr(0, colon);
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), parts[count]);
    if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
      throw InvalidInput("bad time of day field '" + std::string(field) + "'");
    }
    ++count;
    if (colon == std::string_view::npos) break;
    text.remove_prefix(colon + 1);
  }
  if (count < 2 || parts[0] > 23 || parts[1] > 59 || parts[2] > 59) {
    throw InvalidInput("bad time of day");
  }
  return parts[0] * kHour + parts[1] * kMinute + parts[2] * kSecond;
}

SimTime parse_instant(std::string_view text, Millis epoch_of_day) {
  text = trim(text);
  if (text.find(':') != std::string_view::npos) {
    Millis tod = parse_time_of_day(text);
    if (tod < epoch_of_day) tod += 24 * kHour;  // crosses midnight
    return tod - epoch_of_day;
  }
  return parse_duration(text);
}

std::string format_time_of_day(SimTime t, Millis epoch_of_day) {
  Millis tod = (t + epoch_of_day) % (24 * kHour);
  if (tod < 0) tod += 24 * kHour;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld.%03lld", static_cast<long long>(tod / kHour),
                static_cast<long long>((tod / kMinute) % 60), static_cast<long long>((tod / kSecond) % 60),
                static_cast<long long>(tod % kSecond));
  return buf;
}

}  // namespace ackscope
