#pragma once

#include <array>
#include <string>
#include <string_view>
#include <utility>

#include "ackscope/errors.hpp"

namespace ackscope {

// Specialize with `static constexpr std::array<std::pair<E, std::string_view>, N> kNames`.
template <typename E>
struct EnumNames;

template <typename E>
std::string_view to_string(E value) {
  for (const auto& [v, name] : EnumNames<E>::kNames) {
    if (v == value) return name;
  }
  return "?";
}

template <typename E>
E parse_enum(std::string_view text) {
  for (const auto& [v, name] : EnumNames<E>::kNames) {
    if (name == text) return v;
  }
  std::string known;
  for (const auto& [v, name] : EnumNames<E>::kNames) {
    if (!known.empty()) known += ", ";
    known += name;
  }
  throw InvalidInput("unknown value '" + std::string(text) + "' (expected one of: " + known + ")");
}

}  // namespace ackscope
