#include "wpt/units.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <utility>

#include "wpt/errors.hpp"

namespace wpt {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

double parse_power(std::string_view text) {
  const std::string_view s = trim(text);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || end == s.data()) {
    throw ValidationError("cannot parse power value '" + std::string(text) + "'");
  }
  const std::string_view unit = trim(std::string_view(end, s.data() + s.size() - end));
  static const std::array<std::pair<std::string_view, double>, 7> kUnits = {{
      {"", 1.0}, {"W", 1.0}, {"mW", 1e-3}, {"uW", 1e-6}, {"μW", 1e-6}, {"µW", 1e-6}, {"nW", 1e-9},
  }};
  for (const auto& [name, scale] : kUnits) {
    if (unit == name) {
      if (!std::isfinite(value)) throw ValidationError("non-finite power '" + std::string(text) + "'");
      return value * scale;
    }
  }
  throw ValidationError("unknown power unit '" + std::string(unit) + "' in '" + std::string(text) +
                        "' (expected W, mW, uW or nW)");
}

std::vector<double> parse_power_list(std::string_view text) {
  std::vector<double> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(parse_power(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (out.empty()) throw ValidationError("empty power list");
  return out;
}

std::string format_power(double watts) {
  static const std::array<std::pair<const char*, double>, 4> kUnits = {{
      {"W", 1.0}, {"mW", 1e-3}, {"uW", 1e-6}, {"nW", 1e-9},
  }};
  const double mag = std::abs(watts);
  auto pick = kUnits.back();
  for (const auto& u : kUnits) {
    if (mag >= u.second) {
      pick = u;
      break;
    }
  }
  if (mag == 0.0) pick = kUnits.front();
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g %s", watts / pick.second, pick.first);
  return buf;
}

}  // namespace wpt
