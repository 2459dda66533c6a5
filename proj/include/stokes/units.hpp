#pragma once

// Quantities with mandatory unit suffixes, e.g. "100 um", "1e-6 K", "90 deg".
// Values are converted to SI (angles to radians, angular frequencies to rad/s).

#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <string_view>

#include "stokes/core.hpp"

namespace stokes {

enum class UnitKind {
  dimensionless,
  length,
  time,
  temperature,
  mass,
  rate,               // 1/s
  angular_frequency,  // rad/s; cycle units (Hz) are multiplied by 2 pi
  wavevector,         // rad/m
  gradient,           // rad/(s m)
  angle,              // rad
};

inline const char* unit_kind_name(UnitKind k) {
  switch (k) {
    case UnitKind::dimensionless: return "dimensionless";
    case UnitKind::length: return "length";
    case UnitKind::time: return "time";
    case UnitKind::temperature: return "temperature";
    case UnitKind::mass: return "mass";
    case UnitKind::rate: return "rate";
    case UnitKind::angular_frequency: return "angular frequency";
    case UnitKind::wavevector: return "wavevector";
    case UnitKind::gradient: return "gradient";
    case UnitKind::angle: return "angle";
  }
  return "unknown";
}

/// Unit written when a quantity is serialized.
inline const char* canonical_unit(UnitKind k) {
  switch (k) {
    case UnitKind::dimensionless: return "";
    case UnitKind::length: return "m";
    case UnitKind::time: return "s";
    case UnitKind::temperature: return "K";
    case UnitKind::mass: return "kg";
    case UnitKind::rate: return "1/s";
    case UnitKind::angular_frequency: return "rad/s";
    case UnitKind::wavevector: return "rad/m";
    case UnitKind::gradient: return "rad/s/m";
    case UnitKind::angle: return "rad";
  }
  return "";
}

inline const std::map<std::string, double, std::less<>>& unit_table(UnitKind k) {
  static const std::map<UnitKind, std::map<std::string, double, std::less<>>> tables = {
      {UnitKind::dimensionless, {}},
      {UnitKind::length, {{"m", 1.0}, {"cm", 1e-2}, {"mm", 1e-3}, {"um", 1e-6}, {"\xC2\xB5m", 1e-6}, {"nm", 1e-9}}},
      {UnitKind::time, {{"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}, {"\xC2\xB5s", 1e-6}, {"ns", 1e-9}}},
      {UnitKind::temperature, {{"K", 1.0}, {"mK", 1e-3}, {"uK", 1e-6}, {"\xC2\xB5K", 1e-6}, {"nK", 1e-9}}},
      {UnitKind::mass, {{"kg", 1.0}, {"g", 1e-3}, {"u", kAtomicMassUnit}, {"amu", kAtomicMassUnit}}},
      {UnitKind::rate,
       {{"1/s", 1.0}, {"/s", 1.0}, {"s^-1", 1.0}, {"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6}, {"1/ms", 1e3}}},
      {UnitKind::angular_frequency,
       {{"rad/s", 1.0}, {"krad/s", 1e3}, {"Mrad/s", 1e6}, {"Hz", 2.0 * kPi}, {"kHz", 2e3 * kPi},
        {"MHz", 2e6 * kPi}, {"GHz", 2e9 * kPi}}},
      {UnitKind::wavevector, {{"rad/m", 1.0}, {"1/m", 1.0}, {"rad/um", 1e6}, {"1/um", 1e6}, {"rad/mm", 1e3}}},
      {UnitKind::gradient, {{"rad/s/m", 1.0}, {"rad/(s*m)", 1.0}, {"rad/(s m)", 1.0}, {"rad/s/mm", 1e3}}},
      {UnitKind::angle, {{"rad", 1.0}, {"mrad", 1e-3}, {"urad", 1e-6}, {"deg", kPi / 180.0}}},
  };
  return tables.at(k);
}

/// Parses "<number> <unit>". Throws ConfigError(key) on a missing or
/// mismatched unit; dimensionless quantities must not carry one.
inline double parse_quantity(std::string_view text, UnitKind kind, const std::string& key = "",
                             int line = 0) {
  std::string s(text);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && std::isspace(static_cast<unsigned char>(s[start]))) ++start;
  s = s.substr(start);
  if (s.empty()) throw ConfigError(key, "empty value", line);

  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError(key, "'" + s + "' does not start with a number", line);
  }
  if (!std::isfinite(value)) throw ConfigError(key, "value must be finite", line);
  std::string unit = s.substr(used);
  std::size_t u0 = 0;
  while (u0 < unit.size() && std::isspace(static_cast<unsigned char>(unit[u0]))) ++u0;
  unit = unit.substr(u0);

  if (kind == UnitKind::dimensionless) {
    if (!unit.empty()) throw ConfigError(key, "dimensionless value carries unit '" + unit + "'", line);
    return value;
  }
  const auto& table = unit_table(kind);
  if (unit.empty()) {
    throw ConfigError(key, std::string("missing unit for ") + unit_kind_name(kind) + " (e.g. '" +
                               std::string(text) + " " + canonical_unit(kind) + "')",
                      line);
  }
  const auto it = table.find(unit);
  if (it == table.end()) {
    std::string allowed;
    for (const auto& [name, _] : table) allowed += (allowed.empty() ? "" : ", ") + name;
    throw ConfigError(key, "unit '" + unit + "' is not a " + unit_kind_name(kind) + " unit (use one of " +
                               allowed + ")",
                      line);
  }
  return value * it->second;
}

/// Shortest text that parses back to exactly the same double.
inline std::string format_double(double v) {
  char buf[64];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::string format_quantity(double value, UnitKind kind) {
  const std::string unit = canonical_unit(kind);
  return unit.empty() ? format_double(value) : format_double(value) + " " + unit;
}

}  // namespace stokes
