#pragma once

// Run configuration: a YAML file of nested sections whose leaves are checked
// against a fixed schema. Physical quantities carry unit suffixes
// ("fwhm: 100 um"); unknown keys, missing units and invariant violations are
// reported with the key and source line.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "stokes/core.hpp"
#include "stokes/units.hpp"

namespace stokes::cli {

enum class ValueType { integer, real, boolean, choice, text, integer_list, real_list, text_list };
enum class Constraint { none, positive, nonnegative };

struct KeySpec {
  std::string key;
  ValueType type = ValueType::real;
  UnitKind unit = UnitKind::dimensionless;
  std::optional<std::string> default_text;  // nullopt: unset unless given
  Constraint constraint = Constraint::none;
  std::vector<std::string> choices;
  bool execution_only = false;  // excluded from the serialized config and its digest
  std::string help;
};

inline const std::vector<KeySpec>& schema() {
  using V = ValueType;
  using U = UnitKind;
  using C = Constraint;
  static const std::vector<KeySpec> keys = {
      {"seed", V::integer, U::dimensionless, "1", C::nonnegative, {}, false, "global seed"},
      {"threads", V::integer, U::dimensionless, "1", C::positive, {}, true, "worker threads"},

      {"output.dir", V::text, U::dimensionless, ".", C::none, {}, true, "output directory"},
      {"output.format", V::choice, U::dimensionless, "csv", C::none, {"csv", "pgm", "both"}, false, "image format"},
      {"output.prefix", V::text, U::dimensionless, "", C::none, {}, false, "file prefix (default: subcommand)"},
      {"output.pgm_depth", V::choice, U::dimensionless, "16", C::none, {"8", "16"}, false, "graymap bit depth"},
      {"output.tone", V::choice, U::dimensionless, "linear", C::none, {"linear", "log"}, false, "graymap tone map"},

      {"state.kind", V::choice, U::dimensionless, "coherent", C::none, {"summary", "dicke", "coherent"}, false,
       "state family"},
      {"state.n_atoms", V::integer, U::dimensionless, "1000", C::positive, {}, false, "atom number N"},
      {"state.ns_mean", V::real, U::dimensionless, std::nullopt, C::nonnegative, {}, false, "<N_s> (summary)"},
      {"state.ns_var", V::real, U::dimensionless, std::nullopt, C::nonnegative, {}, false, "(Delta N_s)^2 (summary)"},
      {"state.pair_sum", V::real, U::dimensionless, std::nullopt, C::none, {}, false, "P (summary)"},
      {"state.ratio", V::real, U::dimensionless, std::nullopt, C::none, {}, false,
       "measured peak/dip ratio, converted to P (summary)"},
      {"state.j", V::real, U::dimensionless, std::nullopt, C::nonnegative, {}, false, "total spin J (dicke)"},
      {"state.m", V::real, U::dimensionless, std::nullopt, C::none, {}, false, "J_z eigenvalue M (dicke)"},
      {"state.polar", V::real, U::angle, "90 deg", C::none, {}, false, "Bloch polar angle (coherent)"},
      {"state.azimuth", V::real, U::angle, "0 rad", C::none, {}, false, "Bloch azimuth (coherent)"},
      {"state.dephasing_rate", V::real, U::rate, "0 1/s", C::nonnegative, {}, false, "homogeneous dephasing rate"},
      {"state.dephasing_time", V::real, U::time, "0 s", C::nonnegative, {}, false, "dephasing duration"},

      {"geometry.kind", V::choice, U::dimensionless, "gaussian2d", C::none,
       {"gaussian2d", "gaussian1d", "slab", "lattice"}, false, "ensemble shape"},
      {"geometry.fwhm", V::real, U::length, "100 um", C::positive, {}, false, "Gaussian FWHM A"},
      {"geometry.width", V::real, U::length, "100 um", C::positive, {}, false, "slab width A"},
      {"geometry.height", V::real, U::length, "10 um", C::positive, {}, false, "slab height H"},
      {"geometry.spacing", V::real, U::length, "1 um", C::positive, {}, false, "lattice spacing"},
      {"geometry.dims", V::integer, U::dimensionless, "2", C::positive, {}, false, "lattice dimensionality"},
      {"geometry.samples", V::integer, U::dimensionless, "1", C::positive, {}, false,
       "position realizations averaged in ratio reports"},

      {"laser.wavelength", V::real, U::length, "780 nm", C::positive, {}, false, "probe wavelength"},
      {"laser.rabi_frequency", V::real, U::angular_frequency, "1 MHz", C::positive, {}, false, "Rabi frequency"},
      {"laser.detuning", V::real, U::angular_frequency, "100 MHz", C::positive, {}, false, "detuning"},
      {"laser.linewidth", V::real, U::angular_frequency, "6.07 MHz", C::positive, {}, false,
       "excited-state linewidth"},

      {"grid.half_angle", V::real, U::angle, "0 rad", C::nonnegative, {}, false,
       "image half-width in emission angle (0: twice theta_b)"},
      {"grid.pixels", V::integer, U::dimensionless, "101", C::positive, {}, false, "pixels per axis"},
      {"grid.model", V::choice, U::dimensionless, "fixed_positions", C::none,
       {"fixed_positions", "ensemble_average"}, false, "structure-term model"},
      {"grid.envelope", V::choice, U::dimensionless, "identity", C::none, {"identity", "dipole"}, false,
       "single-atom envelope"},
      {"grid.background", V::choice, U::dimensionless, "ring", C::none, {"ring", "point"}, false,
       "background estimator"},
      {"grid.ring_samples", V::integer, U::dimensionless, "64", C::positive, {}, false, "points on the ring"},

      {"diffract.photons", V::integer, U::dimensionless, "0", C::nonnegative, {}, false,
       "photon budget for a counts image (0: none)"},
      {"diffract.decay_rate", V::real, U::rate, "0 1/s", C::nonnegative, {}, false,
       "decay rate for collection-time series (0: from laser)"},
      {"diffract.collection_times", V::real_list, U::time, "[]", C::nonnegative, {}, false,
       "collection times for the time-resolved ratio"},

      {"witness.phase_diagram", V::boolean, U::dimensionless, "false", C::none, {}, false,
       "write the (variance, P) phase diagram"},
      {"witness.var_points", V::integer, U::dimensionless, "41", C::positive, {}, false, "variance grid points"},
      {"witness.p_points", V::integer, U::dimensionless, "41", C::positive, {}, false, "P grid points"},
      {"witness.dicke_map", V::boolean, U::dimensionless, "false", C::none, {}, false, "write the P(J, M) map"},

      {"gradiometer.mode", V::choice, U::dimensionless, "estimate", C::none, {"estimate", "sweep"}, false,
       "single estimate or sensitivity sweep"},
      {"gradiometer.gradient_x", V::real, U::gradient, "10 rad/s/m", C::none, {}, false, "d eta / dx"},
      {"gradiometer.gradient_y", V::real, U::gradient, "0 rad/s/m", C::none, {}, false, "d eta / dy"},
      {"gradiometer.tau0", V::real, U::time, "1 s", C::positive, {}, false, "precession time tau0"},
      {"gradiometer.photons", V::integer, U::dimensionless, "10000", C::nonnegative, {}, false,
       "photon budget (0: noiseless fit)"},
      {"gradiometer.measure", V::choice, U::dimensionless, "solid_angle", C::none, {"solid_angle", "wavevector"},
       false, "pixel measure for photon draws"},
      {"gradiometer.dephasing_time", V::real, U::time, "1 s", C::positive, {}, false, "dephasing time"},

      {"sensitivity.probe", V::choice, U::dimensionless, "both", C::none, {"collective", "pairs", "both"}, false,
       "probe type"},
      {"sensitivity.n_list", V::integer_list, U::dimensionless, "[8, 16, 32, 64, 128]", C::positive, {}, false,
       "atom numbers"},
      {"sensitivity.trials", V::integer, U::dimensionless, "200", C::positive, {}, false, "trials per N"},
      {"sensitivity.shots", V::integer, U::dimensionless, "2000", C::positive, {}, false, "shots pooled per trial"},
      {"sensitivity.budget_scale", V::real, U::dimensionless, "1", C::positive, {}, false,
       "photons per probe per shot in units of <N_s>"},
      {"sensitivity.k0a", V::real, U::dimensionless, "512", C::positive, {}, false, "k0 A of the 1D ensemble"},
      {"sensitivity.window", V::real, U::dimensionless, "8", C::positive, {}, false, "fit half-window, 1/sigma"},
      {"sensitivity.pixel", V::real, U::dimensionless, "0.25", C::positive, {}, false, "pixel size, 1/sigma"},

      {"thermometry.temperature", V::real, U::temperature, "1 uK", C::nonnegative, {}, false, "temperature"},
      {"thermometry.mass", V::real, U::mass, "86.909180527 u", C::positive, {}, false, "atomic mass"},
      {"thermometry.model", V::choice, U::dimensionless, "ballistic", C::none, {"ballistic", "langevin"}, false,
       "motion model"},
      {"thermometry.collision_rate", V::real, U::rate, "0 1/s", C::nonnegative, {}, false,
       "velocity relaxation rate (langevin)"},
      {"thermometry.dims", V::integer, U::dimensionless, "3", C::positive, {}, false, "axes of motion"},
      {"thermometry.imprint_gradient", V::real, U::wavevector, "0 rad/m", C::nonnegative, {}, false,
       "|grad phi| (0: chosen from max_exponent)"},
      {"thermometry.max_exponent", V::real, U::dimensionless, "0.3", C::positive, {}, false,
       "target |grad phi|^2 <dr^2>/dims at tau1_max"},
      {"thermometry.tau1_max", V::real, U::time, "1 ms", C::positive, {}, false, "largest tau1"},
      {"thermometry.points", V::integer, U::dimensionless, "12", C::positive, {}, false, "tau1 grid points"},
      {"thermometry.dephasing_time", V::real, U::time, "1 s", C::positive, {}, false, "dephasing time"},

      {"oracle.max_n", V::integer, U::dimensionless, "6", C::positive, {}, false, "largest N checked"},
      {"oracle.random_states", V::integer, U::dimensionless, "200", C::nonnegative, {}, false,
       "random product and mixture states per N"},

      {"batch.axis", V::text, U::dimensionless, "state.pair_sum", C::none, {}, false, "config key to scan"},
      {"batch.values", V::text_list, U::dimensionless, "[]", C::none, {}, false, "values of the scanned key"},
  };
  return keys;
}

inline const KeySpec* find_key(const std::string& key) {
  for (const auto& k : schema()) {
    if (k.key == key) return &k;
  }
  return nullptr;
}

struct Entry {
  bool present = false;   // has a value (default or given)
  bool explicit_ = false; // given in the file or on the command line
  int line = 0;
  double number = 0.0;
  std::string text;
  std::vector<double> numbers;
  std::vector<std::string> texts;
};

class RunConfig {
 public:
  RunConfig() {
    for (const auto& spec : schema()) {
      entries_[spec.key] = Entry{};
      if (spec.default_text) assign(spec, split_default(spec), 0, false);
    }
  }

  /// Sets a key from text (scalar) or list items. Lists given as a single
  /// string are split on commas.
  void set(const std::string& key, const std::string& text, int line = 0) {
    const auto* spec = find_key(key);
    if (!spec) throw ConfigError(key, "unknown key", line);
    std::vector<std::string> items;
    if (is_list(spec->type)) {
      items = split_list(text);
    } else {
      items.push_back(text);
    }
    assign(*spec, items, line, true);
  }

  void set_list(const std::string& key, const std::vector<std::string>& items, int line = 0) {
    const auto* spec = find_key(key);
    if (!spec) throw ConfigError(key, "unknown key", line);
    if (!is_list(spec->type)) throw ConfigError(key, "expected a single value, got a list", line);
    assign(*spec, items, line, true);
  }

  bool has(const std::string& key) const { return entry(key).present; }
  bool explicitly_set(const std::string& key) const { return entry(key).explicit_; }
  int line(const std::string& key) const { return entry(key).line; }

  double number(const std::string& key) const { return value(key).number; }
  long long integer(const std::string& key) const { return static_cast<long long>(value(key).number); }
  bool flag(const std::string& key) const { return value(key).number != 0.0; }
  const std::string& text(const std::string& key) const { return value(key).text; }
  const std::vector<double>& numbers(const std::string& key) const { return value(key).numbers; }
  const std::vector<std::string>& texts(const std::string& key) const { return value(key).texts; }

  /// Canonical YAML: every non-execution key with a value, in schema order,
  /// quantities in SI units with the shortest exact decimal.
  std::string serialize() const {
    std::ostringstream os;
    std::string section;
    for (const auto& spec : schema()) {
      if (spec.execution_only) continue;
      const Entry& e = entries_.at(spec.key);
      if (!e.present) continue;
      const auto dot = spec.key.find('.');
      const std::string sec = dot == std::string::npos ? "" : spec.key.substr(0, dot);
      const std::string leaf = dot == std::string::npos ? spec.key : spec.key.substr(dot + 1);
      if (sec != section) {
        if (!sec.empty()) os << sec << ":\n";
        section = sec;
      }
      os << (sec.empty() ? "" : "  ") << leaf << ": " << render(spec, e) << '\n';
    }
    return os.str();
  }

  std::string digest() const;

 private:
  static bool is_list(ValueType t) {
    return t == ValueType::integer_list || t == ValueType::real_list || t == ValueType::text_list;
  }

  static std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static std::vector<std::string> split_list(std::string text) {
    text = trim(text);
    if (text.size() >= 2 && text.front() == '[' && text.back() == ']') text = text.substr(1, text.size() - 2);
    std::vector<std::string> out;
    if (trim(text).empty()) return out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.size() >= 2 && item.front() == '"' && item.back() == '"') item = item.substr(1, item.size() - 2);
      out.push_back(item);
    }
    return out;
  }

  static std::vector<std::string> split_default(const KeySpec& spec) {
    if (is_list(spec.type)) return split_list(*spec.default_text);
    return {*spec.default_text};
  }

  static long long parse_integer(const std::string& key, const std::string& s, int line) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(trim(s), &used);
    } catch (const std::exception&) {
      throw ConfigError(key, "'" + s + "' is not an integer", line);
    }
    if (used != trim(s).size()) throw ConfigError(key, "'" + s + "' is not an integer", line);
    return v;
  }

  static void check_constraint(const KeySpec& spec, double v, int line) {
    if (spec.constraint == Constraint::positive && !(v > 0.0)) {
      throw ConfigError(spec.key, "must be positive, got " + format_double(v), line);
    }
    if (spec.constraint == Constraint::nonnegative && !(v >= 0.0)) {
      throw ConfigError(spec.key, "must be nonnegative, got " + format_double(v), line);
    }
  }

  void assign(const KeySpec& spec, const std::vector<std::string>& items, int line, bool is_explicit) {
    Entry e;
    e.present = true;
    e.explicit_ = is_explicit;
    e.line = line;
    switch (spec.type) {
      case ValueType::integer:
        e.number = static_cast<double>(parse_integer(spec.key, items.at(0), line));
        check_constraint(spec, e.number, line);
        break;
      case ValueType::real:
        e.number = parse_quantity(items.at(0), spec.unit, spec.key, line);
        check_constraint(spec, e.number, line);
        break;
      case ValueType::boolean: {
        const std::string s = trim(items.at(0));
        if (s == "true" || s == "yes" || s == "on" || s == "1") {
          e.number = 1.0;
        } else if (s == "false" || s == "no" || s == "off" || s == "0") {
          e.number = 0.0;
        } else {
          throw ConfigError(spec.key, "'" + s + "' is not a boolean", line);
        }
        break;
      }
      case ValueType::choice: {
        e.text = trim(items.at(0));
        if (std::find(spec.choices.begin(), spec.choices.end(), e.text) == spec.choices.end()) {
          std::string allowed;
          for (const auto& c : spec.choices) allowed += (allowed.empty() ? "" : ", ") + c;
          throw ConfigError(spec.key, "'" + e.text + "' is not one of " + allowed, line);
        }
        break;
      }
      case ValueType::text:
        e.text = items.at(0);
        break;
      case ValueType::integer_list:
        for (const auto& s : items) {
          const double v = static_cast<double>(parse_integer(spec.key, s, line));
          check_constraint(spec, v, line);
          e.numbers.push_back(v);
        }
        break;
      case ValueType::real_list:
        for (const auto& s : items) {
          const double v = parse_quantity(s, spec.unit, spec.key, line);
          check_constraint(spec, v, line);
          e.numbers.push_back(v);
        }
        break;
      case ValueType::text_list:
        e.texts = items;
        break;
    }
    entries_[spec.key] = std::move(e);
  }

  static std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    return out + "\"";
  }

  static std::string render(const KeySpec& spec, const Entry& e) {
    switch (spec.type) {
      case ValueType::integer: return std::to_string(static_cast<long long>(e.number));
      case ValueType::real: return format_quantity(e.number, spec.unit);
      case ValueType::boolean: return e.number != 0.0 ? "true" : "false";
      case ValueType::choice: return e.text;
      case ValueType::text: return quote(e.text);
      case ValueType::integer_list:
      case ValueType::real_list:
      case ValueType::text_list: {
        std::string out = "[";
        const std::size_t n = spec.type == ValueType::text_list ? e.texts.size() : e.numbers.size();
        for (std::size_t i = 0; i < n; ++i) {
          if (i) out += ", ";
          if (spec.type == ValueType::integer_list) {
            out += std::to_string(static_cast<long long>(e.numbers[i]));
          } else if (spec.type == ValueType::real_list) {
            out += quote(format_quantity(e.numbers[i], spec.unit));
          } else {
            out += quote(e.texts[i]);
          }
        }
        return out + "]";
      }
    }
    return "";
  }

  const Entry& entry(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError(key, "unknown key");
    return it->second;
  }

  const Entry& value(const std::string& key) const {
    const Entry& e = entry(key);
    if (!e.present) throw ConfigError(key, "required but not set");
    return e;
  }

  std::map<std::string, Entry> entries_;
};

}  // namespace stokes::cli

#include "stokes/io.hpp"

namespace stokes::cli {

inline std::string RunConfig::digest() const { return hex_digest(serialize()); }

namespace detail {

inline void walk(RunConfig& cfg, const YAML::Node& node, const std::string& prefix) {
  for (const auto& kv : node) {
    const std::string name = kv.first.as<std::string>();
    const std::string key = prefix.empty() ? name : prefix + "." + name;
    const int line = kv.first.Mark().line + 1;
    const YAML::Node& v = kv.second;
    if (v.IsMap()) {
      bool known_section = false;
      for (const auto& spec : schema()) {
        if (spec.key.rfind(key + ".", 0) == 0) known_section = true;
      }
      if (!known_section) throw ConfigError(key, "unknown section", line);
      walk(cfg, v, key);
      continue;
    }
    const auto* spec = find_key(key);
    if (!spec) throw ConfigError(key, "unknown key", line);
    if (v.IsSequence()) {
      std::vector<std::string> items;
      for (const auto& item : v) {
        if (!item.IsScalar()) throw ConfigError(key, "list items must be scalars", item.Mark().line + 1);
        items.push_back(item.Scalar());
      }
      cfg.set_list(key, items, line);
    } else if (v.IsScalar()) {
      cfg.set(key, v.Scalar(), line);
    } else {
      throw ConfigError(key, "missing value", line);
    }
  }
}

}  // namespace detail

/// Parses YAML text over the defaults.
inline RunConfig parse_config(const std::string& yaml_text, RunConfig base = {}) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("", e.msg, e.mark.line + 1);
  }
  if (root.IsNull()) return base;
  if (!root.IsMap()) throw ConfigError("", "top level must be a mapping of sections", 1);
  detail::walk(base, root, "");
  return base;
}

inline RunConfig parse_config_file(const std::string& path) {
  return parse_config(read_text(path));
}

}  // namespace stokes::cli
