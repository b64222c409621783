#pragma once

#include <initializer_list>
#include <string>

#include "json.hpp"
#include "lionlab/harness.hpp"

namespace lionlab::detail {

using nlohmann::json;

[[noreturn]] inline void bad(const std::string& msg) { throw ConfigError(msg); }

inline void check_keys(const json& obj, const char* where,
                       std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) bad(std::string(where) + " must be a JSON object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        ok = true;
        break;
      }
    }
    if (!ok) bad("unknown key '" + it.key() + "' in " + where);
  }
}

inline double get_num(const json& o, const char* k, double def) {
  if (!o.contains(k)) return def;
  if (!o[k].is_number()) bad(std::string(k) + " must be a number");
  return o[k].get<double>();
}

inline std::uint64_t get_u64(const json& o, const char* k, std::uint64_t def) {
  if (!o.contains(k)) return def;
  if (!o[k].is_number_integer() && !o[k].is_number_unsigned())
    bad(std::string(k) + " must be an integer");
  return o[k].get<std::uint64_t>();
}

inline std::size_t get_size(const json& o, const char* k, std::size_t def) {
  return static_cast<std::size_t>(get_u64(o, k, def));
}

inline bool get_bool(const json& o, const char* k, bool def) {
  if (!o.contains(k)) return def;
  if (!o[k].is_boolean()) bad(std::string(k) + " must be a boolean");
  return o[k].get<bool>();
}

inline std::string get_str(const json& o, const char* k) {
  if (!o.contains(k)) bad(std::string("missing required key '") + k + "'");
  if (!o[k].is_string()) bad(std::string(k) + " must be a string");
  return o[k].get<std::string>();
}

// Axis lists for grid/compare: {"optimizer.eta": [0.1, 0.01], ...}
inline std::vector<GridAxis> parse_axes(const json& o, const char* where) {
  std::vector<GridAxis> axes;
  if (!o.is_object()) bad(std::string(where) + " must be an object of value lists");
  for (auto it = o.begin(); it != o.end(); ++it) {
    GridAxis ax;
    ax.path = it.key();
    if (!it.value().is_array() || it.value().empty())
      bad("axis '" + ax.path + "' must be a non-empty array");
    for (const json& v : it.value()) {
      if (v.is_number()) {
        ax.values.emplace_back(v.get<double>());
      } else if (v.is_string()) {
        ax.values.emplace_back(v.get<std::string>());
      } else {
        bad("axis '" + ax.path + "' values must be numbers or strings");
      }
    }
    axes.push_back(std::move(ax));
  }
  return axes;
}

}  // namespace lionlab::detail
