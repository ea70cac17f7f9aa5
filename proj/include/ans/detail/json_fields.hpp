#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ans/error.hpp"

namespace ans::detail {

using nlohmann::json;

inline std::string join_path(std::string_view base, std::string_view key) {
  if (base.empty()) return std::string{key};
  return std::string{base} + "." + std::string{key};
}

inline std::string index_path(std::string_view base, std::size_t i) {
  return std::string{base} + "[" + std::to_string(i) + "]";
}

inline const json& require(const json& obj, std::string_view key, std::string_view base) {
  if (!obj.is_object()) throw SchemaError(std::string{base}, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(join_path(base, key), "missing required field");
  return *it;
}

inline double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw SchemaError(path, "expected a number");
  double x = v.get<double>();
  if (!std::isfinite(x)) throw SchemaError(path, "must be finite");
  return x;
}

inline double require_number(const json& obj, std::string_view key, std::string_view base) {
  return as_number(require(obj, key, base), join_path(base, key));
}

inline double require_non_negative(const json& obj, std::string_view key, std::string_view base) {
  double x = require_number(obj, key, base);
  if (x < 0.0) throw SchemaError(join_path(base, key), "must be non-negative");
  return x;
}

inline long long as_integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw SchemaError(path, "expected an integer");
  return v.get<long long>();
}

inline std::string require_string(const json& obj, std::string_view key, std::string_view base) {
  const json& v = require(obj, key, base);
  if (!v.is_string()) throw SchemaError(join_path(base, key), "expected a string");
  return v.get<std::string>();
}

inline std::vector<double> number_array(const json& v, const std::string& path,
                                        std::size_t expected_len) {
  if (!v.is_array()) throw SchemaError(path, "expected an array");
  if (expected_len != 0 && v.size() != expected_len) {
    throw SchemaError(path, "expected " + std::to_string(expected_len) + " numbers, got " +
                                std::to_string(v.size()));
  }
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], index_path(path, i)));
  return out;
}

}  // namespace ans::detail
