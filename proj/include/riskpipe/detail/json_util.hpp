#pragma once

#include <cmath>
#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "riskpipe/error.hpp"

namespace riskpipe::detail {

template <class Json>
const Json& require_field(const Json& obj, std::string_view key,
                          std::string_view where) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw FormatError(std::string(where) + ": missing field '" +
                      std::string(key) + "'");
  return *it;
}

template <class Json>
double require_double(const Json& obj, std::string_view key,
                      std::string_view where) {
  const Json& v = require_field(obj, key, where);
  if (!v.is_number())
    throw FormatError(std::string(where) + ": field '" + std::string(key) +
                      "' must be a number");
  double d = v.template get<double>();
  if (!std::isfinite(d))
    throw FormatError(std::string(where) + ": field '" + std::string(key) +
                      "' must be finite");
  return d;
}

template <class Json>
std::string require_string(const Json& obj, std::string_view key,
                           std::string_view where) {
  const Json& v = require_field(obj, key, where);
  if (!v.is_string())
    throw FormatError(std::string(where) + ": field '" + std::string(key) +
                      "' must be a string");
  return v.template get<std::string>();
}

template <class Json>
void reject_unknown_fields(const Json& obj,
                           std::initializer_list<std::string_view> allowed,
                           std::string_view where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (std::string_view a : allowed) {
      if (it.key() == a) {
        known = true;
        break;
      }
    }
    if (!known)
      throw FormatError(std::string(where) + ": unknown field '" + it.key() +
                        "'");
  }
}

}  // namespace riskpipe::detail
