// Copyright 2026 The qubic-forge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qubic/chipcfg.hpp"

namespace qubic::cfg::detail {

using json = nlohmann::json;

inline std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

/// Parses JSON and rejects duplicate object keys, which nlohmann would
/// otherwise resolve silently.
inline json parse_strict(std::string_view text) {
  std::vector<std::set<std::string>> seen;
  std::vector<std::string> path;
  std::string dup;
  auto cb = [&](int /*depth*/, json::parse_event_t ev, json& parsed) {
    switch (ev) {
      case json::parse_event_t::object_start:
        seen.emplace_back();
        break;
      case json::parse_event_t::object_end:
        seen.pop_back();
        break;
      case json::parse_event_t::key: {
        auto key = parsed.get<std::string>();
        if (!seen.back().insert(key).second && dup.empty()) dup = key;
        break;
      }
      default:
        break;
    }
    return true;
  };
  json j;
  try {
    j = json::parse(text.begin(), text.end(), cb);
  } catch (const json::parse_error& e) {
    throw ConfigError(ConfigError::Kind::parse, "", e.what());
  }
  if (!dup.empty())
    throw ConfigError(ConfigError::Kind::schema, dup, "duplicate key '" + dup + "'");
  return j;
}

inline void expect_object(const json& j, const std::string& path) {
  if (!j.is_object())
    throw ConfigError(ConfigError::Kind::schema, path, "expected an object");
}

inline void reject_unknown(const json& j, const std::string& path,
                           std::initializer_list<std::string_view> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (auto a : allowed) ok = ok || it.key() == a;
    if (!ok)
      throw ConfigError(ConfigError::Kind::schema, join_path(path, it.key()),
                        "unknown field '" + it.key() + "'");
  }
}

inline const json& require(const json& j, const std::string& path, const char* key) {
  auto it = j.find(key);
  if (it == j.end())
    throw ConfigError(ConfigError::Kind::schema, join_path(path, key),
                      std::string("missing field '") + key + "'");
  return *it;
}

inline double get_real(const json& j, const std::string& path) {
  if (!j.is_number())
    throw ConfigError(ConfigError::Kind::schema, path, "expected a number");
  double v = j.get<double>();
  if (!std::isfinite(v))
    throw ConfigError(ConfigError::Kind::invariant, path, "value must be finite");
  return v;
}

inline unsigned get_count(const json& j, const std::string& path) {
  if (!j.is_number())
    throw ConfigError(ConfigError::Kind::schema, path, "expected an integer");
  double v = j.get<double>();
  if (!(v >= 0) || v != std::floor(v) || v > std::numeric_limits<unsigned>::max())
    throw ConfigError(ConfigError::Kind::invariant, path,
                      "expected a non-negative integer");
  return static_cast<unsigned>(v);
}

inline void check_version(const json& j) {
  auto it = j.find("version");
  if (it == j.end()) return;
  if (!it->is_number_integer() || it->get<long long>() != kSchemaVersion)
    throw ConfigError(ConfigError::Kind::schema, "version",
                      "unsupported schema version " + it->dump());
}

}  // namespace qubic::cfg::detail
