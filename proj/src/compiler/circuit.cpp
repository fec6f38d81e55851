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

#include <json.hpp>

#include "../chipcfg/json_util.hpp"
#include "qubic/compiler.hpp"

namespace qubic::compiler {

using cfg::ConfigError;
using nlohmann::json;
namespace d = cfg::detail;

std::string_view to_string(Mode m) { return m == Mode::optm ? "OPTM" : "RUNC"; }

std::optional<Mode> mode_from_string(std::string_view s) {
  if (s == "OPTM" || s == "optm") return Mode::optm;
  if (s == "RUNC" || s == "runc") return Mode::runc;
  return std::nullopt;
}

std::string CircuitOp::gate_key() const {
  std::string key;
  for (const auto& q : qubits) key += q;
  return key + "." + name;
}

namespace {

double get_phase(const json& j, const std::string& path) {
  if (j.is_string()) {
    auto v = cfg::parse_phase_expr(j.get<std::string>());
    if (!v) throw ConfigError(ConfigError::Kind::schema, path, "cannot parse phase expression");
    return *v;
  }
  return d::get_real(j, path);
}

GateOverrides parse_overrides(const json& j, const std::string& path) {
  d::expect_object(j, path);
  d::reject_unknown(j, path, {"amp", "fcarrier", "pcarrier", "twidth", "env"});
  GateOverrides ov;
  if (auto it = j.find("amp"); it != j.end()) {
    ov.amp = d::get_real(*it, d::join_path(path, "amp"));
    if (*ov.amp < 0 || *ov.amp > 1)
      throw ConfigError(ConfigError::Kind::invariant, d::join_path(path, "amp"),
                        "amp must lie in [0, 1]");
  }
  if (auto it = j.find("fcarrier"); it != j.end()) {
    if (it->is_string())
      ov.fcarrier = it->get<std::string>();
    else
      ov.fcarrier = d::get_real(*it, d::join_path(path, "fcarrier"));
  }
  if (auto it = j.find("pcarrier"); it != j.end())
    ov.pcarrier = get_phase(*it, d::join_path(path, "pcarrier"));
  if (auto it = j.find("twidth"); it != j.end()) {
    ov.twidth = d::get_real(*it, d::join_path(path, "twidth"));
    if (!(*ov.twidth > 0))
      throw ConfigError(ConfigError::Kind::invariant, d::join_path(path, "twidth"),
                        "twidth must be positive");
  }
  if (auto it = j.find("env"); it != j.end()) {
    const std::string p = d::join_path(path, "env");
    d::expect_object(*it, p);
    for (auto e = it->begin(); e != it->end(); ++e)
      ov.env_params[e.key()] = d::get_real(e.value(), d::join_path(p, e.key()));
  }
  return ov;
}

}  // namespace

Circuit load_circuit(std::string_view text) {
  const json root = d::parse_strict(text);
  d::expect_object(root, "");
  d::reject_unknown(root, "", {"version", "ops", "repeat_period"});
  d::check_version(root);
  Circuit c;
  if (auto it = root.find("repeat_period"); it != root.end()) {
    c.repeat_period = d::get_real(*it, "repeat_period");
    if (c.repeat_period < 0)
      throw ConfigError(ConfigError::Kind::invariant, "repeat_period",
                        "repeat_period must be non-negative");
  }
  const json& ops = d::require(root, "", "ops");
  if (!ops.is_array()) throw ConfigError(ConfigError::Kind::schema, "ops", "expected an array");
  for (std::size_t k = 0; k < ops.size(); ++k) {
    const std::string path = "ops." + std::to_string(k);
    const json& j = ops[k];
    d::expect_object(j, path);
    CircuitOp op;
    const json& name = d::require(j, path, "name");
    if (!name.is_string() || name.get<std::string>().empty())
      throw ConfigError(ConfigError::Kind::schema, d::join_path(path, "name"),
                        "expected a non-empty string");
    op.name = name.get<std::string>();
    const json& qs = d::require(j, path, "qubits");
    if (!qs.is_array() || qs.empty())
      throw ConfigError(ConfigError::Kind::schema, d::join_path(path, "qubits"),
                        "expected a non-empty array of qubit names");
    for (const auto& q : qs) {
      if (!q.is_string())
        throw ConfigError(ConfigError::Kind::schema, d::join_path(path, "qubits"),
                          "qubit names must be strings");
      op.qubits.push_back(q.get<std::string>());
    }
    if (auto it = j.find("start_time"); it != j.end()) {
      op.start_time = d::get_real(*it, d::join_path(path, "start_time"));
      if (*op.start_time < 0)
        throw ConfigError(ConfigError::Kind::invariant, d::join_path(path, "start_time"),
                          "start_time must be non-negative");
    }
    if (op.is_virtual_z()) {
      d::reject_unknown(j, path, {"name", "qubits", "phase", "start_time"});
      if (op.qubits.size() != 1)
        throw ConfigError(ConfigError::Kind::schema, d::join_path(path, "qubits"),
                          "virtual_z acts on exactly one qubit");
      op.phase = get_phase(d::require(j, path, "phase"), d::join_path(path, "phase"));
    } else {
      d::reject_unknown(j, path, {"name", "qubits", "start_time", "overrides", "condition"});
      if (auto it = j.find("overrides"); it != j.end())
        op.overrides = parse_overrides(*it, d::join_path(path, "overrides"));
      if (auto it = j.find("condition"); it != j.end()) {
        if (!it->is_boolean())
          throw ConfigError(ConfigError::Kind::schema, d::join_path(path, "condition"),
                            "expected a boolean");
        op.condition = it->get<bool>();
      }
    }
    c.ops.push_back(std::move(op));
  }
  return c;
}

Circuit load_circuit_file(const std::string& path) {
  return load_circuit(cfg::read_text_file(path));
}

std::string to_json(const Circuit& c) {
  json root = json::object();
  root["version"] = cfg::kSchemaVersion;
  if (c.repeat_period > 0) root["repeat_period"] = c.repeat_period;
  json ops = json::array();
  for (const auto& op : c.ops) {
    json j = json::object();
    j["name"] = op.name;
    j["qubits"] = op.qubits;
    if (op.start_time) j["start_time"] = *op.start_time;
    if (op.is_virtual_z()) {
      j["phase"] = op.phase;
    } else {
      if (op.condition) j["condition"] = true;
      const auto& ov = op.overrides;
      if (!ov.empty()) {
        json o = json::object();
        if (ov.amp) o["amp"] = *ov.amp;
        if (ov.fcarrier) {
          if (const auto* s = std::get_if<std::string>(&*ov.fcarrier))
            o["fcarrier"] = *s;
          else
            o["fcarrier"] = std::get<double>(*ov.fcarrier);
        }
        if (ov.pcarrier) o["pcarrier"] = *ov.pcarrier;
        if (ov.twidth) o["twidth"] = *ov.twidth;
        if (!ov.env_params.empty()) o["env"] = ov.env_params;
        j["overrides"] = o;
      }
    }
    ops.push_back(j);
  }
  root["ops"] = ops;
  return root.dump(2);
}

}  // namespace qubic::compiler
