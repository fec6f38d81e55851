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

#include "qubic/chipcfg.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json_util.hpp"

namespace qubic::cfg {

using detail::json;
using detail::join_path;

ConfigError::ConfigError(Kind kind, std::string path, const std::string& what)
    : std::runtime_error(path.empty() ? what : path + ": " + what),
      kind_(kind),
      path_(std::move(path)) {}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(ConfigError::Kind::parse, path, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Chip

std::optional<double> ChipConfig::resolve(std::string_view ref) const {
  auto dot = ref.rfind('.');
  if (dot == std::string_view::npos) return std::nullopt;
  auto it = qubits.find(std::string(ref.substr(0, dot)));
  if (it == qubits.end()) return std::nullopt;
  auto field = ref.substr(dot + 1);
  if (field == "freq") return it->second.drive_freq;
  if (field == "readfreq") return it->second.readout_freq;
  return std::nullopt;
}

ChipConfig load_chip_config(std::string_view text) {
  json j = detail::parse_strict(text);
  detail::expect_object(j, "");
  detail::reject_unknown(j, "", {"version", "qubits", "metadata"});
  detail::check_version(j);

  ChipConfig chip;
  const json& qs = detail::require(j, "", "qubits");
  detail::expect_object(qs, "qubits");
  for (auto it = qs.begin(); it != qs.end(); ++it) {
    const std::string base = "qubits." + it.key();
    if (it.key().empty() || it.key().find('.') != std::string::npos)
      throw ConfigError(ConfigError::Kind::invariant, base,
                        "qubit names must be non-empty and contain no '.'");
    detail::expect_object(*it, base);
    detail::reject_unknown(*it, base, {"drive_freq", "readout_freq"});
    QubitFreqs f;
    f.drive_freq = detail::get_real(detail::require(*it, base, "drive_freq"),
                                    base + ".drive_freq");
    f.readout_freq = detail::get_real(detail::require(*it, base, "readout_freq"),
                                      base + ".readout_freq");
    if (!(f.drive_freq > 0))
      throw ConfigError(ConfigError::Kind::invariant, it.key() + ".drive_freq",
                        "frequency must be strictly positive");
    if (!(f.readout_freq > 0))
      throw ConfigError(ConfigError::Kind::invariant, it.key() + ".readout_freq",
                        "frequency must be strictly positive");
    chip.qubits.emplace(it.key(), f);
  }
  if (auto m = j.find("metadata"); m != j.end()) {
    detail::expect_object(*m, "metadata");
    for (auto it = m->begin(); it != m->end(); ++it) {
      if (!it->is_string())
        throw ConfigError(ConfigError::Kind::schema, "metadata." + it.key(),
                          "metadata values must be strings");
      chip.metadata.emplace(it.key(), it->get<std::string>());
    }
  }
  return chip;
}

ChipConfig load_chip_config_file(const std::string& path) {
  return load_chip_config(read_text_file(path));
}

std::string to_json(const ChipConfig& chip) {
  json j;
  j["version"] = kSchemaVersion;
  j["qubits"] = json::object();
  for (const auto& [name, f] : chip.qubits)
    j["qubits"][name] = {{"drive_freq", f.drive_freq}, {"readout_freq", f.readout_freq}};
  if (!chip.metadata.empty()) j["metadata"] = chip.metadata;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Envelopes

std::string_view to_string(EnvelopeKind kind) {
  switch (kind) {
    case EnvelopeKind::drag: return "DRAG";
    case EnvelopeKind::gaussian: return "gaussian";
    case EnvelopeKind::square: return "square";
    case EnvelopeKind::cos_edge_square: return "cos_edge_square";
    case EnvelopeKind::custom_samples: return "custom_samples";
  }
  return "?";
}

std::optional<EnvelopeKind> envelope_kind_from_string(std::string_view name) {
  for (auto k : {EnvelopeKind::drag, EnvelopeKind::gaussian, EnvelopeKind::square,
                 EnvelopeKind::cos_edge_square, EnvelopeKind::custom_samples})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

std::vector<std::string> required_params(EnvelopeKind kind) {
  switch (kind) {
    case EnvelopeKind::drag: return {"alpha", "sigma_fraction"};
    case EnvelopeKind::gaussian: return {"sigma_fraction"};
    case EnvelopeKind::cos_edge_square: return {"edge_fraction"};
    case EnvelopeKind::square:
    case EnvelopeKind::custom_samples: return {};
  }
  return {};
}

void validate(const EnvelopeSpec& env, const std::string& where) {
  const auto req = required_params(env.kind);
  for (const auto& name : req) {
    auto it = env.params.find(name);
    if (it == env.params.end())
      throw ConfigError(ConfigError::Kind::schema, join_path(where, "params." + name),
                        "missing envelope parameter '" + name + "'");
    if (!std::isfinite(it->second))
      throw ConfigError(ConfigError::Kind::invariant,
                        join_path(where, "params." + name), "parameter must be finite");
  }
  for (const auto& [name, value] : env.params) {
    bool known = false;
    for (const auto& r : req) known = known || r == name;
    if (!known)
      throw ConfigError(ConfigError::Kind::schema, join_path(where, "params." + name),
                        "parameter '" + name + "' does not apply to " +
                            std::string(to_string(env.kind)));
  }
  if (auto it = env.params.find("sigma_fraction");
      it != env.params.end() && !(it->second > 0))
    throw ConfigError(ConfigError::Kind::invariant, join_path(where, "params.sigma_fraction"),
                      "sigma_fraction must be positive");
  if (auto it = env.params.find("edge_fraction");
      it != env.params.end() && !(it->second > 0 && it->second <= 0.5))
    throw ConfigError(ConfigError::Kind::invariant, join_path(where, "params.edge_fraction"),
                      "edge_fraction must lie in (0, 0.5]");
  if (env.kind == EnvelopeKind::custom_samples) {
    if (env.samples.empty())
      throw ConfigError(ConfigError::Kind::schema, join_path(where, "samples"),
                        "custom_samples needs at least one sample");
    for (std::size_t i = 0; i < env.samples.size(); ++i) {
      const auto& s = env.samples[i];
      if (!std::isfinite(s.real()) || !std::isfinite(s.imag()) || std::abs(s) > 1.0 + 1e-12)
        throw ConfigError(ConfigError::Kind::invariant,
                          join_path(where, "samples[" + std::to_string(i) + "]"),
                          "sample magnitude exceeds 1");
    }
  } else if (!env.samples.empty()) {
    throw ConfigError(ConfigError::Kind::schema, join_path(where, "samples"),
                      "samples only apply to custom_samples");
  }
}

namespace {

EnvelopeSpec parse_envelope(const json& j, const std::string& path) {
  detail::expect_object(j, path);
  detail::reject_unknown(j, path, {"kind", "params", "samples"});
  const json& kind = detail::require(j, path, "kind");
  if (!kind.is_string())
    throw ConfigError(ConfigError::Kind::schema, path + ".kind", "expected a string");
  auto k = envelope_kind_from_string(kind.get<std::string>());
  if (!k)
    throw ConfigError(ConfigError::Kind::schema, path + ".kind",
                      "unknown envelope kind '" + kind.get<std::string>() + "'");
  EnvelopeSpec env;
  env.kind = *k;
  if (auto p = j.find("params"); p != j.end()) {
    detail::expect_object(*p, path + ".params");
    for (auto it = p->begin(); it != p->end(); ++it)
      env.params[it.key()] = detail::get_real(*it, path + ".params." + it.key());
  }
  if (auto s = j.find("samples"); s != j.end()) {
    if (!s->is_array())
      throw ConfigError(ConfigError::Kind::schema, path + ".samples", "expected an array");
    for (std::size_t i = 0; i < s->size(); ++i) {
      const json& pair = (*s)[i];
      const std::string sp = path + ".samples[" + std::to_string(i) + "]";
      if (!pair.is_array() || pair.size() != 2)
        throw ConfigError(ConfigError::Kind::schema, sp, "expected [re, im]");
      env.samples.emplace_back(detail::get_real(pair[0], sp), detail::get_real(pair[1], sp));
    }
  }
  validate(env, path);
  return env;
}

json envelope_json(const EnvelopeSpec& env) {
  json j;
  j["kind"] = std::string(to_string(env.kind));
  if (!env.params.empty()) j["params"] = env.params;
  if (!env.samples.empty()) {
    j["samples"] = json::array();
    for (const auto& s : env.samples) j["samples"].push_back({s.real(), s.imag()});
  }
  return j;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  std::string tmp(s);
  char* end = nullptr;
  double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

std::optional<double> parse_phase_expr(std::string_view text) {
  std::string_view s = trim(text);
  if (auto v = parse_number(s)) return v;
  double sign = 1;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    if (s.front() == '-') sign = -1;
    s = trim(s.substr(1));
  }
  double mul = 1;
  if (auto star = s.find('*'); star != std::string_view::npos) {
    auto m = parse_number(s.substr(0, star));
    if (!m) return std::nullopt;
    mul = *m;
    s = trim(s.substr(star + 1));
  }
  double div = 1;
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    auto d = parse_number(s.substr(slash + 1));
    if (!d || *d == 0) return std::nullopt;
    div = *d;
    s = trim(s.substr(0, slash));
  }
  if (s != "pi" && s != "np.pi" && s != "numpy.pi" && s != "math.pi") return std::nullopt;
  return sign * mul * std::numbers::pi / div;
}

GatePulseSpec load_gate_spec(std::string_view text, const ChipConfig& chip) {
  json j = detail::parse_strict(text);
  detail::expect_object(j, "");
  detail::reject_unknown(j, "", {"version", "gates"});
  detail::check_version(j);
  const json& gates = detail::require(j, "", "gates");
  detail::expect_object(gates, "gates");

  GatePulseSpec spec;
  for (auto g = gates.begin(); g != gates.end(); ++g) {
    const std::string gpath = "gates." + g.key();
    if (!g->is_array())
      throw ConfigError(ConfigError::Kind::schema, gpath, "expected a list of pulses");
    auto& pulses = spec.gates[g.key()];
    for (std::size_t i = 0; i < g->size(); ++i) {
      const json& p = (*g)[i];
      const std::string path = gpath + "[" + std::to_string(i) + "]";
      detail::expect_object(p, path);
      detail::reject_unknown(p, path,
                             {"dest", "t0", "twidth", "fcarrier", "pcarrier", "amp", "env"});
      PulseDef pd;
      const json& dest = detail::require(p, path, "dest");
      if (!dest.is_string())
        throw ConfigError(ConfigError::Kind::schema, path + ".dest", "expected a string");
      pd.dest = dest.get<std::string>();
      if (p.contains("t0")) pd.t0 = detail::get_real(p["t0"], path + ".t0");
      pd.twidth = detail::get_real(detail::require(p, path, "twidth"), path + ".twidth");
      if (!(pd.t0 >= 0))
        throw ConfigError(ConfigError::Kind::invariant, path + ".t0", "t0 must be >= 0");
      if (!(pd.twidth > 0))
        throw ConfigError(ConfigError::Kind::invariant, path + ".twidth", "twidth must be > 0");

      const json& fc = detail::require(p, path, "fcarrier");
      if (fc.is_string()) {
        pd.fcarrier_ref = fc.get<std::string>();
        auto f = chip.resolve(pd.fcarrier_ref);
        if (!f)
          throw ConfigError(ConfigError::Kind::unresolved, path + ".fcarrier",
                            "unresolved carrier reference '" + pd.fcarrier_ref + "'");
        pd.fcarrier = *f;
      } else {
        pd.fcarrier = detail::get_real(fc, path + ".fcarrier");
        if (!(pd.fcarrier >= 0))
          throw ConfigError(ConfigError::Kind::invariant, path + ".fcarrier",
                            "carrier frequency must be >= 0");
      }

      if (auto pc = p.find("pcarrier"); pc != p.end()) {
        if (pc->is_string()) {
          auto v = parse_phase_expr(pc->get<std::string>());
          if (!v)
            throw ConfigError(ConfigError::Kind::unresolved, path + ".pcarrier",
                              "cannot evaluate phase '" + pc->get<std::string>() + "'");
          pd.pcarrier = *v;
        } else {
          pd.pcarrier = detail::get_real(*pc, path + ".pcarrier");
        }
      }

      pd.amp = detail::get_real(detail::require(p, path, "amp"), path + ".amp");
      if (!(pd.amp >= 0 && pd.amp <= 1))
        throw ConfigError(ConfigError::Kind::invariant, path + ".amp",
                          "amp must lie in [0, 1]");
      pd.env = parse_envelope(detail::require(p, path, "env"), path + ".env");
      pulses.push_back(std::move(pd));
    }
  }
  return spec;
}

GatePulseSpec load_gate_spec_file(const std::string& path, const ChipConfig& chip) {
  return load_gate_spec(read_text_file(path), chip);
}

std::string to_json(const GatePulseSpec& spec) {
  json j;
  j["version"] = kSchemaVersion;
  j["gates"] = json::object();
  for (const auto& [name, pulses] : spec.gates) {
    json arr = json::array();
    for (const auto& p : pulses) {
      json o;
      o["dest"] = p.dest;
      o["t0"] = p.t0;
      o["twidth"] = p.twidth;
      if (p.fcarrier_ref.empty())
        o["fcarrier"] = p.fcarrier;
      else
        o["fcarrier"] = p.fcarrier_ref;
      o["pcarrier"] = p.pcarrier;
      o["amp"] = p.amp;
      o["env"] = envelope_json(p.env);
      arr.push_back(std::move(o));
    }
    j["gates"][name] = std::move(arr);
  }
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Hardware

unsigned HardwareConfig::samples_per_cycle() const {
  return static_cast<unsigned>(std::lround(dac_sample_rate / dsp_clock));
}

unsigned HardwareConfig::global_element(const ChannelInfo& ch) const {
  return ch.direction == Direction::up ? ch.element : n_processing_elements_up + ch.element;
}

namespace {

void validate_hardware(const HardwareConfig& hw) {
  using K = ConfigError::Kind;
  if (!(hw.dac_sample_rate > 0))
    throw ConfigError(K::invariant, "dac_sample_rate", "must be positive");
  if (!(hw.dsp_clock > 0)) throw ConfigError(K::invariant, "dsp_clock", "must be positive");
  const double ratio = hw.dac_sample_rate / hw.dsp_clock;
  if (ratio < 1 || std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
    throw ConfigError(K::invariant, "dsp_clock",
                      "dac_sample_rate is not an integer multiple of dsp_clock");
  if (hw.n_dac_pairs < 1 || hw.n_dac_pairs > kMaxDacPairs)
    throw ConfigError(K::invariant, "n_dac_pairs", "must lie in [1, 4]");
  if (hw.n_processing_elements_up < 1)
    throw ConfigError(K::invariant, "n_processing_elements_up", "must be at least 1");
  if (hw.total_elements() > 256)
    throw ConfigError(K::invariant, "n_processing_elements_down",
                      "up + down elements exceed the 8-bit element field");
  if (hw.envelope_buffer_depth < 1 || hw.envelope_buffer_depth > kMaxEnvelopeDepth)
    throw ConfigError(K::invariant, "envelope_buffer_depth",
                      "must lie in [1, 4096] (12-bit start address)");
  if (hw.command_buffer_depth < 1)
    throw ConfigError(K::invariant, "command_buffer_depth", "must be at least 1");
  if (hw.acc_buffer_depth < 1)
    throw ConfigError(K::invariant, "acc_buffer_depth", "must be at least 1");
  if (hw.acq_buffer_depth < 1)
    throw ConfigError(K::invariant, "acq_buffer_depth", "must be at least 1");
  for (const auto& [name, ch] : hw.channel_map) {
    const std::string base = "channel_map." + name;
    const unsigned bank = ch.direction == Direction::up ? hw.n_processing_elements_up
                                                        : hw.n_processing_elements_down;
    if (ch.element >= bank)
      throw ConfigError(K::invariant, base + ".element", "element index out of range");
    if (ch.destination >= hw.n_dac_pairs)
      throw ConfigError(K::invariant, base + ".destination", "destination index out of range");
    if (!std::isfinite(ch.lo_freq) || ch.lo_freq < 0)
      throw ConfigError(K::invariant, base + ".lo_freq", "lo_freq must be finite and >= 0");
  }
  for (std::size_t i = 0; i < hw.discriminators.size(); ++i) {
    if (!std::isfinite(hw.discriminators[i].rotation) ||
        !std::isfinite(hw.discriminators[i].threshold))
      throw ConfigError(K::invariant, "discriminators[" + std::to_string(i) + "]",
                        "values must be finite");
  }
}

}  // namespace

HardwareConfig load_hardware_config(std::string_view text) {
  json j = detail::parse_strict(text);
  detail::expect_object(j, "");
  detail::reject_unknown(j, "", {"version", "dac_sample_rate", "dsp_clock",
                                 "n_processing_elements_up", "n_processing_elements_down",
                                 "n_dac_pairs", "channel_map", "envelope_buffer_depth",
                                 "command_buffer_depth", "acc_buffer_depth",
                                 "acq_buffer_depth", "discriminators"});
  detail::check_version(j);
  HardwareConfig hw;
  auto real = [&](const char* key, double& out) {
    if (j.contains(key)) out = detail::get_real(j[key], key);
  };
  auto count = [&](const char* key, unsigned& out) {
    if (j.contains(key)) out = detail::get_count(j[key], key);
  };
  real("dac_sample_rate", hw.dac_sample_rate);
  real("dsp_clock", hw.dsp_clock);
  count("n_processing_elements_up", hw.n_processing_elements_up);
  count("n_processing_elements_down", hw.n_processing_elements_down);
  count("n_dac_pairs", hw.n_dac_pairs);
  count("envelope_buffer_depth", hw.envelope_buffer_depth);
  count("command_buffer_depth", hw.command_buffer_depth);
  count("acc_buffer_depth", hw.acc_buffer_depth);
  count("acq_buffer_depth", hw.acq_buffer_depth);

  if (auto cm = j.find("channel_map"); cm != j.end()) {
    detail::expect_object(*cm, "channel_map");
    for (auto it = cm->begin(); it != cm->end(); ++it) {
      const std::string base = "channel_map." + it.key();
      detail::expect_object(*it, base);
      detail::reject_unknown(*it, base, {"element", "destination", "direction", "lo_freq"});
      ChannelInfo ch;
      ch.element = detail::get_count(detail::require(*it, base, "element"), base + ".element");
      ch.destination =
          detail::get_count(detail::require(*it, base, "destination"), base + ".destination");
      const json& dir = detail::require(*it, base, "direction");
      if (dir == "up")
        ch.direction = Direction::up;
      else if (dir == "down")
        ch.direction = Direction::down;
      else
        throw ConfigError(ConfigError::Kind::schema, base + ".direction",
                          "direction must be \"up\" or \"down\"");
      if (it->contains("lo_freq"))
        ch.lo_freq = detail::get_real((*it)["lo_freq"], base + ".lo_freq");
      hw.channel_map.emplace(it.key(), ch);
    }
  }
  if (auto d = j.find("discriminators"); d != j.end()) {
    if (!d->is_array() || d->size() > kMaxDacPairs)
      throw ConfigError(ConfigError::Kind::schema, "discriminators",
                        "expected an array of at most 4 entries");
    for (std::size_t i = 0; i < d->size(); ++i) {
      const std::string base = "discriminators[" + std::to_string(i) + "]";
      const json& e = (*d)[i];
      detail::expect_object(e, base);
      detail::reject_unknown(e, base, {"rotation", "threshold"});
      if (e.contains("rotation"))
        hw.discriminators[i].rotation = detail::get_real(e["rotation"], base + ".rotation");
      if (e.contains("threshold"))
        hw.discriminators[i].threshold = detail::get_real(e["threshold"], base + ".threshold");
    }
  }
  validate_hardware(hw);
  return hw;
}

HardwareConfig load_hardware_config_file(const std::string& path) {
  return load_hardware_config(read_text_file(path));
}

std::string to_json(const HardwareConfig& hw) {
  json j;
  j["version"] = kSchemaVersion;
  j["dac_sample_rate"] = hw.dac_sample_rate;
  j["dsp_clock"] = hw.dsp_clock;
  j["n_processing_elements_up"] = hw.n_processing_elements_up;
  j["n_processing_elements_down"] = hw.n_processing_elements_down;
  j["n_dac_pairs"] = hw.n_dac_pairs;
  j["envelope_buffer_depth"] = hw.envelope_buffer_depth;
  j["command_buffer_depth"] = hw.command_buffer_depth;
  j["acc_buffer_depth"] = hw.acc_buffer_depth;
  j["acq_buffer_depth"] = hw.acq_buffer_depth;
  j["channel_map"] = json::object();
  for (const auto& [name, ch] : hw.channel_map) {
    j["channel_map"][name] = {{"element", ch.element},
                              {"destination", ch.destination},
                              {"direction", ch.direction == Direction::up ? "up" : "down"},
                              {"lo_freq", ch.lo_freq}};
  }
  j["discriminators"] = json::array();
  for (const auto& d : hw.discriminators)
    j["discriminators"].push_back({{"rotation", d.rotation}, {"threshold", d.threshold}});
  return j.dump(2);
}

}  // namespace qubic::cfg
