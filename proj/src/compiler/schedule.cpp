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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "qubic/compiler.hpp"
#include "qubic/envgen.hpp"
#include "timing.hpp"

namespace qubic::compiler {

namespace {

const std::vector<cfg::PulseDef>& lookup_gate(const CircuitOp& op, const cfg::GatePulseSpec& spec) {
  auto it = spec.gates.find(op.gate_key());
  if (it == spec.gates.end())
    throw CompileError("gate '" + op.gate_key() + "' is not defined in the gate spec");
  return it->second;
}

std::int64_t samples_per_cycle(const Timing& timing) {
  return std::max<std::int64_t>(1, std::llround(timing.cycle_period / timing.sample_period));
}

std::string ns(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f ns", t * 1e9);
  return buf;
}

}  // namespace

std::vector<cfg::PulseDef> resolve_pulses(const CircuitOp& op, const cfg::GatePulseSpec& spec,
                                          const cfg::ChipConfig* chip) {
  std::vector<cfg::PulseDef> pulses = lookup_gate(op, spec);
  const GateOverrides& ov = op.overrides;
  if (ov.empty()) return pulses;

  std::set<std::string> used_params;
  for (auto& p : pulses) {
    if (ov.amp) p.amp = *ov.amp;
    if (ov.twidth) p.twidth = *ov.twidth;
    if (ov.pcarrier) p.pcarrier = *ov.pcarrier;
    if (ov.fcarrier) {
      if (const auto* ref = std::get_if<std::string>(&*ov.fcarrier)) {
        if (!chip) throw CompileError("symbolic fcarrier override needs a chip config");
        auto f = chip->resolve(*ref);
        if (!f) throw CompileError("fcarrier override '" + *ref + "' does not resolve");
        p.fcarrier = *f;
        p.fcarrier_ref = *ref;
      } else {
        p.fcarrier = std::get<double>(*ov.fcarrier);
        p.fcarrier_ref.clear();
      }
    }
    const auto required = cfg::required_params(p.env.kind);
    for (const auto& [name, value] : ov.env_params) {
      if (std::find(required.begin(), required.end(), name) == required.end()) continue;
      p.env.params[name] = value;
      used_params.insert(name);
    }
    try {
      cfg::validate(p.env, op.gate_key() + ".env");
    } catch (const cfg::ConfigError& e) {
      throw CompileError(std::string("override makes an invalid envelope: ") + e.what());
    }
  }
  for (const auto& [name, value] : ov.env_params)
    if (!used_params.count(name))
      throw CompileError("env override '" + name + "' matches no pulse of gate '" +
                         op.gate_key() + "'");
  return pulses;
}

double gate_duration(const std::vector<cfg::PulseDef>& pulses, const GateOverrides& ov,
                     const Timing& timing) {
  const std::int64_t spc = samples_per_cycle(timing);
  std::int64_t end = 0;
  for (const auto& p : pulses) {
    const double tw = ov.twidth.value_or(p.twidth);
    const auto n = static_cast<std::int64_t>(env::ceil_sample_count(tw, timing.sample_period));
    end = std::max(end, detail::round_ticks(p.t0, timing.cycle_period) * spc + n);
  }
  const std::int64_t cycles = (end + spc - 1) / spc;
  return static_cast<double>(cycles) * timing.cycle_period;
}

std::vector<ScheduledGate> schedule(const Circuit& circuit, const cfg::GatePulseSpec& spec,
                                    const Timing& timing) {
  std::size_t n_gates = 0, n_explicit = 0;
  for (const auto& op : circuit.ops) {
    if (op.is_virtual_z()) continue;
    ++n_gates;
    if (op.start_time) ++n_explicit;
  }
  if (n_explicit != 0 && n_explicit != n_gates)
    throw CompileError("start_time given on " + std::to_string(n_explicit) + " of " +
                       std::to_string(n_gates) + " gates; give it on all or none");
  const bool explicit_mode = n_gates > 0 && n_explicit == n_gates;

  std::vector<ScheduledGate> out;
  out.reserve(circuit.ops.size());
  std::map<std::string, std::int64_t> ready;  // cycles
  for (std::size_t k = 0; k < circuit.ops.size(); ++k) {
    const CircuitOp& op = circuit.ops[k];
    ScheduledGate g{k, op, 0, 0};
    if (op.is_virtual_z()) {
      g.start = static_cast<double>(ready[op.qubits[0]]) * timing.cycle_period;
      out.push_back(std::move(g));
      continue;
    }
    g.duration = gate_duration(lookup_gate(op, spec), op.overrides, timing);
    const std::int64_t dur = detail::ceil_ticks(g.duration, timing.cycle_period);
    if (explicit_mode) {
      g.start = *op.start_time;
    } else {
      std::int64_t start = 0;
      for (const auto& q : op.qubits) start = std::max(start, ready[q]);
      for (const auto& q : op.qubits) ready[q] = start + dur;
      g.start = static_cast<double>(start) * timing.cycle_period;
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<TimePulse> lower_to_tp(const std::vector<ScheduledGate>& scheduled,
                                   const cfg::GatePulseSpec& spec, const cfg::ChipConfig& chip,
                                   const Timing& timing) {
  std::map<std::string, double> vz;  // accumulated phase per qubit
  std::vector<TimePulse> out;
  for (const auto& g : scheduled) {
    if (g.op.is_virtual_z()) {
      vz[g.op.qubits[0]] += g.op.phase;
      continue;
    }
    for (const auto& p : resolve_pulses(g.op, spec, &chip)) {
      TimePulse tp;
      tp.t = g.start + p.t0;
      tp.dest = p.dest;
      tp.fcarrier = p.fcarrier;
      tp.pcarrier = p.pcarrier;
      if (auto dot = p.dest.rfind(".qdrv");
          dot != std::string::npos && dot + 5 == p.dest.size()) {
        auto it = vz.find(p.dest.substr(0, dot));
        if (it != vz.end()) tp.pcarrier += it->second;
      }
      tp.amp = p.amp;
      tp.env = p.env;
      tp.twidth = p.twidth;
      tp.n_samples = env::ceil_sample_count(p.twidth, timing.sample_period);
      tp.condition = g.op.condition;
      tp.gate = g.op.gate_key();
      out.push_back(std::move(tp));
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const TimePulse& a, const TimePulse& b) { return a.t < b.t; });

  std::map<std::string, const TimePulse*> last;
  const double slack = 1e-3 * timing.sample_period;
  for (const auto& tp : out) {
    auto& prev = last[tp.dest];
    if (prev) {
      const double prev_end = prev->t + prev->n_samples * timing.sample_period;
      if (tp.t < prev_end - slack)
        throw CompileError("pulses overlap on channel " + tp.dest + ": " + prev->gate + " at [" +
                           ns(prev->t) + ", " + ns(prev_end) + ") and " + tp.gate + " at " +
                           ns(tp.t));
    }
    prev = &tp;
  }
  return out;
}

std::string format_tp(std::span<const TimePulse> pulses) {
  std::string s = "# t_ns dest fcarrier_hz pcarrier_rad amp samples envelope gate cond\n";
  char buf[160];
  for (const auto& p : pulses) {
    std::string env(cfg::to_string(p.env.kind));
    if (!p.env.params.empty()) {
      env += "(";
      bool first = true;
      for (const auto& [k, v] : p.env.params) {
        std::snprintf(buf, sizeof buf, "%s%s=%g", first ? "" : ",", k.c_str(), v);
        env += buf;
        first = false;
      }
      env += ")";
    }
    std::snprintf(buf, sizeof buf, "%.3f %s %.6f %.9f %.6g %zu ", p.t * 1e9, p.dest.c_str(),
                  p.fcarrier, p.pcarrier, p.amp, p.n_samples);
    s += buf;
    s += env + " " + p.gate + (p.condition ? " 1\n" : " 0\n");
  }
  return s;
}

}  // namespace qubic::compiler
