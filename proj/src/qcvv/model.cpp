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

#include <boost/math/distributions/chi_squared.hpp>
#include <fstream>
#include <numbers>
#include <sstream>

#include "../chipcfg/json_util.hpp"
#include "qubic/qcvv.hpp"

namespace qubic::qcvv {

using cfg::ConfigError;
using namespace cfg::detail;

namespace {

constexpr double kPi = std::numbers::pi;

cplx get_complex(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(ConfigError::Kind::schema, path, "expected [re, im]");
  return {get_real(j[0], path + "[0]"), get_real(j[1], path + "[1]")};
}

double get_time(const json& q, const std::string& path, const char* key) {
  auto it = q.find(key);
  if (it == q.end() || it->is_null()) return std::numeric_limits<double>::infinity();
  return get_real(*it, join_path(path, key));
}

}  // namespace

void MockModel::validate() const {
  auto prob = [](double p, const std::string& path) {
    if (!(p >= 0 && p <= 1)) throw ConfigError(ConfigError::Kind::invariant, path, "probability outside [0, 1]");
  };
  for (std::size_t k = 0; k < qubits.size(); ++k) {
    const auto& q = qubits[k];
    const std::string base = "qubits[" + std::to_string(k) + "]";
    if (q.name.empty()) throw ConfigError(ConfigError::Kind::invariant, base + ".name", "empty name");
    for (std::size_t j = 0; j < k; ++j)
      if (qubits[j].name == q.name)
        throw ConfigError(ConfigError::Kind::invariant, base + ".name", "duplicate qubit " + q.name);
    prob(q.eps01, base + ".eps01");
    prob(q.eps10, base + ".eps10");
    prob(q.p_dep, base + ".p_dep");
    if (!(q.T1 > 0)) throw ConfigError(ConfigError::Kind::invariant, base + ".T1", "T1 must be positive");
    if (!(q.T2 > 0)) throw ConfigError(ConfigError::Kind::invariant, base + ".T2", "T2 must be positive");
    if (std::isfinite(q.T1) && q.T2 > 2 * q.T1)
      throw ConfigError(ConfigError::Kind::invariant, base + ".T2", "T2 exceeds 2*T1");
    if (!(q.sigma_r > 0)) throw ConfigError(ConfigError::Kind::invariant, base + ".sigma_r", "sigma_r must be positive");
    if (!(q.rabi_rate_per_unit_amp >= 0))
      throw ConfigError(ConfigError::Kind::invariant, base + ".rabi_rate_per_unit_amp", "must be non-negative");
    if (!std::isfinite(q.delta)) throw ConfigError(ConfigError::Kind::invariant, base + ".delta", "must be finite");
  }
  prob(two_qubit_depolarizing, "two_qubit_depolarizing");
}

int MockModel::index_of(std::string_view name) const {
  for (std::size_t k = 0; k < qubits.size(); ++k)
    if (qubits[k].name == name) return static_cast<int>(k);
  return -1;
}

MockModel load_mock_model(std::string_view text) {
  const json j = parse_strict(text);
  expect_object(j, "");
  reject_unknown(j, "", {"version", "qubits", "two_qubit_depolarizing"});
  check_version(j);
  MockModel m;
  const json& qs = require(j, "", "qubits");
  if (!qs.is_array()) throw ConfigError(ConfigError::Kind::schema, "qubits", "expected an array");
  for (std::size_t k = 0; k < qs.size(); ++k) {
    const std::string path = "qubits[" + std::to_string(k) + "]";
    const json& q = qs[k];
    expect_object(q, path);
    reject_unknown(q, path,
                   {"name", "drive_freq", "rabi_rate_per_unit_amp", "T1", "T2", "mu0", "mu1", "sigma_r", "eps01",
                    "eps10", "p_dep", "delta"});
    MockQubit mq;
    const json& name = require(q, path, "name");
    if (!name.is_string()) throw ConfigError(ConfigError::Kind::schema, path + ".name", "expected a string");
    mq.name = name.get<std::string>();
    mq.drive_freq = get_real(require(q, path, "drive_freq"), path + ".drive_freq");
    mq.rabi_rate_per_unit_amp = get_real(require(q, path, "rabi_rate_per_unit_amp"), path + ".rabi_rate_per_unit_amp");
    mq.T1 = get_time(q, path, "T1");
    mq.T2 = get_time(q, path, "T2");
    mq.mu0 = get_complex(require(q, path, "mu0"), path + ".mu0");
    mq.mu1 = get_complex(require(q, path, "mu1"), path + ".mu1");
    mq.sigma_r = get_real(require(q, path, "sigma_r"), path + ".sigma_r");
    if (q.contains("eps01")) mq.eps01 = get_real(q["eps01"], path + ".eps01");
    if (q.contains("eps10")) mq.eps10 = get_real(q["eps10"], path + ".eps10");
    if (q.contains("p_dep")) mq.p_dep = get_real(q["p_dep"], path + ".p_dep");
    if (q.contains("delta")) mq.delta = get_real(q["delta"], path + ".delta");
    m.qubits.push_back(mq);
  }
  if (j.contains("two_qubit_depolarizing"))
    m.two_qubit_depolarizing = get_real(j["two_qubit_depolarizing"], "two_qubit_depolarizing");
  m.validate();
  return m;
}

MockModel load_mock_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(ConfigError::Kind::parse, path, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_mock_model(ss.str());
}

std::string to_json(const MockModel& m) {
  json j;
  j["version"] = cfg::kSchemaVersion;
  j["qubits"] = json::array();
  for (const auto& q : m.qubits) {
    json o;
    o["name"] = q.name;
    o["drive_freq"] = q.drive_freq;
    o["rabi_rate_per_unit_amp"] = q.rabi_rate_per_unit_amp;
    if (std::isfinite(q.T1)) o["T1"] = q.T1;
    if (std::isfinite(q.T2)) o["T2"] = q.T2;
    o["mu0"] = {q.mu0.real(), q.mu0.imag()};
    o["mu1"] = {q.mu1.real(), q.mu1.imag()};
    o["sigma_r"] = q.sigma_r;
    o["eps01"] = q.eps01;
    o["eps10"] = q.eps10;
    o["p_dep"] = q.p_dep;
    o["delta"] = q.delta;
    j["qubits"].push_back(o);
  }
  j["two_qubit_depolarizing"] = m.two_qubit_depolarizing;
  return j.dump(2);
}

// ---------------------------------------------------------------------------

Eigen::Matrix2cd pulse_unitary(const DrivePulse& p, const MockQubit& q) {
  const double wz = 2 * kPi * (p.fcarrier - q.drive_freq);
  const double wr = 2 * kPi * p.amp * q.rabi_rate_per_unit_amp;
  auto step = [&](cplx e, double dt) {
    const cplx drive = wr * e * std::polar(1.0, p.phase);
    const double wx = drive.real(), wy = drive.imag();
    const double w = std::sqrt(wx * wx + wy * wy + wz * wz);
    return rotation(w * dt, wx, wy, wz);
  };
  if (p.envelope.empty()) return step(1.0, p.duration);
  const double dt = p.duration / static_cast<double>(p.envelope.size());
  Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
  for (const auto& e : p.envelope) u = step(e, dt) * u;
  return u;
}

std::vector<Shot> sample_shots(const DensityMatrix& state, const MockModel& model, int shots,
                               std::mt19937_64& rng) {
  const int n = state.n_qubits();
  if (static_cast<int>(model.qubits.size()) < n) throw QcvvError("model has fewer qubits than the state");
  const auto probs = state.probabilities();
  std::discrete_distribution<std::size_t> pick(probs.begin(), probs.end());
  std::uniform_real_distribution<double> u(0, 1);
  std::normal_distribution<double> g(0, 1);
  std::vector<Shot> out(static_cast<std::size_t>(shots));
  for (auto& s : out) {
    const std::size_t k = pick(rng);
    s.bits.resize(n);
    s.iq.resize(n);
    for (int q = 0; q < n; ++q) {
      const auto& mq = model.qubits[q];
      int bit = static_cast<int>((k >> (n - 1 - q)) & 1);
      if (bit == 0 && u(rng) < mq.eps01) bit = 1;
      else if (bit == 1 && u(rng) < mq.eps10) bit = 0;
      s.bits[q] = bit;
      const cplx mu = bit ? mq.mu1 : mq.mu0;
      const double gi = g(rng), gq = g(rng);
      s.iq[q] = mu + mq.sigma_r * cplx(gi, gq);
    }
  }
  return out;
}

std::vector<Shot> mock_response(std::span<const DrivePulse> pulses, const MockModel& model, int shots,
                                std::uint64_t seed) {
  model.validate();
  const int n = static_cast<int>(model.qubits.size());
  if (n == 0) throw QcvvError("model has no qubits");
  DensityMatrix rho(n);
  for (const auto& p : pulses) {
    if (p.qubit < 0 || p.qubit >= n) throw QcvvError("pulse addresses qubit " + std::to_string(p.qubit));
    const auto& q = model.qubits[p.qubit];
    rho.apply_1q(pulse_unitary(p, q), p.qubit);
    for (int k = 0; k < n; ++k) rho.relax(k, p.duration, model.qubits[k].T1, model.qubits[k].T2);
  }
  std::mt19937_64 rng(seed);
  return sample_shots(rho, model, shots, rng);
}

// ---------------------------------------------------------------------------

double rabi_p1(double amp, double duration, double detuning, double rabi_rate) {
  const double omega = amp * rabi_rate;
  const double g2 = omega * omega + detuning * detuning;
  if (g2 == 0) return 0;
  const double s = std::sin(kPi * std::sqrt(g2) * duration);
  return omega * omega / g2 * s * s;
}

double chi2_sf(double x, int dof) {
  if (dof <= 0) return 1;
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, std::max(0.0, x)));
}

namespace {

SweepResult finish(std::vector<SweepPoint> pts) {
  SweepResult r;
  r.points = std::move(pts);
  // binomial chi-square; points with near-certain outcomes carry no
  // information and would divide by ~0
  for (const auto& p : r.points) {
    const double var = p.shots * p.expected * (1 - p.expected);
    if (var < 1e-6) continue;
    const double d = p.ones - p.shots * p.expected;
    r.chi2 += d * d / var;
    ++r.dof;
  }
  r.p_value = chi2_sf(r.chi2, r.dof);
  return r;
}

SweepPoint measure(const MockModel& model, int qubit, double amp, double duration, double detuning,
                   int shots, std::uint64_t seed) {
  const auto& q = model.qubits.at(static_cast<std::size_t>(qubit));
  DrivePulse p;
  p.qubit = qubit;
  p.amp = amp;
  p.duration = duration;
  p.fcarrier = q.drive_freq + detuning;
  auto shots_out = mock_response(std::span(&p, 1), model, shots, seed);
  SweepPoint pt{amp, duration, detuning, shots, 0, rabi_p1(amp, duration, detuning, q.rabi_rate_per_unit_amp)};
  for (const auto& s : shots_out) pt.ones += s.bits[qubit];
  return pt;
}

}  // namespace

SweepResult rabi_amplitude_sweep(const MockModel& model, int qubit, std::span<const double> amps,
                                 double duration, int shots, std::uint64_t seed) {
  std::vector<SweepPoint> pts;
  for (std::size_t k = 0; k < amps.size(); ++k)
    pts.push_back(measure(model, qubit, amps[k], duration, 0, shots, derive_seed(seed, k)));
  return finish(std::move(pts));
}

SweepResult chevron_sweep(const MockModel& model, int qubit, std::span<const double> detunings,
                          std::span<const double> durations, double amp, int shots, std::uint64_t seed) {
  std::vector<SweepPoint> pts;
  std::uint64_t k = 0;
  for (double d : detunings)
    for (double t : durations) pts.push_back(measure(model, qubit, amp, t, d, shots, derive_seed(seed, k++)));
  return finish(std::move(pts));
}

std::string to_csv(const SweepResult& r) {
  std::ostringstream os;
  os.precision(10);
  os << "amp,duration,detuning,shots,ones,p1,expected\n";
  for (const auto& p : r.points)
    os << p.amp << ',' << p.duration << ',' << p.detuning << ',' << p.shots << ',' << p.ones << ','
       << static_cast<double>(p.ones) / p.shots << ',' << p.expected << '\n';
  return os.str();
}

}  // namespace qubic::qcvv
