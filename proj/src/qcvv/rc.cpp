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

#include <boost/math/distributions/students_t.hpp>
#include <unsupported/Eigen/KroneckerProduct>

#include <chrono>
#include <json.hpp>
#include <numbers>
#include <sstream>

#include "qubic/device.hpp"
#include "qubic/qcvv.hpp"

namespace qubic::qcvv {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<std::pair<int, int>> cz_layer(int n, int k) {
  std::vector<std::pair<int, int>> pairs;
  const int offset = n > 2 ? k % 2 : 0;
  for (int a = offset; a + 1 < n; a += 2) pairs.emplace_back(a, a + 1);
  return pairs;
}

// Pauli index (0 I, 1 X, 2 Y, 3 Z) <-> (x, z) bits
int pauli_from_bits(bool x, bool z) { return x ? (z ? 2 : 1) : (z ? 3 : 0); }
bool x_bit(int p) { return p == 1 || p == 2; }
bool z_bit(int p) { return p == 2 || p == 3; }

void check_shape(const LayeredCircuit& c) {
  if (c.n_qubits < 1) throw QcvvError("layered circuit needs at least one qubit");
  if (c.easy.size() != c.hard.size() + 1) throw QcvvError("layered circuit needs depth + 1 easy layers");
  for (const auto& layer : c.easy) {
    if (static_cast<int>(layer.size()) != c.n_qubits) throw QcvvError("easy layer size differs from qubit count");
    for (int g : layer)
      if (g < 0 || g >= CliffordGroup::size()) throw QcvvError("easy gate is not a Clifford index");
  }
  for (const auto& cycle : c.hard)
    for (auto [a, b] : cycle)
      if (a < 0 || b < 0 || a >= c.n_qubits || b >= c.n_qubits || a == b)
        throw QcvvError("hard cycle pair out of range");
}

Eigen::MatrixXcd layer_unitary(const std::vector<int>& layer) {
  const auto& G = CliffordGroup::instance();
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(1, 1);
  for (int g : layer) u = Eigen::kroneckerProduct(u, Eigen::MatrixXcd(G.unitary(g))).eval();
  return u;
}

Eigen::MatrixXcd cz_unitary(int n, const std::vector<std::pair<int, int>>& pairs) {
  const Eigen::Index d = Eigen::Index{1} << n;
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (auto [a, b] : pairs)
      if (((i >> (n - 1 - a)) & 1) && ((i >> (n - 1 - b)) & 1)) u(i, i) = -u(i, i);
  return u;
}

/// Readout-flipped outcome probabilities.
std::vector<double> measured_probabilities(const std::vector<double>& probs, const MockModel& model, int n) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(1, 1);
  for (int q = 0; q < n; ++q) M = kron(M, confusion_matrix(model.qubits[q]));
  const Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(probs.data(), static_cast<Eigen::Index>(probs.size()));
  const Eigen::VectorXd m = M * p;
  return {m.data(), m.data() + m.size()};
}

void sample_into(std::map<std::string, int>& counts, const std::vector<double>& probs, int n, int shots,
                 std::mt19937_64& rng) {
  std::discrete_distribution<std::size_t> pick(probs.begin(), probs.end());
  for (int s = 0; s < shots; ++s) {
    const std::size_t i = pick(rng);
    std::string key(static_cast<std::size_t>(n), '0');
    for (int q = 0; q < n; ++q)
      if ((i >> (n - 1 - q)) & 1) key[q] = '1';
    ++counts[key];
  }
}

void mean_std(const std::vector<double>& v, double& mean, double& sd) {
  mean = sd = 0;
  if (v.empty()) return;
  for (double x : v) mean += x / static_cast<double>(v.size());
  if (v.size() < 2) return;
  for (double x : v) sd += (x - mean) * (x - mean);
  sd = std::sqrt(sd / static_cast<double>(v.size() - 1));
}

/// Compiler, emulated device and client shared across a harness run.
struct HardwarePath {
  SyntheticDevice dev;
  compiler::Compiler comp;
  device::DeviceCore core;
  device::Client client;

  explicit HardwarePath(int n)
      : dev(synthetic_device(n)),
        comp(dev.chip, dev.gates, dev.hw, compiler::Mode::optm),
        core(dev.hw),
        client(std::make_unique<device::InProcessTransport>(core), dev.hw) {}
};

}  // namespace

LayeredCircuit random_layered_circuit(int n_qubits, int depth, std::mt19937_64& rng) {
  if (n_qubits < 2) throw QcvvError("layered circuits need at least two qubits");
  if (depth < 0) throw QcvvError("negative circuit depth");
  std::uniform_int_distribution<int> pick(0, CliffordGroup::size() - 1);
  LayeredCircuit c;
  c.n_qubits = n_qubits;
  for (int k = 0; k <= depth; ++k) {
    std::vector<int> layer(n_qubits);
    for (auto& g : layer) g = pick(rng);
    c.easy.push_back(std::move(layer));
    if (k < depth) c.hard.push_back(cz_layer(n_qubits, k));
  }
  return c;
}

LayeredCircuit twirl(const LayeredCircuit& bare, std::mt19937_64& rng) {
  check_shape(bare);
  const auto& G = CliffordGroup::instance();
  const int n = bare.n_qubits;
  std::uniform_int_distribution<int> pick(0, 3);
  LayeredCircuit out = bare;
  std::vector<int> correction(n, 0);  // Pauli left over from the previous hard cycle
  for (int k = 0; k <= bare.depth(); ++k) {
    for (int q = 0; q < n; ++q) out.easy[k][q] = G.compose(bare.easy[k][q], G.pauli(correction[q]));
    if (k == bare.depth()) break;
    std::vector<bool> x(n), z(n);
    for (int q = 0; q < n; ++q) {
      const int p = pick(rng);
      out.easy[k][q] = G.compose(G.pauli(p), out.easy[k][q]);
      x[q] = x_bit(p), z[q] = z_bit(p);
    }
    // CZ P CZ = P' up to phase: X_a picks up Z_b
    std::vector<bool> z2 = z;
    for (auto [a, b] : bare.hard[k]) {
      z2[b] = z2[b] ^ x[a];
      z2[a] = z2[a] ^ x[b];
    }
    for (int q = 0; q < n; ++q) correction[q] = pauli_from_bits(x[q], z2[q]);
  }
  return out;
}

Eigen::MatrixXcd circuit_unitary(const LayeredCircuit& c) {
  check_shape(c);
  const Eigen::Index d = Eigen::Index{1} << c.n_qubits;
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(d, d);
  for (int k = 0; k <= c.depth(); ++k) {
    u = layer_unitary(c.easy[k]) * u;
    if (k < c.depth()) u = cz_unitary(c.n_qubits, c.hard[k]) * u;
  }
  return u;
}

DensityMatrix run_noisy(const LayeredCircuit& c, const MockModel& model) {
  check_shape(c);
  if (static_cast<int>(model.qubits.size()) < c.n_qubits) throw QcvvError("mock model has fewer qubits than the circuit");
  const auto& G = CliffordGroup::instance();
  DensityMatrix rho(c.n_qubits);
  for (int k = 0; k <= c.depth(); ++k) {
    for (int q = 0; q < c.n_qubits; ++q) {
      rho.apply_1q(G.unitary(c.easy[k][q]), q);
      rho.depolarize_1q(model.qubits[q].p_dep, q);
    }
    if (k == c.depth()) break;
    for (auto [a, b] : c.hard[k]) {
      rho.apply_cz(a, b);
      rho.depolarize_2q(model.two_qubit_depolarizing, a, b);
    }
    for (int q = 0; q < c.n_qubits; ++q)
      if (model.qubits[q].delta != 0) rho.apply_1q(rotation(model.qubits[q].delta, 1, 0, 0), q);
  }
  return rho;
}

std::vector<double> ideal_probabilities(const LayeredCircuit& c) {
  const Eigen::MatrixXcd u = circuit_unitary(c);
  std::vector<double> p(static_cast<std::size_t>(u.rows()));
  for (Eigen::Index i = 0; i < u.rows(); ++i) p[i] = std::norm(u(i, 0));
  return p;
}

compiler::Circuit to_compiler_circuit(const LayeredCircuit& c) {
  check_shape(c);
  const auto& G = CliffordGroup::instance();
  auto qname = [](int q) { return "Q" + std::to_string(q); };
  compiler::Circuit out;
  for (int k = 0; k <= c.depth(); ++k) {
    for (int q = 0; q < c.n_qubits; ++q) {
      for (const auto& g : G.native(c.easy[k][q])) {
        compiler::CircuitOp op;
        op.qubits = {qname(q)};
        if (g.front() == 'Z') {
          op.name = std::string(compiler::kVirtualZ);
          op.phase = g == "Z90" ? std::numbers::pi / 2 : g == "Z-90" ? -std::numbers::pi / 2 : std::numbers::pi;
        } else {
          op.name = g;
        }
        out.ops.push_back(std::move(op));
      }
    }
    if (k == c.depth()) break;
    for (auto [a, b] : c.hard[k]) {
      compiler::CircuitOp op;
      op.name = "CZ";
      op.qubits = {qname(std::min(a, b)), qname(std::max(a, b))};
      out.ops.push_back(std::move(op));
    }
  }
  return out;
}

SyntheticDevice synthetic_device(int n_qubits) {
  if (n_qubits < 1 || n_qubits > 4) throw QcvvError("synthetic device supports 1..4 qubits");
  SyntheticDevice d;
  auto qname = [](int q) { return "Q" + std::to_string(q); };
  for (int q = 0; q < n_qubits; ++q) {
    const double f = 5.0e9 + 0.1e9 * q;
    d.chip.qubits[qname(q)] = {f, 6.5e9 + 0.05e9 * q};
    cfg::ChannelInfo ch;
    ch.element = static_cast<unsigned>(q);
    ch.destination = static_cast<unsigned>(q) % cfg::kMaxDacPairs;
    ch.lo_freq = f - 100e6;
    d.hw.channel_map[qname(q) + ".qdrv"] = ch;

    cfg::EnvelopeSpec drag;
    drag.kind = cfg::EnvelopeKind::drag;
    drag.params = {{"sigma_fraction", 0.25}, {"alpha", 0.5}};
    const struct {
      const char* name;
      double amp, phase;
    } kGates[] = {{"X90", 0.4365, 0}, {"Y90", 0.4365, std::numbers::pi / 2},
                  {"X180", 0.873, 0}, {"Y180", 0.873, std::numbers::pi / 2}};
    for (const auto& g : kGates) {
      cfg::PulseDef p;
      p.dest = qname(q) + ".qdrv";
      p.twidth = 32e-9;
      p.fcarrier = f;
      p.fcarrier_ref = qname(q) + ".freq";
      p.pcarrier = g.phase;
      p.amp = g.amp;
      p.env = drag;
      d.gates.gates[qname(q) + "." + g.name] = {p};
    }
  }
  for (int a = 0; a < n_qubits; ++a)
    for (int b = a + 1; b < n_qubits; ++b) {
      cfg::PulseDef p;
      p.dest = qname(a) + ".qdrv";
      p.twidth = 200e-9;
      p.fcarrier = d.chip.qubits[qname(b)].drive_freq;
      p.fcarrier_ref = qname(b) + ".freq";
      p.amp = 0.3;
      p.env.kind = cfg::EnvelopeKind::cos_edge_square;
      p.env.params = {{"edge_fraction", 0.1}};
      d.gates.gates[qname(a) + qname(b) + ".CZ"] = {p};
    }
  d.chip.metadata["name"] = "synthetic";
  return d;
}

StageTimes& StageTimes::operator+=(const StageTimes& o) {
  compile += o.compile;
  transpile += o.transpile;
  transfer += o.transfer;
  seqgen += o.seqgen;
  run += o.run;
  acquire += o.acquire;
  process += o.process;
  return *this;
}

TVDReport rc_harness(std::span<const LayeredCircuit> bare, const MockModel& model, const RCSettings& s) {
  model.validate();
  if (s.variants < 1) throw QcvvError("RC needs at least one variant");
  if (s.shots < s.variants) throw QcvvError("RC shot budget is smaller than the variant count");
  TVDReport report;
  std::unique_ptr<HardwarePath> hw;
  int hw_qubits = 0;

  for (std::size_t ci = 0; ci < bare.size(); ++ci) {
    const LayeredCircuit& circuit = bare[ci];
    check_shape(circuit);
    const int n = circuit.n_qubits;
    if (static_cast<int>(model.qubits.size()) < n) throw QcvvError("mock model has fewer qubits than the circuit");
    std::mt19937_64 rng(derive_seed(s.seed, ci));
    StageTimes t;

    // Compile: twirled variants, each checked against the bare unitary
    auto t0 = Clock::now();
    const Eigen::MatrixXcd target = circuit_unitary(circuit);
    std::vector<LayeredCircuit> variants;
    for (int v = 0; v < s.variants; ++v) {
      variants.push_back(twirl(circuit, rng));
      if (!equal_up_to_phase(target, circuit_unitary(variants.back()), 1e-10))
        throw VerificationError("twirl verification failed for circuit " + std::to_string(ci) + " variant " +
                        std::to_string(v));
    }
    t.compile = seconds_since(t0);

    t0 = Clock::now();  // transpilation happens upstream; nothing to do here
    t.transpile = seconds_since(t0);

    if (s.hardware_path && hw_qubits != n) {
      hw = std::make_unique<HardwarePath>(n);
      hw_qubits = n;
    }

    const auto ideal = to_distribution(ideal_probabilities(circuit), n);
    std::map<std::string, int> bare_counts, rc_counts;
    auto execute = [&](const LayeredCircuit& c, int shots, std::map<std::string, int>& counts) {
      if (hw) {
        auto t1 = Clock::now();
        const auto program = hw->comp.compile(to_compiler_circuit(c));
        t.seqgen += seconds_since(t1);
        t1 = Clock::now();
        hw->client.upload(program);
        t.transfer += seconds_since(t1);
        t1 = Clock::now();
        device::RunSetup setup;
        setup.shots = static_cast<std::uint64_t>(shots);  // the device plays every shot
        hw->client.configure(setup);
        hw->client.start();
        hw->client.wait_idle();
        t.run += seconds_since(t1);
        t1 = Clock::now();
        const auto st = hw->client.status();
        if (st.faults != 0) throw QcvvError("device reported faults while playing an RC variant");
        hw->client.read_acc();
        t.acquire += seconds_since(t1);
      }
      const auto t1 = Clock::now();
      const auto probs = measured_probabilities(run_noisy(c, model).probabilities(), model, n);
      sample_into(counts, probs, n, shots, rng);
      t.run += seconds_since(t1);
    };

    execute(circuit, s.shots, bare_counts);
    for (int v = 0; v < s.variants; ++v) {
      // spread the budget so the variants add up to the bare shot count
      const int shots = s.shots / s.variants + (v < s.shots % s.variants ? 1 : 0);
      execute(variants[v], shots, rc_counts);
    }

    t0 = Clock::now();
    CircuitTVD r;
    r.variants = s.variants;
    r.bare = tvd(counts_to_distribution(bare_counts), ideal);
    r.rc = tvd(counts_to_distribution(rc_counts), ideal);
    report.circuits.push_back(r);
    t.process = seconds_since(t0);
    report.times += t;
  }

  std::vector<double> b, r;
  for (const auto& c : report.circuits) b.push_back(c.bare), r.push_back(c.rc);
  mean_std(b, report.bare_mean, report.bare_std);
  mean_std(r, report.rc_mean, report.rc_std);
  if (b.size() >= 2) report.p_value = paired_t_pvalue(b, r, &report.t_statistic);
  return report;
}

double paired_t_pvalue(std::span<const double> a, std::span<const double> b, double* t) {
  if (a.size() != b.size() || a.size() < 2) throw QcvvError("paired t-test needs two or more matched pairs");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  double mean = 0, sd = 0;
  mean_std(d, mean, sd);
  const double n = static_cast<double>(d.size());
  double stat = 0;
  if (sd == 0)
    stat = mean > 0 ? std::numeric_limits<double>::infinity() : mean < 0 ? -std::numeric_limits<double>::infinity() : 0;
  else
    stat = mean / (sd / std::sqrt(n));
  if (t) *t = stat;
  if (std::isinf(stat)) return stat > 0 ? 0.0 : 1.0;
  if (sd == 0) return 0.5;
  boost::math::students_t dist(n - 1);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

std::string to_json(const TVDReport& r) {
  nlohmann::json j;
  j["circuits"] = nlohmann::json::array();
  for (const auto& c : r.circuits) j["circuits"].push_back({{"bare", c.bare}, {"rc", c.rc}, {"variants", c.variants}});
  j["bare"] = {{"mean", r.bare_mean}, {"std", r.bare_std}};
  j["rc"] = {{"mean", r.rc_mean}, {"std", r.rc_std}};
  j["paired_t"] = {{"alternative", "bare > rc"}, {"t", r.t_statistic}, {"p_value", r.p_value}};
  j["stage_seconds"] = {{"Compile", r.times.compile}, {"Transpile", r.times.transpile},
                        {"Transfer", r.times.transfer}, {"SeqGen", r.times.seqgen},
                        {"Run", r.times.run},           {"Acquire", r.times.acquire},
                        {"Process", r.times.process},   {"Total", r.times.total()}};
  return j.dump(2);
}

std::string tvd_csv(const TVDReport& r) {
  std::ostringstream os;
  os.precision(10);
  os << "circuit,bare_tvd,rc_tvd,variants\n";
  for (std::size_t i = 0; i < r.circuits.size(); ++i)
    os << i << ',' << r.circuits[i].bare << ',' << r.circuits[i].rc << ',' << r.circuits[i].variants << '\n';
  return os.str();
}

std::string timing_csv(const TVDReport& r) {
  std::ostringstream os;
  os.precision(10);
  os << "stage,seconds\n"
     << "Compile," << r.times.compile << '\n'
     << "Transpile," << r.times.transpile << '\n'
     << "Transfer," << r.times.transfer << '\n'
     << "SeqGen," << r.times.seqgen << '\n'
     << "Run," << r.times.run << '\n'
     << "Acquire," << r.times.acquire << '\n'
     << "Process," << r.times.process << '\n';
  return os.str();
}

}  // namespace qubic::qcvv
