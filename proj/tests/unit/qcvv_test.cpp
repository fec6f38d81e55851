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

#include <doctest.h>

#include <algorithm>
#include <numbers>
#include <random>

#include "qubic/chipcfg.hpp"
#include "qubic/qcvv.hpp"

using namespace qubic;
using namespace qubic::qcvv;

namespace {

constexpr double kPi = std::numbers::pi;

MockModel one_qubit(double p_dep = 0, double delta = 0) {
  MockModel m;
  MockQubit q;
  q.name = "Q0";
  q.p_dep = p_dep;
  q.delta = delta;
  m.qubits.push_back(q);
  return m;
}

MockModel n_qubits(int n, double delta, double p_dep = 0) {
  MockModel m;
  for (int i = 0; i < n; ++i) {
    MockQubit q;
    q.name = "Q" + std::to_string(i);
    q.drive_freq = 5e9 + 1e8 * i;
    q.delta = delta;
    q.p_dep = p_dep;
    m.qubits.push_back(q);
  }
  return m;
}

std::vector<cplx> cloud(cplx mu, double sigma, int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0, sigma);
  std::vector<cplx> v;
  for (int i = 0; i < n; ++i) v.push_back(mu + cplx(g(rng), g(rng)));
  return v;
}

Distribution random_distribution(std::mt19937_64& rng, int outcomes) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> w(outcomes);
  double s = 0;
  for (auto& x : w) s += x = u(rng) < 0.2 ? 0 : u(rng);
  if (s == 0) w[0] = s = 1;
  Distribution d;
  for (int i = 0; i < outcomes; ++i) d[std::to_string(i)] = w[i] / s;
  return d;
}

}  // namespace

TEST_CASE("Clifford group closes on 24 elements with exact composition") {
  const auto& G = CliffordGroup::instance();
  CHECK(G.size() == 24);
  CHECK(G.unitary(0).isApprox(Eigen::Matrix2cd::Identity()));
  for (int a = 0; a < 24; ++a) {
    CHECK(G.compose(a, G.inverse(a)) == 0);
    CHECK(G.compose(G.inverse(a), a) == 0);
    for (int b = 0; b < 24; ++b) {
      const int ab = G.compose(a, b);
      REQUIRE(ab >= 0);
      CHECK(equal_up_to_phase(G.unitary(ab), G.unitary(a) * G.unitary(b), 1e-12));
    }
  }
  for (int a = 0; a < 24; ++a) {
    // native sequence in time order reproduces the element
    Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
    for (const auto& g : G.native(a)) u = native_unitary(g) * u;
    CHECK(equal_up_to_phase(u, G.unitary(a), 1e-12));
    CHECK(G.native(a).size() <= 3);
  }
  std::vector<int> paulis{G.pauli_i(), G.pauli_x(), G.pauli_y(), G.pauli_z()};
  std::sort(paulis.begin(), paulis.end());
  CHECK(std::unique(paulis.begin(), paulis.end()) == paulis.end());
  CHECK(G.compose(G.pauli_x(), G.pauli_y()) == G.pauli_z());
  CHECK(G.native(G.find(native_unitary("X90"))) == std::vector<std::string>{"X90"});
}

TEST_CASE("rotation and density-matrix primitives") {
  CHECK(equal_up_to_phase(rotation(kPi, 1, 0, 0), native_unitary("X180"), 1e-15));
  Eigen::Matrix2cd x;
  x << 0, 1, 1, 0;
  CHECK(equal_up_to_phase(rotation(kPi, 1, 0, 0), x, 1e-15));
  CHECK_FALSE(equal_up_to_phase(rotation(kPi / 2, 1, 0, 0), x, 1e-6));

  DensityMatrix rho(2);
  rho.apply_1q(native_unitary("X180"), 1);
  auto p = rho.probabilities();
  CHECK(p[1] == doctest::Approx(1));  // |01>, qubit 0 is the MSB

  DensityMatrix plus(2);
  plus.apply_1q(native_unitary("Y90"), 0);
  plus.apply_1q(native_unitary("Y90"), 1);
  plus.apply_cz(0, 1);
  CHECK(plus.rho()(3, 0).real() == doctest::Approx(-0.25));
  CHECK(plus.rho()(1, 0).real() == doctest::Approx(0.25));

  DensityMatrix mixed(3);
  mixed.depolarize_all(1);
  CHECK(mixed.rho().isApprox(Eigen::MatrixXcd::Identity(8, 8) / 8.0));

  DensityMatrix two(3);
  two.depolarize_2q(1, 0, 2);
  p = two.probabilities();
  CHECK(p[0] == doctest::Approx(0.25));
  CHECK(p[1] == doctest::Approx(0.25));
  CHECK(p[2] == doctest::Approx(0));
  CHECK(two.rho().trace().real() == doctest::Approx(1));

  DensityMatrix one(1);
  one.apply_1q(native_unitary("X180"), 0);
  one.relax(0, 10e-6, 10e-6, 20e-6);
  CHECK(one.probabilities()[1] == doctest::Approx(std::exp(-1.0)));

  DensityMatrix coh(1);
  coh.apply_1q(native_unitary("Y90"), 0);
  coh.relax(0, 5e-6, 20e-6, 5e-6);
  CHECK(std::abs(coh.rho()(0, 1)) == doctest::Approx(0.5 * std::exp(-1.0)));
}

TEST_CASE("on-resonance pi pulse gives P1 = 1") {
  auto model = one_qubit();
  DrivePulse p;
  p.amp = 0.5;
  p.duration = 1.0 / (2 * p.amp * model.qubits[0].rabi_rate_per_unit_amp);
  p.fcarrier = model.qubits[0].drive_freq;
  const auto u = pulse_unitary(p, model.qubits[0]);
  CHECK(std::norm(u(1, 0)) == doctest::Approx(1).epsilon(1e-12));

  const auto shots = mock_response(std::span(&p, 1), model, 200, 3);
  CHECK(std::all_of(shots.begin(), shots.end(), [](const Shot& s) { return s.bits[0] == 1; }));

  // flat piecewise envelope is the same rotation
  p.envelope.assign(50, 1.0);
  CHECK(equal_up_to_phase(pulse_unitary(p, model.qubits[0]), u, 1e-12));
}

TEST_CASE("pulse rotation matches the generalized Rabi closed form") {
  auto model = one_qubit();
  const auto& q = model.qubits[0];
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> amp(0.01, 1), dur(1e-9, 200e-9), det(-30e6, 30e6);
  for (int i = 0; i < 200; ++i) {
    DrivePulse p;
    p.amp = amp(rng);
    p.duration = dur(rng);
    const double d = det(rng);
    p.fcarrier = q.drive_freq + d;
    p.phase = amp(rng) * 6;
    const double expect = rabi_p1(p.amp, p.duration, d, q.rabi_rate_per_unit_amp);
    CHECK(std::norm(pulse_unitary(p, q)(1, 0)) == doctest::Approx(expect).epsilon(1e-9));
  }
  // chevron contrast envelope at the half period of the generalized frequency
  const double omega = 0.5 * q.rabi_rate_per_unit_amp, delta = 7e6;
  const double g = std::hypot(omega, delta);
  CHECK(rabi_p1(0.5, 0.5 / g, delta, q.rabi_rate_per_unit_amp) ==
        doctest::Approx(1 / (1 + (delta / omega) * (delta / omega))));
}

TEST_CASE("Rabi and chevron sweeps agree with the closed form within shot noise") {
  auto model = one_qubit();
  std::vector<double> amps;
  for (int i = 0; i <= 40; ++i) amps.push_back(i * 0.025);
  const auto rabi = rabi_amplitude_sweep(model, 0, amps, 40e-9, 400, 5);
  CHECK(rabi.points.size() == amps.size());
  CHECK(rabi.p_value > 1e-3);
  // sinusoidal in amplitude: the maximum lands near amp = 1/(2 rate tau) = 0.625
  const auto best = std::max_element(rabi.points.begin(), rabi.points.end(),
                                     [](const SweepPoint& a, const SweepPoint& b) { return a.expected < b.expected; });
  CHECK(best->amp == doctest::Approx(0.625).epsilon(0.05));

  std::vector<double> detunings, durations;
  for (int i = -10; i <= 10; ++i) detunings.push_back(i * 2e6);
  for (int i = 1; i <= 10; ++i) durations.push_back(i * 10e-9);
  const auto chev = chevron_sweep(model, 0, detunings, durations, 0.5, 200, 6);
  CHECK(chev.points.size() == detunings.size() * durations.size());
  CHECK(chev.p_value > 1e-3);
  CHECK(to_csv(chev).find("detuning") != std::string::npos);

  // a model that disagrees with the data is rejected
  auto wrong = chev;
  for (auto& p : wrong.points) p.expected = std::clamp(p.expected * 0.8, 1e-3, 1 - 1e-3);
  double chi2 = 0;
  for (const auto& p : wrong.points)
    chi2 += std::pow(p.ones - p.shots * p.expected, 2) / (p.shots * p.expected * (1 - p.expected));
  CHECK(chi2_sf(chi2, static_cast<int>(wrong.points.size())) < 1e-6);
}

TEST_CASE("chi-square survival function") {
  CHECK(chi2_sf(0, 3) == doctest::Approx(1));
  CHECK(chi2_sf(2, 2) == doctest::Approx(std::exp(-1.0)));
  CHECK(chi2_sf(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("GMM separates well-separated clouds") {
  std::mt19937_64 rng(11);
  const double sigma = 0.1;
  const cplx mu0{0, 0}, mu1{1.0, 0};  // 10 sigma apart
  auto a = cloud(mu0, sigma, 2000, rng), b = cloud(mu1, sigma, 2000, rng);
  std::vector<cplx> train = a;
  train.insert(train.end(), b.begin(), b.end());
  std::shuffle(train.begin(), train.end(), rng);
  const auto cal = cloud(mu0, sigma, 200, rng);
  const auto g = gmm_fit(train, 2, 4, cal);
  CHECK(g.converged);
  CHECK_FALSE(g.collapsed);
  CHECK(g.iterations <= 100);
  CHECK(std::abs(cplx(g.means[0](0), g.means[0](1)) - mu0) < 0.02);
  CHECK(std::abs(cplx(g.means[1](0), g.means[1](1)) - mu1) < 0.02);

  int right = 0;
  const auto t0 = cloud(mu0, sigma, 5000, rng), t1 = cloud(mu1, sigma, 5000, rng);
  for (auto z : t0) right += g.classify(z) == 0;
  for (auto z : t1) right += g.classify(z) == 1;
  CHECK(right / 10000.0 > 0.999);
  const auto post = g.posterior(mu1);
  CHECK(post[0] + post[1] == doctest::Approx(1));
}

TEST_CASE("GMM relabels the ground cluster from calibration shots") {
  std::mt19937_64 rng(12);
  auto a = cloud({0, 0}, 0.1, 500, rng), b = cloud({0, 1}, 0.1, 500, rng);
  std::vector<cplx> train = b;
  train.insert(train.end(), a.begin(), a.end());
  for (cplx ground : {cplx{0, 0}, cplx{0, 1}}) {
    const auto cal = cloud(ground, 0.1, 100, rng);
    const auto g = gmm_fit(train, 2, 99, cal);
    CHECK(std::abs(cplx(g.means[0](0), g.means[0](1)) - ground) < 0.05);
  }
}

TEST_CASE("GMM on indistinguishable clouds") {
  std::mt19937_64 rng(13);
  const double sigma = 0.2;
  auto train = cloud({0.3, -0.2}, sigma, 4000, rng);
  const auto g = gmm_fit(train, 2, 7, cloud({0.3, -0.2}, sigma, 200, rng));

  // identical means: labelled draws classify at chance
  int right = 0;
  const auto t0 = cloud({0.3, -0.2}, sigma, 5000, rng), t1 = cloud({0.3, -0.2}, sigma, 5000, rng);
  for (auto z : t0) right += g.classify(z) == 0;
  for (auto z : t1) right += g.classify(z) == 1;
  CHECK(right / 10000.0 == doctest::Approx(0.5).epsilon(0.04));

  // one cluster fit with k = 2 collapses onto it
  CHECK(g.weights[0] == doctest::Approx(0.5).epsilon(0.2));
  CHECK(g.weights[1] == doctest::Approx(0.5).epsilon(0.2));
  CHECK((g.means[0] - g.means[1]).norm() < 0.1 * sigma);
  CHECK(g.collapsed);
}

TEST_CASE("GMM rejects too few shots") {
  std::vector<cplx> few{{0, 0}, {1, 1}, {2, 2}};
  CHECK_THROWS_AS(gmm_fit(few, 2), QcvvError);
  // degenerate identical points survive thanks to the ridge
  std::vector<cplx> same(10, cplx{1, 1});
  const auto g = gmm_fit(same, 2);
  CHECK(std::isfinite(g.log_likelihood));
}

TEST_CASE("readout correction") {
  Eigen::VectorXd m(2);
  m << 0.7, 0.3;
  CHECK(readout_correct(m, Eigen::MatrixXd::Identity(2, 2)).isApprox(m));

  Eigen::MatrixXd M(2, 2);
  M << 0.9, 0.1, 0.1, 0.9;
  Eigen::VectorXd meas(2);
  meas << 0.9, 0.1;
  const auto c = readout_correct(meas, M);
  CHECK(c(0) == doctest::Approx(1));
  CHECK(c(1) == doctest::Approx(0));

  Eigen::MatrixXd S(2, 2);
  S << 0.5, 0.5, 0.5, 0.5;
  CHECK_THROWS_AS(readout_correct(meas, S), QcvvError);
  Eigen::MatrixXd bad(2, 2);
  bad << 0.9, 0.2, 0.2, 0.9;
  CHECK_THROWS_AS(readout_correct(meas, bad), QcvvError);
  Eigen::MatrixXd ill(2, 2);
  ill << 0.5 + 1e-8, 0.5, 0.5 - 1e-8, 0.5;
  CHECK_THROWS_AS(readout_correct(meas, ill), QcvvError);
}

TEST_CASE("readout correction inverts confusion-matrix application") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0, 1), eps(0, 0.15);
  for (int trial = 0; trial < 200; ++trial) {
    const int nq = 1 + trial % 3;
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(1, 1);
    for (int q = 0; q < nq; ++q) {
      MockQubit mq;
      mq.eps01 = eps(rng);
      mq.eps10 = eps(rng);
      M = kron(M, confusion_matrix(mq));
    }
    Eigen::VectorXd p(M.rows());
    for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = u(rng);
    p /= p.sum();
    CHECK((readout_correct(M * p, M) - p).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("TVD spot values") {
  Distribution p{{"00", 1}}, q{{"00", 0.5}, {"11", 0.5}};
  CHECK(tvd(p, p) == 0);
  CHECK(tvd(p, q) == 0.5);
  CHECK(tvd(Distribution{{"01", 1}}, Distribution{{"10", 1}}) == 1);
  CHECK_THROWS_AS(tvd(Distribution{{"0", 0.6}}, p), QcvvError);
  CHECK_THROWS_AS(tvd(p, Distribution{{"0", 1.5}, {"1", -0.5}}), QcvvError);
  CHECK(to_distribution(std::vector<double>{0, 0.25, 0.75, 0}, 2) == Distribution{{"01", 0.25}, {"10", 0.75}});
  CHECK(counts_to_distribution({{"0", 3}, {"1", 1}}) == Distribution{{"0", 0.75}, {"1", 0.25}});
}

TEST_CASE("TVD is a metric") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 500; ++trial) {
    const auto a = random_distribution(rng, 8), b = random_distribution(rng, 8), c = random_distribution(rng, 8);
    const double ab = tvd(a, b);
    CHECK(ab >= 0);
    CHECK(ab <= 1);
    CHECK(ab == doctest::Approx(tvd(b, a)));
    CHECK(tvd(a, a) == 0);
    CHECK(ab <= tvd(a, c) + tvd(c, b) + 1e-12);
    if (ab == 0) CHECK(a == b);
  }
}

TEST_CASE("exponential fit recovers noiseless parameters") {
  std::vector<double> m{2, 4, 8, 16, 32, 64, 128, 256}, y;
  for (double x : m) y.push_back(0.9 * std::pow(0.995, x));
  const auto f = fit_exponential(m, y);
  CHECK(f.converged);
  CHECK(f.A == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(f.p == doctest::Approx(0.995).epsilon(1e-6));
  CHECK(f.chi2 < 1e-20);
  CHECK(f.residuals.size() == m.size());
  CHECK_THROWS_AS(fit_exponential(std::vector<double>{1}, std::vector<double>{1}), QcvvError);
}

TEST_CASE("RB fit covers the true decay in 95% of synthetic trials") {
  // binomial survival data from known (A, p), fitted with unit weights
  const std::vector<double> m{2, 4, 8, 16, 32, 64, 128, 256};
  const double A = 0.9, p = 0.99;
  const int shots = 500;
  int covered = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::mt19937_64 rng(derive_seed(77, trial));
    std::vector<double> y, s;
    for (double x : m) {
      const double surv = 0.5 + 0.5 * A * std::pow(p, x);
      std::binomial_distribution<int> draw(shots, surv);
      const double est = static_cast<double>(draw(rng)) / shots;
      y.push_back(2 * est - 1);
      s.push_back(2 * std::sqrt(std::max(est * (1 - est), 1e-6) / shots));
    }
    const auto f = fit_exponential(m, y, s);
    covered += std::abs(f.p - p) <= 3 * f.sigma_p();
  }
  MESSAGE("covered " << covered << "/200");
  CHECK(covered >= 190);
}

TEST_CASE("noiseless RB shows no decay") {
  RBSettings s;
  s.sequences = 5;
  s.shots = 200;
  const auto r = rb_experiment(one_qubit(), 0, s);
  CHECK(r.fit.p == doctest::Approx(1).epsilon(1e-3));
  CHECK(r.fit.A == doctest::Approx(1).epsilon(1e-3));
  for (const auto& pt : r.points) CHECK(pt.survival == 1);
}

TEST_CASE("RB recovers the analytic depolarizing fidelity") {
  RBSettings s;
  const auto model = one_qubit(p_dep_for_fidelity(0.998));
  CHECK(model.qubits[0].p_dep == doctest::Approx(0.004));
  const auto r = rb_experiment(model, 0, s);
  MESSAGE("F_avg = " << r.average_fidelity() << " p = " << r.fit.p);
  CHECK(r.fit.converged);
  CHECK(r.average_fidelity() == doctest::Approx(0.998).epsilon(0.001 / 0.998));
  CHECK(r.process_fidelity() < r.average_fidelity());
}

TEST_CASE("two-qubit RB decays monotonically with the channel strength") {
  RBSettings s;
  s.lengths = {1, 2, 4, 8, 16, 32, 64};
  s.sequences = 10;
  s.shots = 1000;
  double prev = 1.1;
  for (double lam : {0.0, 0.01, 0.03, 0.06, 0.1}) {
    auto model = n_qubits(2, 0);
    model.two_qubit_depolarizing = lam;
    const auto r = rb_two_qubit(model, 0, 1, s);
    CHECK(r.dimension == 4);
    MESSAGE("lambda " << lam << " p " << r.fit.p);
    CHECK(r.fit.p < prev);
    prev = r.fit.p;
  }
}

TEST_CASE("RB is reproducible and reports JSON and CSV") {
  RBSettings s;
  s.lengths = {1, 4, 16};
  s.sequences = 4;
  const auto model = one_qubit(0.01);
  const auto a = rb_experiment(model, 0, s), b = rb_experiment(model, 0, s);
  CHECK(to_json(a) == to_json(b));
  CHECK(to_json(a).find("process_fidelity") != std::string::npos);
  CHECK(to_csv(a).rfind("length,", 0) == 0);
  s.seed = 2;
  CHECK(to_json(rb_experiment(model, 0, s)) != to_json(a));
  CHECK_THROWS(rb_experiment(model, 3, s));
}

TEST_CASE("twirled variants equal the bare circuit") {
  std::mt19937_64 rng(41);
  for (int n : {2, 3}) {
    for (int i = 0; i < 30; ++i) {
      const auto bare = random_layered_circuit(n, 1 + i % 6, rng);
      const auto u = circuit_unitary(bare);
      CHECK(u.isUnitary(1e-12));
      for (int v = 0; v < 10; ++v) {
        const auto var = twirl(bare, rng);
        CHECK(var.hard == bare.hard);
        CHECK(equal_up_to_phase(u, circuit_unitary(var), 1e-10));
      }
    }
  }
}

TEST_CASE("twirling changes the easy layers") {
  std::mt19937_64 rng(42);
  const auto bare = random_layered_circuit(3, 5, rng);
  int differ = 0;
  for (int v = 0; v < 20; ++v) differ += twirl(bare, rng).easy != bare.easy;
  CHECK(differ >= 19);
}

TEST_CASE("noiseless evolution matches the state-vector oracle") {
  std::mt19937_64 rng(43);
  const auto model = n_qubits(3, 0);
  for (int i = 0; i < 10; ++i) {
    const auto c = random_layered_circuit(3, 4, rng);
    const auto ideal = ideal_probabilities(c);
    const auto noisy = run_noisy(c, model).probabilities();
    for (std::size_t k = 0; k < ideal.size(); ++k) CHECK(noisy[k] == doctest::Approx(ideal[k]).epsilon(1e-12));
    // variants run noiselessly give the same distribution
    const auto var = run_noisy(twirl(c, rng), model).probabilities();
    for (std::size_t k = 0; k < ideal.size(); ++k) CHECK(var[k] == doctest::Approx(ideal[k]).epsilon(1e-12));
  }
}

TEST_CASE("layered circuits lower to native compiler operations") {
  std::mt19937_64 rng(44);
  const auto c = random_layered_circuit(3, 3, rng);
  const auto circ = to_compiler_circuit(c);
  int cz = 0;
  for (const auto& op : circ.ops) {
    if (op.name == "CZ") {
      ++cz;
      CHECK(op.qubits.size() == 2);
    } else {
      CHECK(op.qubits.size() == 1);
    }
  }
  CHECK(cz == 3);
  const auto dev = synthetic_device(3);
  const auto prog = compiler::compile(circ, dev.chip, dev.gates, dev.hw, compiler::Mode::optm);
  CHECK(prog.commands.size() > 0);
  CHECK_THROWS_AS(synthetic_device(5), QcvvError);
}

TEST_CASE("RC harness: noiseless circuits give near-zero TVD") {
  std::mt19937_64 rng(51);
  std::vector<LayeredCircuit> bare;
  for (int i = 0; i < 3; ++i) bare.push_back(random_layered_circuit(2, 3, rng));
  RCSettings s;
  s.variants = 5;
  s.shots = 20000;
  const auto r = rc_harness(bare, n_qubits(2, 0), s);
  REQUIRE(r.circuits.size() == 3);
  for (const auto& c : r.circuits) {
    CHECK(c.bare < 0.03);
    CHECK(c.rc < 0.03);
    CHECK(c.variants == 5);
  }
  CHECK(r.times.seqgen > 0);
  CHECK(r.times.run > 0);
  CHECK(tvd_csv(r).rfind("circuit,", 0) == 0);
  CHECK(timing_csv(r).find("Transpile") != std::string::npos);
  CHECK(to_json(r).find("p_value") != std::string::npos);
}

TEST_CASE("RC harness: twirling suppresses coherent error") {
  std::mt19937_64 rng(52);
  std::vector<LayeredCircuit> bare;
  for (int i = 0; i < 30; ++i) bare.push_back(random_layered_circuit(3, 5, rng));
  RCSettings s;
  s.hardware_path = false;
  const auto r = rc_harness(bare, n_qubits(3, 0.05), s);
  MESSAGE("bare " << r.bare_mean << " rc " << r.rc_mean << " p " << r.p_value);
  CHECK(r.rc_mean < r.bare_mean);
  CHECK(r.p_value < 0.01);
  // reproducible from the seed
  CHECK(tvd_csv(rc_harness(bare, n_qubits(3, 0.05), s)) == tvd_csv(r));
}

TEST_CASE("paired t-test") {
  std::vector<double> a{1, 2, 3, 4, 5}, b{0.5, 1.7, 2.4, 3.9, 4.1};
  double t = 0;
  const double p = paired_t_pvalue(a, b, &t);
  // d = .5 .3 .6 .1 .9, mean .48, sd = .30332
  CHECK(t == doctest::Approx(0.48 / (0.3033150177620621 / std::sqrt(5.0))));
  CHECK(p == doctest::Approx(0.0159).epsilon(0.02));
  CHECK(paired_t_pvalue(b, a) == doctest::Approx(1 - p));
  CHECK_THROWS_AS(paired_t_pvalue(std::vector<double>{1}, std::vector<double>{1}), QcvvError);
}

TEST_CASE("mock model JSON") {
  auto model = n_qubits(2, 0.01, 0.002);
  model.qubits[0].T1 = 50e-6;
  model.qubits[0].T2 = 70e-6;
  model.qubits[1].eps01 = 0.02;
  model.two_qubit_depolarizing = 0.01;
  const auto back = load_mock_model(to_json(model));
  CHECK(back == model);
  CHECK(back.index_of("Q1") == 1);
  CHECK(back.index_of("Q7") == -1);

  CHECK_THROWS_AS(load_mock_model(R"({"version":1,"qubits":[{"name":"Q0","mu0":[1,0],"mu1":[-1,0],"sigma_r":0.1,"T1":1e-6,"T2":3e-6}]})"),
                  cfg::ConfigError);
  CHECK_THROWS_AS(load_mock_model(R"({"version":1,"qubits":[{"name":"Q0","mu0":[1,0],"mu1":[-1,0],"sigma_r":0.1,"eps01":1.5}]})"),
                  cfg::ConfigError);
  CHECK_THROWS_AS(load_mock_model("{"), cfg::ConfigError);
  CHECK(load_mock_model_file(std::string(QUBIC_SOURCE_DIR) + "/configs/mock_model.json").qubits.size() >= 3);
}
