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

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qubic/compiler.hpp"

namespace qubic::qcvv {

using cplx = std::complex<double>;

class QcvvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A randomized-compiling variant failed its equivalence check.
class VerificationError : public QcvvError {
 public:
  using QcvvError::QcvvError;
};

/// Derives an independent 64-bit seed for stream `k` of a parent seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k);

// ---------------------------------------------------------------------------
// Single-qubit Clifford group

/// The 24 single-qubit Cliffords modulo global phase. Index 0 is the
/// identity; compose(a, b) is "b then a".
class CliffordGroup {
 public:
  static const CliffordGroup& instance();

  static constexpr int size() { return 24; }
  const Eigen::Matrix2cd& unitary(int k) const { return unitaries_[k]; }
  int compose(int a, int b) const { return table_[a][b]; }
  int inverse(int k) const { return inverse_[k]; }
  /// Index of a unitary equal to u up to phase, or -1.
  int find(const Eigen::Matrix2cd& u) const;
  /// Native gate names ("X90", "Y90", "X180", "Y180", "Z90", "Z-90",
  /// "Z180") whose product in time order equals unitary(k).
  const std::vector<std::string>& native(int k) const { return native_[k]; }

  int pauli_i() const { return 0; }
  int pauli_x() const { return pauli_[1]; }
  int pauli_y() const { return pauli_[2]; }
  int pauli_z() const { return pauli_[3]; }
  /// Pauli index (0 I, 1 X, 2 Y, 3 Z) to Clifford index.
  int pauli(int p) const { return pauli_[p]; }

 private:
  CliffordGroup();
  std::vector<Eigen::Matrix2cd> unitaries_;
  std::array<std::array<int, 24>, 24> table_{};
  std::array<int, 24> inverse_{};
  std::array<int, 4> pauli_{};
  std::vector<std::vector<std::string>> native_;
};

/// Native single-qubit gate unitary by name (see CliffordGroup::native).
Eigen::Matrix2cd native_unitary(std::string_view name);

Eigen::Matrix2cd rotation(double theta, double nx, double ny, double nz);
/// Equal up to a global phase within tol (max-abs entry difference).
bool equal_up_to_phase(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b, double tol);

// ---------------------------------------------------------------------------
// Density-matrix state

/// n-qubit density matrix; qubit 0 is the most significant bit.
class DensityMatrix {
 public:
  explicit DensityMatrix(int n_qubits);

  int n_qubits() const { return n_; }
  const Eigen::MatrixXcd& rho() const { return rho_; }

  void apply(const Eigen::MatrixXcd& u);  // full-space unitary
  void apply_1q(const Eigen::Matrix2cd& u, int q);
  void apply_cz(int a, int b);
  /// rho -> (1-p) rho + p (I/2 on qubit q) (x) Tr_q rho
  void depolarize_1q(double p, int q);
  /// rho -> (1-p) rho + p (I/4 on qubits a, b) (x) Tr_ab rho
  void depolarize_2q(double p, int a, int b);
  /// rho -> (1-p) rho + p I/2^n
  void depolarize_all(double p);
  /// Amplitude damping and dephasing of qubit q over an idle time t.
  void relax(int q, double t, double T1, double T2);

  std::vector<double> probabilities() const;

 private:
  Eigen::MatrixXcd embed_1q(const Eigen::Matrix2cd& u, int q) const;
  int n_;
  Eigen::MatrixXcd rho_;
};

// ---------------------------------------------------------------------------
// Mock qubit model

struct MockQubit {
  std::string name;
  double drive_freq = 5e9;
  double rabi_rate_per_unit_amp = 20e6;  // Hz at amp 1
  double T1 = std::numeric_limits<double>::infinity();
  double T2 = std::numeric_limits<double>::infinity();
  cplx mu0{1, 0}, mu1{-1, 0};
  double sigma_r = 0.1;
  double eps01 = 0;  // P(read 1 | state 0)
  double eps10 = 0;  // P(read 0 | state 1)
  double p_dep = 0;  // depolarizing probability per Clifford
  double delta = 0;  // coherent over-rotation, rad

  bool operator==(const MockQubit&) const = default;
};

struct MockModel {
  std::vector<MockQubit> qubits;
  double two_qubit_depolarizing = 0;

  bool operator==(const MockModel&) const = default;
  void validate() const;
  int index_of(std::string_view name) const;  // -1 if absent
};

MockModel load_mock_model(std::string_view json_text);
MockModel load_mock_model_file(const std::string& path);
std::string to_json(const MockModel& m);

/// One drive pulse in the frame of the qubit's drive frequency.
struct DrivePulse {
  int qubit = 0;
  double amp = 0;
  double duration = 0;  // s
  double fcarrier = 0;  // Hz
  double phase = 0;     // rad
  std::vector<cplx> envelope;  // empty = square; else unit-peak samples over duration
};

/// Rotation applied by a pulse: generalized Rabi about the tilted axis.
Eigen::Matrix2cd pulse_unitary(const DrivePulse& p, const MockQubit& q);

/// Single-shot readout of every qubit: ideal bit draw, bit flips, then
/// the Gaussian IQ cloud of the read state.
struct Shot {
  std::vector<int> bits;  // after bit flips
  std::vector<cplx> iq;
};

std::vector<Shot> sample_shots(const DensityMatrix& state, const MockModel& model, int shots,
                               std::mt19937_64& rng);

/// Pulse-level mock response: applies the pulses in order (relaxing for
/// their duration) and samples shots.
std::vector<Shot> mock_response(std::span<const DrivePulse> pulses, const MockModel& model, int shots,
                                std::uint64_t seed);

// ---------------------------------------------------------------------------
// Rabi and chevron

/// Closed-form excited population for a square pulse from |0>.
double rabi_p1(double amp, double duration, double detuning, double rabi_rate);

struct SweepPoint {
  double amp = 0, duration = 0, detuning = 0;
  int shots = 0;
  int ones = 0;
  double expected = 0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  double chi2 = 0;
  int dof = 0;
  double p_value = 1;  // upper tail of chi-square
};

SweepResult rabi_amplitude_sweep(const MockModel& model, int qubit, std::span<const double> amps,
                                 double duration, int shots, std::uint64_t seed);
SweepResult chevron_sweep(const MockModel& model, int qubit, std::span<const double> detunings,
                          std::span<const double> durations, double amp, int shots, std::uint64_t seed);
std::string to_csv(const SweepResult& r);

// ---------------------------------------------------------------------------
// Gaussian mixture discrimination

struct Gmm {
  std::vector<Eigen::Vector2d> means;
  std::vector<Eigen::Matrix2d> covariances;
  std::vector<double> weights;
  int iterations = 0;
  double log_likelihood = 0;
  bool converged = false;
  bool collapsed = false;  // BIC preferred a single Gaussian; components coincide

  int classify(cplx iq) const;
  std::vector<double> posterior(cplx iq) const;
};

/// EM with k-means initialization (100-iteration cap, 1e-8 log-likelihood
/// tolerance). If BIC favours a single Gaussian, every component is set to
/// that fit with equal weight. With a ground calibration set, component 0 is relabelled to
/// the cluster most of those shots fall into.
Gmm gmm_fit(std::span<const cplx> shots, int k = 2, std::uint64_t seed = 1,
            std::span<const cplx> ground_calibration = {});

// ---------------------------------------------------------------------------
// Readout correction

/// M(i, j) = P(read i | prepared j); columns sum to one.
Eigen::VectorXd readout_correct(const Eigen::VectorXd& measured, const Eigen::MatrixXd& confusion);
Eigen::MatrixXd confusion_matrix(const MockQubit& q);
Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// ---------------------------------------------------------------------------
// Total variation distance

using Distribution = std::map<std::string, double>;

double tvd(const Distribution& p, const Distribution& ideal);
Distribution to_distribution(std::span<const double> probs, int n_qubits);
Distribution counts_to_distribution(const std::map<std::string, int>& counts);

// ---------------------------------------------------------------------------
// Randomized benchmarking

struct ExpFit {
  double A = 0, p = 0;
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
  std::vector<double> residuals;
  double chi2 = 0;
  bool converged = false;
  int iterations = 0;

  double sigma_p() const { return std::sqrt(covariance(1, 1)); }
};

/// Weighted least squares fit of y = A p^m. sigma may be empty (unit weights).
ExpFit fit_exponential(std::span<const double> m, std::span<const double> y, std::span<const double> sigma = {});

struct RBPoint {
  int length = 0;
  double survival = 0;   // mean over sequences
  double stderr_ = 0;
  double polarization = 0;  // (d S - 1)/(d - 1)
  double polarization_err = 0;
};

struct RBResult {
  int dimension = 2;
  std::vector<RBPoint> points;
  ExpFit fit;

  double error_per_clifford() const;  // r = (1 - p)(d - 1)/d
  double average_fidelity() const { return 1 - error_per_clifford(); }
  double process_fidelity() const;    // 1 - r d/(d - 1)
};

struct RBSettings {
  std::vector<int> lengths{2, 4, 8, 16, 32, 64, 128, 256};
  int sequences = 20;
  int shots = 500;
  std::uint64_t seed = 1;
};

/// Single-qubit RB on qubit `qubit` of the mock model.
RBResult rb_experiment(const MockModel& model, int qubit, const RBSettings& s);
/// Simultaneous single-qubit Cliffords on qubits (a, b) with the model's
/// two-qubit depolarizing channel after each layer; survival of |00>.
RBResult rb_two_qubit(const MockModel& model, int a, int b, const RBSettings& s);

/// Depolarizing probability per Clifford giving the average fidelity F.
double p_dep_for_fidelity(double F, int d = 2);

std::string to_json(const RBResult& r);
std::string to_csv(const RBResult& r);

// ---------------------------------------------------------------------------
// Randomized compiling

/// Layered circuit: easy[k] is a Clifford index per qubit; a hard cycle of
/// CZ pairs follows every easy layer but the last.
struct LayeredCircuit {
  int n_qubits = 2;
  std::vector<std::vector<int>> easy;
  std::vector<std::vector<std::pair<int, int>>> hard;

  int depth() const { return static_cast<int>(hard.size()); }
  bool operator==(const LayeredCircuit&) const = default;
};

LayeredCircuit random_layered_circuit(int n_qubits, int depth, std::mt19937_64& rng);
/// Pauli-twirled equivalent: random Paulis before each hard cycle, their
/// images after it, merged into the neighbouring easy layers.
LayeredCircuit twirl(const LayeredCircuit& bare, std::mt19937_64& rng);
Eigen::MatrixXcd circuit_unitary(const LayeredCircuit& c);
/// Noisy evolution: per-qubit over-rotation R_x(delta) after each hard
/// cycle, per-qubit depolarizing after each easy gate, two-qubit
/// depolarizing on each CZ pair.
DensityMatrix run_noisy(const LayeredCircuit& c, const MockModel& model);
std::vector<double> ideal_probabilities(const LayeredCircuit& c);

/// Compiler-level circuit of native gates for qubits "Q0".."Q{n-1}".
compiler::Circuit to_compiler_circuit(const LayeredCircuit& c);
/// Chip, gate and hardware configuration for the synthetic n-qubit
/// device used by the harness.
struct SyntheticDevice {
  cfg::ChipConfig chip;
  cfg::GatePulseSpec gates;
  cfg::HardwareConfig hw;
};
SyntheticDevice synthetic_device(int n_qubits);

struct StageTimes {
  double compile = 0, transpile = 0, transfer = 0, seqgen = 0, run = 0, acquire = 0, process = 0;
  double total() const { return compile + transpile + transfer + seqgen + run + acquire + process; }
  StageTimes& operator+=(const StageTimes& o);
};

struct CircuitTVD {
  double bare = 0;
  double rc = 0;
  int variants = 0;
};

struct TVDReport {
  std::vector<CircuitTVD> circuits;
  double bare_mean = 0, bare_std = 0, rc_mean = 0, rc_std = 0;
  double t_statistic = 0, p_value = 1;  // one-sided paired, bare > rc
  StageTimes times;
};

struct RCSettings {
  int variants = 20;
  int shots = 2000;  // bare shots; variants share the same budget
  std::uint64_t seed = 1;
  bool hardware_path = true;  // compile, upload and play each variant on the emulator
};

TVDReport rc_harness(std::span<const LayeredCircuit> bare, const MockModel& model, const RCSettings& s);

std::string to_json(const TVDReport& r);
std::string tvd_csv(const TVDReport& r);
std::string timing_csv(const TVDReport& r);

/// Student-t upper tail for the one-sided paired test.
double paired_t_pvalue(std::span<const double> a, std::span<const double> b, double* t = nullptr);
/// Chi-square upper tail.
double chi2_sf(double x, int dof);

}  // namespace qubic::qcvv
