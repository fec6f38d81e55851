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

#include <unsupported/Eigen/KroneckerProduct>

#include <deque>
#include <numbers>

#include "qubic/qcvv.hpp"

namespace qubic::qcvv {

namespace {

constexpr double kPi = std::numbers::pi;
const cplx kI{0, 1};

Eigen::Matrix2cd pauli_matrix(int p) {
  Eigen::Matrix2cd m;
  switch (p) {
    case 1: m << 0, 1, 1, 0; break;
    case 2: m << 0, -kI, kI, 0; break;
    case 3: m << 1, 0, 0, -1; break;
    default: m.setIdentity();
  }
  return m;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k) {
  // splitmix64 finalizer over the pair
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  };
  return mix(seed ^ mix(k + 0x632BE59BD9B4E019ull));
}

Eigen::Matrix2cd rotation(double theta, double nx, double ny, double nz) {
  const double norm = std::sqrt(nx * nx + ny * ny + nz * nz);
  if (norm == 0) return Eigen::Matrix2cd::Identity();
  nx /= norm, ny /= norm, nz /= norm;
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  Eigen::Matrix2cd u;
  u << cplx(c, -s * nz), cplx(-s * ny, -s * nx), cplx(s * ny, -s * nx), cplx(c, s * nz);
  return u;
}

Eigen::Matrix2cd native_unitary(std::string_view name) {
  if (name == "X90") return rotation(kPi / 2, 1, 0, 0);
  if (name == "Y90") return rotation(kPi / 2, 0, 1, 0);
  if (name == "X180") return rotation(kPi, 1, 0, 0);
  if (name == "Y180") return rotation(kPi, 0, 1, 0);
  if (name == "Z90") return rotation(kPi / 2, 0, 0, 1);
  if (name == "Z-90") return rotation(-kPi / 2, 0, 0, 1);
  if (name == "Z180") return rotation(kPi, 0, 0, 1);
  throw QcvvError("unknown native gate '" + std::string(name) + "'");
}

bool equal_up_to_phase(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b, double tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  Eigen::Index r = 0, c = 0;
  a.cwiseAbs().maxCoeff(&r, &c);
  if (std::abs(a(r, c)) == 0) return b.cwiseAbs().maxCoeff() <= tol;
  cplx phase = b(r, c) / a(r, c);
  if (std::abs(phase) == 0) return false;
  phase /= std::abs(phase);
  return (b - phase * a).cwiseAbs().maxCoeff() <= tol;
}

// ---------------------------------------------------------------------------

const CliffordGroup& CliffordGroup::instance() {
  static const CliffordGroup g;
  return g;
}

CliffordGroup::CliffordGroup() {
  static const char* kGen[] = {"X90", "Y90", "X180", "Y180", "Z90", "Z-90", "Z180"};
  // breadth-first closure, so each element keeps a shortest native sequence
  std::deque<int> queue;
  unitaries_.push_back(Eigen::Matrix2cd::Identity());
  native_.push_back({});
  queue.push_back(0);
  while (!queue.empty()) {
    const int k = queue.front();
    queue.pop_front();
    for (const char* g : kGen) {
      const Eigen::Matrix2cd u = native_unitary(g) * unitaries_[k];
      if (find(u) >= 0) continue;
      unitaries_.push_back(u);
      auto seq = native_[k];
      seq.emplace_back(g);
      native_.push_back(std::move(seq));
      queue.push_back(static_cast<int>(unitaries_.size()) - 1);
    }
  }
  if (unitaries_.size() != 24) throw QcvvError("Clifford closure did not give 24 elements");
  for (int a = 0; a < 24; ++a) {
    for (int b = 0; b < 24; ++b) table_[a][b] = find(unitaries_[a] * unitaries_[b]);
    inverse_[a] = find(unitaries_[a].adjoint());
  }
  for (int p = 0; p < 4; ++p) pauli_[p] = find(pauli_matrix(p));
}

int CliffordGroup::find(const Eigen::Matrix2cd& u) const {
  for (std::size_t k = 0; k < unitaries_.size(); ++k)
    if (equal_up_to_phase(unitaries_[k], u, 1e-9)) return static_cast<int>(k);
  return -1;
}

// ---------------------------------------------------------------------------

DensityMatrix::DensityMatrix(int n_qubits) : n_(n_qubits) {
  if (n_qubits < 1 || n_qubits > 10) throw QcvvError("density matrix supports 1..10 qubits");
  const Eigen::Index d = Eigen::Index{1} << n_qubits;
  rho_ = Eigen::MatrixXcd::Zero(d, d);
  rho_(0, 0) = 1;
}

Eigen::MatrixXcd DensityMatrix::embed_1q(const Eigen::Matrix2cd& u, int q) const {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
  for (int k = 0; k < n_; ++k) {
    Eigen::MatrixXcd f = k == q ? Eigen::MatrixXcd(u) : Eigen::MatrixXcd::Identity(2, 2);
    out = Eigen::kroneckerProduct(out, f).eval();
  }
  return out;
}

void DensityMatrix::apply(const Eigen::MatrixXcd& u) { rho_ = u * rho_ * u.adjoint(); }

void DensityMatrix::apply_1q(const Eigen::Matrix2cd& u, int q) { apply(embed_1q(u, q)); }

void DensityMatrix::apply_cz(int a, int b) {
  const Eigen::Index d = rho_.rows();
  auto sign = [&](Eigen::Index i) {
    const bool ba = (i >> (n_ - 1 - a)) & 1, bb = (i >> (n_ - 1 - b)) & 1;
    return ba && bb ? -1.0 : 1.0;
  };
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) rho_(i, j) *= sign(i) * sign(j);
}

void DensityMatrix::depolarize_1q(double p, int q) {
  if (p == 0) return;
  Eigen::MatrixXcd acc = (1 - 0.75 * p) * rho_;
  for (int k = 1; k < 4; ++k) {
    const auto P = embed_1q(pauli_matrix(k), q);
    acc += 0.25 * p * P * rho_ * P.adjoint();
  }
  rho_ = acc;
}

void DensityMatrix::depolarize_2q(double p, int a, int b) {
  if (p == 0) return;
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(rho_.rows(), rho_.cols());
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const Eigen::MatrixXcd P = embed_1q(pauli_matrix(i), a) * embed_1q(pauli_matrix(j), b);
      acc += P * rho_ * P.adjoint();
    }
  rho_ = (1 - p) * rho_ + (p / 16) * acc;
}

void DensityMatrix::depolarize_all(double p) {
  if (p == 0) return;
  const auto d = static_cast<double>(rho_.rows());
  rho_ = (1 - p) * rho_ + (p / d) * Eigen::MatrixXcd::Identity(rho_.rows(), rho_.cols());
}

void DensityMatrix::relax(int q, double t, double T1, double T2) {
  if (t <= 0) return;
  const double gamma = std::isfinite(T1) ? 1 - std::exp(-t / T1) : 0.0;
  if (gamma > 0) {
    Eigen::Matrix2cd k0, k1;
    k0 << 1, 0, 0, std::sqrt(1 - gamma);
    k1 << 0, std::sqrt(gamma), 0, 0;
    const auto K0 = embed_1q(k0, q), K1 = embed_1q(k1, q);
    rho_ = K0 * rho_ * K0.adjoint() + K1 * rho_ * K1.adjoint();
  }
  // remaining pure dephasing so coherences decay as exp(-t/T2) overall
  const double rate = (std::isfinite(T2) ? 1 / T2 : 0.0) - (std::isfinite(T1) ? 0.5 / T1 : 0.0);
  if (rate > 0) {
    const double lambda = std::exp(-t * rate);
    const auto Z = embed_1q(pauli_matrix(3), q);
    rho_ = 0.5 * (1 + lambda) * rho_ + 0.5 * (1 - lambda) * Z * rho_ * Z;
  }
}

std::vector<double> DensityMatrix::probabilities() const {
  std::vector<double> p(static_cast<std::size_t>(rho_.rows()));
  double sum = 0;
  for (Eigen::Index i = 0; i < rho_.rows(); ++i) sum += p[i] = std::max(0.0, rho_(i, i).real());
  for (auto& x : p) x /= sum;
  return p;
}

}  // namespace qubic::qcvv
