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

#include <algorithm>
#include <numeric>
#include <numbers>
#include <set>

#include "qubic/qcvv.hpp"

namespace qubic::qcvv {

namespace {

constexpr int kMaxIterations = 100;
constexpr double kTolerance = 1e-8;

Eigen::Vector2d vec(cplx z) { return {z.real(), z.imag()}; }

double log_gauss(const Eigen::Vector2d& x, const Eigen::Vector2d& mu, const Eigen::Matrix2d& cov) {
  const Eigen::Vector2d d = x - mu;
  const double det = cov.determinant();
  return -0.5 * d.dot(cov.inverse() * d) - std::log(2 * std::numbers::pi) - 0.5 * std::log(det);
}

Eigen::Matrix2d regularized(Eigen::Matrix2d c) {
  const double tr = c.trace();
  c += (tr > 0 ? 1e-6 * tr : 1e-12) * Eigen::Matrix2d::Identity();
  return c;
}

double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

std::vector<double> Gmm::posterior(cplx iq) const {
  const std::size_t k = means.size();
  std::vector<double> l(k);
  for (std::size_t c = 0; c < k; ++c) l[c] = std::log(weights[c]) + log_gauss(vec(iq), means[c], covariances[c]);
  const double z = log_sum_exp(l);
  for (auto& x : l) x = std::exp(x - z);
  return l;
}

int Gmm::classify(cplx iq) const {
  const auto p = posterior(iq);
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

Gmm gmm_fit(std::span<const cplx> shots, int k, std::uint64_t seed, std::span<const cplx> ground_calibration) {
  if (k < 1) throw QcvvError("gmm_fit needs k >= 1");
  const std::size_t n = shots.size();
  if (n < static_cast<std::size_t>(2 * k)) throw QcvvError("gmm_fit needs at least 2k shots");
  std::vector<Eigen::Vector2d> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = vec(shots[i]);

  // k-means++ seeding, then Lloyd iterations
  std::mt19937_64 rng(seed);
  std::vector<Eigen::Vector2d> mu;
  mu.push_back(x[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
  while (static_cast<int>(mu.size()) < k) {
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& m : mu) best = std::min(best, (x[i] - m).squaredNorm());
      d2[i] = best;
    }
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    if (total == 0) {
      mu.push_back(mu.back());
      continue;
    }
    std::discrete_distribution<std::size_t> pick(d2.begin(), d2.end());
    mu.push_back(x[pick(rng)]);
  }
  std::vector<int> label(n, 0);
  for (int it = 0; it < kMaxIterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      for (int c = 1; c < k; ++c)
        if ((x[i] - mu[c]).squaredNorm() < (x[i] - mu[best]).squaredNorm()) best = c;
      changed = changed || best != label[i];
      label[i] = best;
    }
    std::vector<Eigen::Vector2d> sum(k, Eigen::Vector2d::Zero());
    std::vector<int> cnt(k, 0);
    for (std::size_t i = 0; i < n; ++i) sum[label[i]] += x[i], ++cnt[label[i]];
    for (int c = 0; c < k; ++c)
      if (cnt[c] > 0) mu[c] = sum[c] / cnt[c];
    if (!changed && it > 0) break;
  }

  Gmm g;
  g.means = mu;
  g.covariances.assign(k, Eigen::Matrix2d::Zero());
  g.weights.assign(k, 0);
  {
    std::vector<int> cnt(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::Vector2d d = x[i] - mu[label[i]];
      g.covariances[label[i]] += d * d.transpose();
      ++cnt[label[i]];
    }
    Eigen::Matrix2d pooled = Eigen::Matrix2d::Zero();
    for (int c = 0; c < k; ++c) pooled += g.covariances[c];
    pooled /= static_cast<double>(n);
    for (int c = 0; c < k; ++c) {
      g.covariances[c] = regularized(cnt[c] > 1 ? Eigen::Matrix2d(g.covariances[c] / cnt[c]) : pooled);
      g.weights[c] = std::max(cnt[c], 1) / static_cast<double>(n);
    }
  }

  // EM
  std::vector<std::vector<double>> resp(n, std::vector<double>(k));
  double prev = -std::numeric_limits<double>::infinity();
  std::vector<double> l(k);
  for (g.iterations = 1; g.iterations <= kMaxIterations; ++g.iterations) {
    double ll = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (int c = 0; c < k; ++c) l[c] = std::log(g.weights[c]) + log_gauss(x[i], g.means[c], g.covariances[c]);
      const double z = log_sum_exp(l);
      ll += z;
      for (int c = 0; c < k; ++c) resp[i][c] = std::exp(l[c] - z);
    }
    g.log_likelihood = ll;
    if (std::abs(ll - prev) < kTolerance * static_cast<double>(n)) {
      g.converged = true;
      break;
    }
    prev = ll;
    for (int c = 0; c < k; ++c) {
      double nk = 0;
      Eigen::Vector2d m = Eigen::Vector2d::Zero();
      for (std::size_t i = 0; i < n; ++i) nk += resp[i][c], m += resp[i][c] * x[i];
      if (nk <= 1e-12) continue;  // empty component keeps its parameters
      m /= nk;
      Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
      for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector2d d = x[i] - m;
        cov += resp[i][c] * d * d.transpose();
      }
      g.means[c] = m;
      g.covariances[c] = regularized(cov / nk);
      g.weights[c] = nk / static_cast<double>(n);
    }
  }
  g.iterations = std::min(g.iterations, kMaxIterations);

  // collapse onto one Gaussian when BIC prefers it over k components
  if (k > 1) {
    Eigen::Vector2d m = Eigen::Vector2d::Zero();
    for (const auto& xi : x) m += xi;
    m /= static_cast<double>(n);
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const auto& xi : x) cov += (xi - m) * (xi - m).transpose();
    cov = regularized(cov / static_cast<double>(n));
    double ll1 = 0;
    for (const auto& xi : x) ll1 += log_gauss(xi, m, cov);
    const double ln = std::log(static_cast<double>(n));
    const double bic1 = -2 * ll1 + 5 * ln;
    const double bick = -2 * g.log_likelihood + (6 * k - 1) * ln;
    if (bic1 <= bick) {
      g.means.assign(k, m);
      g.covariances.assign(k, cov);
      g.weights.assign(k, 1.0 / k);
      g.log_likelihood = ll1;
      g.collapsed = true;
    }
  }

  if (!ground_calibration.empty() && k > 1) {
    std::vector<int> votes(k, 0);
    for (auto z : ground_calibration) ++votes[g.classify(z)];
    const int ground = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    std::swap(g.means[0], g.means[ground]);
    std::swap(g.covariances[0], g.covariances[ground]);
    std::swap(g.weights[0], g.weights[ground]);
  }
  return g;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return Eigen::kroneckerProduct(a, b).eval();
}

Eigen::MatrixXd confusion_matrix(const MockQubit& q) {
  Eigen::MatrixXd m(2, 2);
  m << 1 - q.eps01, q.eps10, q.eps01, 1 - q.eps10;
  return m;
}

Eigen::VectorXd readout_correct(const Eigen::VectorXd& measured, const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols() || M.rows() != measured.size())
    throw QcvvError("confusion matrix and probability vector sizes differ");
  for (Eigen::Index c = 0; c < M.cols(); ++c) {
    if (std::abs(M.col(c).sum() - 1) > 1e-9 || M.col(c).minCoeff() < 0)
      throw QcvvError("confusion matrix column " + std::to_string(c) + " is not a probability vector");
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  if (smin <= 0 || s(0) / smin > 1e6)
    throw QcvvError("confusion matrix is singular or ill-conditioned (condition number " +
                    (smin > 0 ? std::to_string(s(0) / smin) : std::string("inf")) + ")");
  Eigen::VectorXd p = M.partialPivLu().solve(measured);
  p = p.cwiseMax(0.0).cwiseMin(1.0);
  const double sum = p.sum();
  if (sum <= 0) throw QcvvError("corrected distribution vanished");
  return p / sum;
}

// ---------------------------------------------------------------------------

double tvd(const Distribution& p, const Distribution& ideal) {
  auto check = [](const Distribution& d, const char* which) {
    double s = 0;
    for (const auto& [k, v] : d) {
      if (v < 0 || !std::isfinite(v)) throw QcvvError(std::string(which) + " has a negative entry at " + k);
      s += v;
    }
    if (std::abs(s - 1) > 1e-9) throw QcvvError(std::string(which) + " is not normalized (sum " + std::to_string(s) + ")");
  };
  check(p, "P");
  check(ideal, "P_ideal");
  std::set<std::string> keys;
  for (const auto& kv : p) keys.insert(kv.first);
  for (const auto& kv : ideal) keys.insert(kv.first);
  double d = 0;
  for (const auto& k : keys) {
    const auto a = p.find(k), b = ideal.find(k);
    d += std::abs((a == p.end() ? 0.0 : a->second) - (b == ideal.end() ? 0.0 : b->second));
  }
  return std::clamp(0.5 * d, 0.0, 1.0);
}

Distribution to_distribution(std::span<const double> probs, int n_qubits) {
  Distribution d;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] == 0) continue;
    std::string key(static_cast<std::size_t>(n_qubits), '0');
    for (int q = 0; q < n_qubits; ++q)
      if ((i >> (n_qubits - 1 - q)) & 1) key[q] = '1';
    d[key] = probs[i];
  }
  return d;
}

Distribution counts_to_distribution(const std::map<std::string, int>& counts) {
  double total = 0;
  for (const auto& kv : counts) total += kv.second;
  Distribution d;
  if (total <= 0) return d;
  for (const auto& [k, v] : counts)
    if (v > 0) d[k] = v / total;
  return d;
}

}  // namespace qubic::qcvv
