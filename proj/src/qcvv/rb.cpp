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

#include <unsupported/Eigen/LevenbergMarquardt>

#include <json.hpp>
#include <sstream>

#include "qubic/qcvv.hpp"

namespace qubic::qcvv {

namespace {

struct DecayFunctor : Eigen::DenseFunctor<double> {
  std::span<const double> m, y, sigma;

  DecayFunctor(std::span<const double> m_, std::span<const double> y_, std::span<const double> s_)
      : Eigen::DenseFunctor<double>(2, static_cast<int>(m_.size())), m(m_), y(y_), sigma(s_) {}

  double weight(std::size_t i) const { return sigma.empty() ? 1.0 : 1.0 / sigma[i]; }

  int operator()(const InputType& x, ValueType& f) const {
    for (std::size_t i = 0; i < m.size(); ++i)
      f(static_cast<Eigen::Index>(i)) = (x(0) * std::pow(x(1), m[i]) - y[i]) * weight(i);
    return 0;
  }

  int df(const InputType& x, JacobianType& j) const {
    for (std::size_t i = 0; i < m.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      j(r, 0) = std::pow(x(1), m[i]) * weight(i);
      j(r, 1) = x(0) * m[i] * std::pow(x(1), m[i] - 1) * weight(i);
    }
    return 0;
  }
};

/// Density matrix after a layer of Cliffords with the model's noise.
void noisy_clifford(DensityMatrix& rho, int clifford, int q, const MockQubit& mq) {
  const auto& G = CliffordGroup::instance();
  rho.apply_1q(G.unitary(clifford), q);
  if (mq.delta != 0) rho.apply_1q(rotation(mq.delta, 1, 0, 0), q);
  rho.depolarize_1q(mq.p_dep, q);
}

double read_zero_probability(const std::vector<double>& probs, const MockModel& model,
                             std::span<const int> qubits) {
  // probability that every qubit reads 0 after readout bit flips
  const int n = static_cast<int>(qubits.size());
  double s = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    double p = probs[i];
    for (int k = 0; k < n; ++k) {
      const auto& mq = model.qubits[qubits[k]];
      const bool one = (i >> (n - 1 - k)) & 1;
      p *= one ? mq.eps10 : 1 - mq.eps01;
    }
    s += p;
  }
  return std::clamp(s, 0.0, 1.0);
}

RBResult finish(int d, std::vector<RBPoint> pts) {
  RBResult r;
  r.dimension = d;
  r.points = std::move(pts);
  std::vector<double> m, y, s;
  bool weighted = true;
  for (const auto& p : r.points) {
    m.push_back(p.length);
    y.push_back(p.polarization);
    s.push_back(p.polarization_err);
    weighted = weighted && p.polarization_err > 0;
  }
  r.fit = fit_exponential(m, y, weighted ? std::span<const double>(s) : std::span<const double>());
  return r;
}

template <class Layer>
RBResult run_rb(const MockModel& model, std::vector<int> qubits, const RBSettings& s, Layer layer) {
  model.validate();
  for (int q : qubits)
    if (q < 0 || q >= static_cast<int>(model.qubits.size())) throw QcvvError("RB qubit index out of range");
  const int nq = static_cast<int>(qubits.size());
  const int d = 1 << nq;
  const auto& G = CliffordGroup::instance();
  std::vector<RBPoint> pts;
  for (std::size_t li = 0; li < s.lengths.size(); ++li) {
    const int m = s.lengths[li];
    if (m < 0) throw QcvvError("negative RB length");
    std::vector<double> surv;
    for (int seq = 0; seq < s.sequences; ++seq) {
      std::mt19937_64 rng(derive_seed(s.seed, li * 1000003ull + static_cast<std::uint64_t>(seq)));
      std::uniform_int_distribution<int> pick(0, CliffordGroup::size() - 1);
      DensityMatrix rho(nq);
      std::vector<int> net(nq, 0);
      for (int k = 0; k <= m; ++k) {
        std::vector<int> c(nq);
        for (int j = 0; j < nq; ++j) {
          c[j] = k < m ? pick(rng) : G.inverse(net[j]);
          net[j] = G.compose(c[j], net[j]);
        }
        layer(rho, c);
      }
      const double p0 = read_zero_probability(rho.probabilities(), model, qubits);
      std::binomial_distribution<int> draw(s.shots, p0);
      surv.push_back(s.shots > 0 ? static_cast<double>(draw(rng)) / s.shots : p0);
    }
    RBPoint pt;
    pt.length = m;
    const double n = static_cast<double>(surv.size());
    for (double v : surv) pt.survival += v / n;
    double var = 0;
    for (double v : surv) var += (v - pt.survival) * (v - pt.survival);
    pt.stderr_ = surv.size() > 1 ? std::sqrt(var / (n - 1) / n) : 0;
    pt.polarization = (d * pt.survival - 1) / (d - 1);
    pt.polarization_err = d * pt.stderr_ / (d - 1);
    pts.push_back(pt);
  }
  return finish(d, std::move(pts));
}

}  // namespace

ExpFit fit_exponential(std::span<const double> m, std::span<const double> y, std::span<const double> sigma) {
  if (m.size() != y.size() || m.size() < 2) throw QcvvError("exponential fit needs two or more matching points");
  if (!sigma.empty() && sigma.size() != m.size()) throw QcvvError("sigma size mismatch");

  // start: p from a log-linear regression, A from the shortest length
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (y[i] <= 0) continue;
    const double ly = std::log(y[i]);
    sx += m[i], sy += ly, sxx += m[i] * m[i], sxy += m[i] * ly;
    ++n;
  }
  double p0 = 0.99;
  if (n >= 2 && n * sxx - sx * sx > 0) p0 = std::exp((n * sxy - sx * sy) / (n * sxx - sx * sx));
  p0 = std::clamp(p0, 1e-6, 1.0);
  const std::size_t first = static_cast<std::size_t>(std::min_element(m.begin(), m.end()) - m.begin());
  Eigen::VectorXd x(2);
  x << y[first] / std::pow(p0, m[first]), p0;

  DecayFunctor f(m, y, sigma);
  Eigen::LevenbergMarquardt<DecayFunctor> lm(f);
  lm.setXtol(1e-14);
  lm.setFtol(1e-14);
  lm.setMaxfev(2000);
  const auto status = lm.minimize(x);

  ExpFit r;
  r.A = x(0);
  r.p = std::clamp(x(1), 0.0, 1.0);
  r.iterations = static_cast<int>(lm.iterations());
  using S = Eigen::LevenbergMarquardtSpace::Status;
  r.converged = status != S::ImproperInputParameters && status != S::TooManyFunctionEvaluation &&
                status != S::UserAsked && status != S::NotStarted && status != S::Running;

  Eigen::VectorXd fv(static_cast<Eigen::Index>(m.size()));
  f(x, fv);
  r.chi2 = fv.squaredNorm();
  for (std::size_t i = 0; i < m.size(); ++i) r.residuals.push_back(y[i] - x(0) * std::pow(x(1), m[i]));
  Eigen::MatrixXd J(static_cast<Eigen::Index>(m.size()), 2);
  f.df(x, J);
  const Eigen::Matrix2d JtJ = J.transpose() * J;
  Eigen::Matrix2d cov = JtJ.fullPivLu().isInvertible() ? Eigen::Matrix2d(JtJ.inverse()) : Eigen::Matrix2d::Zero();
  if (sigma.empty() && m.size() > 2) cov *= r.chi2 / static_cast<double>(m.size() - 2);
  r.covariance = cov;
  return r;
}

double RBResult::error_per_clifford() const {
  return (1 - fit.p) * (dimension - 1) / static_cast<double>(dimension);
}

double RBResult::process_fidelity() const {
  return 1 - error_per_clifford() * dimension / static_cast<double>(dimension - 1);
}

double p_dep_for_fidelity(double F, int d) { return (1 - F) * d / static_cast<double>(d - 1); }

RBResult rb_experiment(const MockModel& model, int qubit, const RBSettings& s) {
  return run_rb(model, {qubit}, s, [&](DensityMatrix& rho, const std::vector<int>& c) {
    noisy_clifford(rho, c[0], 0, model.qubits[qubit]);
  });
}

RBResult rb_two_qubit(const MockModel& model, int a, int b, const RBSettings& s) {
  return run_rb(model, {a, b}, s, [&](DensityMatrix& rho, const std::vector<int>& c) {
    noisy_clifford(rho, c[0], 0, model.qubits[a]);
    noisy_clifford(rho, c[1], 1, model.qubits[b]);
    rho.depolarize_all(model.two_qubit_depolarizing);
  });
}

std::string to_json(const RBResult& r) {
  nlohmann::json j;
  j["dimension"] = r.dimension;
  j["points"] = nlohmann::json::array();
  for (const auto& p : r.points)
    j["points"].push_back({{"length", p.length},
                           {"survival", p.survival},
                           {"stderr", p.stderr_},
                           {"polarization", p.polarization},
                           {"polarization_err", p.polarization_err}});
  j["fit"] = {{"model", "y = A * p^m, y = (d*S - 1)/(d - 1)"},
              {"A", r.fit.A},
              {"p", r.fit.p},
              {"sigma_A", std::sqrt(r.fit.covariance(0, 0))},
              {"sigma_p", r.fit.sigma_p()},
              {"covariance", {{r.fit.covariance(0, 0), r.fit.covariance(0, 1)},
                              {r.fit.covariance(1, 0), r.fit.covariance(1, 1)}}},
              {"chi2", r.fit.chi2},
              {"residuals", r.fit.residuals},
              {"converged", r.fit.converged}};
  j["error_per_clifford"] = {{"formula", "r = (1 - p)(d - 1)/d"}, {"value", r.error_per_clifford()}};
  j["average_fidelity"] = {{"formula", "F_avg = 1 - r"}, {"value", r.average_fidelity()}};
  j["process_fidelity"] = {{"formula", "F_pro = (d F_avg - 1)/(d - 1) = 1 - r d/(d - 1)"},
                           {"value", r.process_fidelity()}};
  return j.dump(2);
}

std::string to_csv(const RBResult& r) {
  std::ostringstream os;
  os.precision(10);
  os << "length,survival,stderr,polarization,polarization_err,fit\n";
  for (const auto& p : r.points)
    os << p.length << ',' << p.survival << ',' << p.stderr_ << ',' << p.polarization << ',' << p.polarization_err
       << ',' << r.fit.A * std::pow(r.fit.p, p.length) << '\n';
  return os.str();
}

}  // namespace qubic::qcvv
