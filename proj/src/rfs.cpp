#include "sensefuse/rfs.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sensefuse {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

void symmetrize(Eigen::MatrixXd& m) {
  m = 0.5 * (m + m.transpose()).eval();
}

double Gaussian::log_density(const Eigen::VectorXd& x) const {
  if (x.size() != mean.size()) {
    throw std::invalid_argument("Gaussian::log_density: dimension mismatch");
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  if (ldlt.info() != Eigen::Success) {
    throw std::runtime_error("Gaussian::log_density: covariance not factorizable");
  }
  const Eigen::VectorXd r = x - mean;
  const double quad = r.dot(ldlt.solve(r));
  const double logdet = ldlt.vectorD().array().log().sum();
  return -0.5 * (quad + logdet + dim() * kLog2Pi);
}

double Gaussian::density(const Eigen::VectorXd& x) const {
  return std::exp(log_density(x));
}

const ModelHypothesis& Bernoulli::best_hypothesis() const {
  if (hypotheses.empty()) {
    throw std::runtime_error("Bernoulli has no hypotheses");
  }
  const ModelHypothesis* best = &hypotheses.front();
  for (const auto& h : hypotheses) {
    if (h.weight > best->weight) best = &h;
  }
  return *best;
}

const ModelHypothesis* Bernoulli::hypothesis(LandmarkKind kind) const {
  for (const auto& h : hypotheses) {
    if (h.kind == kind) return &h;
  }
  return nullptr;
}

double Bernoulli::model_weight(LandmarkKind kind) const {
  const ModelHypothesis* h = hypothesis(kind);
  return h != nullptr ? h->weight : 0.0;
}

void Bernoulli::normalize_weights() {
  double sum = 0.0;
  for (const auto& h : hypotheses) sum += h.weight;
  if (sum <= 0.0) {
    throw std::runtime_error("Bernoulli::normalize_weights: nonpositive weight sum");
  }
  for (auto& h : hypotheses) h.weight /= sum;
}

void Bernoulli::prune_hypotheses(double min_weight) {
  if (hypotheses.size() <= 1) return;
  std::vector<ModelHypothesis> kept;
  for (auto& h : hypotheses) {
    if (h.weight >= min_weight) kept.push_back(std::move(h));
  }
  if (!kept.empty()) hypotheses = std::move(kept);
  normalize_weights();
}

double PPPIntensity::total_weight() const {
  double sum = 0.0;
  for (const auto& c : components) sum += c.weight;
  return sum;
}

const Bernoulli* PMBMap::find(int id) const {
  for (const auto& b : bernoullis) {
    if (b.id == id) return &b;
  }
  return nullptr;
}

Bernoulli* PMBMap::find(int id) {
  for (auto& b : bernoullis) {
    if (b.id == id) return &b;
  }
  return nullptr;
}

std::pair<double, Gaussian> gaussian_power(const Gaussian& g, double a) {
  if (!(a > 0.0 && a <= 1.0)) {
    throw std::invalid_argument("gaussian_power: exponent must be in (0, 1]");
  }
  const int d = g.dim();
  const double logdet = Eigen::LDLT<Eigen::MatrixXd>(g.cov).vectorD().array().log().sum();
  const double log_scale =
      0.5 * d * (1.0 - a) * kLog2Pi + 0.5 * (1.0 - a) * logdet - 0.5 * d * std::log(a);
  Gaussian out{g.mean, g.cov / a};
  return {std::exp(log_scale), std::move(out)};
}

std::pair<double, Gaussian> gaussian_product(const Gaussian& g1, const Gaussian& g2) {
  if (g1.dim() != g2.dim()) {
    throw std::invalid_argument("gaussian_product: dimension mismatch");
  }
  const Eigen::MatrixXd a_inv = g1.cov.inverse();
  const Eigen::MatrixXd b_inv = g2.cov.inverse();
  Eigen::MatrixXd cov = (a_inv + b_inv).inverse();
  symmetrize(cov);
  Gaussian out{cov * (a_inv * g1.mean + b_inv * g2.mean), cov};
  const Gaussian cross{g2.mean, g1.cov + g2.cov};
  return {cross.density(g1.mean), std::move(out)};
}

Gaussian moment_match_normalized(
    const std::vector<std::pair<double, Gaussian>>& components) {
  if (components.empty()) {
    throw std::invalid_argument("moment_match: empty component list");
  }
  double wsum = 0.0;
  for (const auto& [w, g] : components) wsum += w;
  if (wsum <= 0.0) {
    throw std::invalid_argument("moment_match: nonpositive weight sum");
  }
  const int d = components.front().second.dim();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (const auto& [w, g] : components) mean += (w / wsum) * g.mean;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (const auto& [w, g] : components) {
    const Eigen::VectorXd dm = g.mean - mean;
    cov += (w / wsum) * (g.cov + dm * dm.transpose());
  }
  symmetrize(cov);
  return Gaussian{std::move(mean), std::move(cov)};
}

Gaussian mixture_moment_match(
    const std::vector<std::pair<double, Gaussian>>& components) {
  double wsum = 0.0;
  for (const auto& [w, g] : components) wsum += w;
  if (components.empty() || std::abs(wsum - 1.0) > 1e-9) {
    throw std::invalid_argument("mixture_moment_match: weights must sum to 1");
  }
  return moment_match_normalized(components);
}

}  // namespace sensefuse
