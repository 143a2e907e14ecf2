#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "sensefuse/geometry.hpp"

namespace sensefuse {

/// Symmetrizes in place: P <- (P + P^T) / 2. Applied after every covariance
/// update to keep floating-point drift in check.
void symmetrize(Eigen::MatrixXd& m);

struct Gaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  int dim() const { return static_cast<int>(mean.size()); }
  double log_density(const Eigen::VectorXd& x) const;
  double density(const Eigen::VectorXd& x) const;
};

/// One landmark-model branch of a multi-model Bernoulli. The density lives
/// in the parameter space of the model: VA location, SP location, IP
/// location, or UE position for UE_TRACK.
struct ModelHypothesis {
  LandmarkKind kind{LandmarkKind::kSP};
  double weight{1.0};
  Gaussian density;
};

struct Bernoulli {
  int id{-1};
  double existence{0.0};
  std::vector<ModelHypothesis> hypotheses;
  // Landmark type determined by map fusion (used by monostatic maps, where
  // local measurements cannot distinguish VA from SP).
  std::optional<LandmarkKind> resolved_type;

  const ModelHypothesis& best_hypothesis() const;
  const ModelHypothesis* hypothesis(LandmarkKind kind) const;
  double model_weight(LandmarkKind kind) const;
  void normalize_weights();
  void prune_hypotheses(double min_weight);
};

struct PPPComponent {
  double weight{0.0};
  Gaussian density;
  int birth_slot{-1};  // >= 0 marks a persistent birth component
};

struct PPPIntensity {
  std::vector<PPPComponent> components;
  double total_weight() const;
};

struct PMBMap {
  PPPIntensity ppp;
  std::vector<Bernoulli> bernoullis;

  const Bernoulli* find(int id) const;
  Bernoulli* find(int id);
};

/// N(x;m,P)^a = scale * N(x;m,P/a) with
/// scale = (2 pi)^{d(1-a)/2} |P|^{(1-a)/2} a^{-d/2}. Requires 0 < a <= 1.
std::pair<double, Gaussian> gaussian_power(const Gaussian& g, double a);

/// N(x;a,A) N(x;b,B) = scale * N(x;m,C) with C = (A^-1 + B^-1)^-1,
/// m = C (A^-1 a + B^-1 b), scale = N(a; b, A+B).
std::pair<double, Gaussian> gaussian_product(const Gaussian& g1, const Gaussian& g2);

/// Mean and covariance of a Gaussian mixture, spread-of-means included.
/// Weights must sum to 1 within 1e-9.
Gaussian mixture_moment_match(const std::vector<std::pair<double, Gaussian>>& components);

/// Moment match with internal weight normalization (weights only need to be
/// nonnegative with a positive sum).
Gaussian moment_match_normalized(const std::vector<std::pair<double, Gaussian>>& components);

}  // namespace sensefuse
