#include "sensefuse/filters.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sensefuse/assignment.hpp"

namespace sensefuse {

namespace {

constexpr double kLogZero = -std::numeric_limits<double>::infinity();

double log_sum_exp(const std::vector<double>& terms) {
  double m = kLogZero;
  for (const double t : terms) m = std::max(m, t);
  if (m == kLogZero) return kLogZero;
  double acc = 0.0;
  for (const double t : terms) acc += std::exp(t - m);
  return m + std::log(acc);
}

Eigen::VectorXd wrap_residual(Modality modality, const Eigen::VectorXd& z,
                              const Eigen::VectorXd& zhat) {
  Eigen::VectorXd r = z - zhat;
  const int first_angle = 1;  // index 0 is the ToA in both modalities
  for (int i = first_angle; i < r.size(); ++i) r(i) = wrap_angle(r(i));
  return r;
}

// Measurement prediction of one (source, model) pair, linearized at the
// current landmark/UE means. S0 excludes the per-measurement noise R.
struct Projection {
  bool valid = false;
  Eigen::VectorXd zhat;
  Eigen::MatrixXd H_land;  // dz x 3
  Eigen::MatrixXd H_ue;    // dz x 5 (bistatic only)
  Eigen::MatrixXd S0;
};

Projection project_bistatic(LandmarkKind kind, const Gaussian& land,
                            const Gaussian& ue, const Eigen::Vector3d& bs) {
  Projection p;
  try {
    const Landmark lm{kind, land.mean};
    const UEState s = UEState::from_vector(ue.mean);
    p.zhat = h_bistatic(lm, s, bs).to_vector();
    const Eigen::Matrix<double, 5, 8> jac = jac_h_bistatic(lm, s, bs);
    p.H_land = jac.leftCols<3>();
    p.H_ue = jac.rightCols<5>();
    p.S0 = p.H_land * land.cov * p.H_land.transpose() +
           p.H_ue * ue.cov * p.H_ue.transpose();
    p.valid = true;
  } catch (const std::domain_error&) {
  }
  return p;
}

Projection project_bistatic_known_bs(const Gaussian& ue, const Eigen::Vector3d& bs) {
  Projection p;
  try {
    const Landmark lm{LandmarkKind::kBS, bs};
    const UEState s = UEState::from_vector(ue.mean);
    p.zhat = h_bistatic(lm, s, bs).to_vector();
    p.H_land = Eigen::MatrixXd::Zero(5, 3);
    p.H_ue = jac_h_bistatic(lm, s, bs).rightCols<5>();
    p.S0 = p.H_ue * ue.cov * p.H_ue.transpose();
    p.valid = true;
  } catch (const std::domain_error&) {
  }
  return p;
}

Projection project_monostatic(const Gaussian& land, const Eigen::Vector3d& bs) {
  Projection p;
  try {
    p.zhat = h_monostatic(land.mean, bs).to_vector();
    p.H_land = jac_h_monostatic(land.mean, bs);
    p.S0 = p.H_land * land.cov * p.H_land.transpose();
    p.valid = true;
  } catch (const std::domain_error&) {
  }
  return p;
}

Projection project_model(const FilterState& fs, const ModelHypothesis& hyp,
                         const Gaussian& ue) {
  if (fs.modality == Modality::kBistatic) {
    return project_bistatic(hyp.kind, hyp.density, ue, fs.bs);
  }
  return project_monostatic(hyp.density, fs.bs);
}

struct PairLikelihood {
  double maha2 = std::numeric_limits<double>::infinity();
  double log_lik = kLogZero;
};

PairLikelihood pair_likelihood(Modality modality, const Projection& p,
                               const Eigen::VectorXd& z, const Eigen::MatrixXd& R) {
  PairLikelihood out;
  if (!p.valid) return out;
  Eigen::MatrixXd S = p.S0 + R;
  symmetrize(S);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
  if (ldlt.info() != Eigen::Success) return out;
  const Eigen::VectorXd nu = wrap_residual(modality, z, p.zhat);
  out.maha2 = nu.dot(ldlt.solve(nu));
  const double logdet = ldlt.vectorD().array().log().sum();
  out.log_lik = -0.5 * (out.maha2 + logdet +
                        z.size() * 1.8378770664093454835606594728112);
  return out;
}

// EK update of the landmark density only; UE prior uncertainty (bistatic)
// and measurement noise are both folded into S.
Gaussian ek_update_landmark(const Gaussian& land, const Projection& p,
                            Modality modality, const Eigen::VectorXd& z,
                            const Eigen::MatrixXd& R) {
  Eigen::MatrixXd S = p.S0 + R;
  symmetrize(S);
  const Eigen::MatrixXd K = land.cov * p.H_land.transpose() * S.inverse();
  Gaussian out;
  out.mean = land.mean + K * wrap_residual(modality, z, p.zhat);
  out.cov = land.cov - K * S * K.transpose();
  symmetrize(out.cov);
  return out;
}

// Gauss-Newton birth branch: wide birth priors linearized once at the prior
// mean land far off the truth with overconfident covariances, so both the
// posterior density and the marginal likelihood are computed at the
// converged point (Laplace approximation).
struct BirthBranch {
  bool valid = false;
  double maha2 = std::numeric_limits<double>::infinity();
  double log_lik = kLogZero;
  Gaussian density;
};

BirthBranch birth_branch(const FilterState& fs, LandmarkKind kind,
                         const Gaussian& prior, const Eigen::VectorXd& z,
                         const Eigen::MatrixXd& R) {
  BirthBranch out;
  Gaussian point = prior;
  Projection proj;
  Eigen::MatrixXd S;
  Eigen::MatrixXd K;
  for (int iter = 0; iter < 8; ++iter) {
    const Projection p = fs.modality == Modality::kBistatic
                             ? project_bistatic(kind, point, fs.ue.density, fs.bs)
                             : project_monostatic(point, fs.bs);
    if (!p.valid) break;
    proj = p;
    S = p.H_land * prior.cov * p.H_land.transpose() + R;
    if (fs.modality == Modality::kBistatic) {
      S += p.H_ue * fs.ue.density.cov * p.H_ue.transpose();
    }
    symmetrize(S);
    K = prior.cov * p.H_land.transpose() * S.inverse();
    const Eigen::VectorXd residual = wrap_residual(fs.modality, z, p.zhat) -
                                     p.H_land * (prior.mean - point.mean);
    const Eigen::VectorXd next = prior.mean + K * residual;
    const bool converged = (next - point.mean).norm() < 1e-9 * (1.0 + next.norm());
    point.mean = next;
    if (converged) break;
  }
  if (!proj.valid) return out;

  // Marginal likelihood of z under this branch, linearized at the converged
  // point: innovation = wrap(z - h(x)) - H (m0 - x).
  Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
  if (ldlt.info() != Eigen::Success) return out;
  const Eigen::VectorXd nu = wrap_residual(fs.modality, z, proj.zhat) -
                             proj.H_land * (prior.mean - point.mean);
  out.maha2 = nu.dot(ldlt.solve(nu));
  const double logdet = ldlt.vectorD().array().log().sum();
  out.log_lik =
      -0.5 * (out.maha2 + logdet + z.size() * 1.8378770664093454835606594728112);
  point.cov = prior.cov - K * S * K.transpose();
  symmetrize(point.cov);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(point.cov);
  if (es.eigenvalues().minCoeff() <= 0.0) return out;
  out.density = std::move(point);
  out.valid = true;
  return out;
}

// Joint EK update over [landmark; UE state] for one bistatic association.
struct JointUpdate {
  Gaussian landmark;
  Gaussian ue;
};

JointUpdate ek_update_joint(const Gaussian& land, const Gaussian& ue,
                            const Projection& p, const Eigen::VectorXd& z,
                            const Eigen::MatrixXd& R) {
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(8, 8);
  P.topLeftCorner<3, 3>() = land.cov;
  P.bottomRightCorner<5, 5>() = ue.cov;
  Eigen::MatrixXd H(z.size(), 8);
  H << p.H_land, p.H_ue;
  Eigen::MatrixXd S = H * P * H.transpose() + R;
  symmetrize(S);
  const Eigen::MatrixXd K = P * H.transpose() * S.inverse();
  Eigen::VectorXd mean(8);
  mean << land.mean, ue.mean;
  mean += K * wrap_residual(Modality::kBistatic, z, p.zhat);
  Eigen::MatrixXd cov = P - K * S * K.transpose();
  symmetrize(cov);
  JointUpdate out;
  out.landmark = Gaussian{mean.head<3>(), cov.topLeftCorner<3, 3>()};
  out.ue = Gaussian{mean.tail<5>(), cov.bottomRightCorner<5, 5>()};
  out.ue.mean(3) = wrap_angle(out.ue.mean(3));
  return out;
}

Gaussian ek_update_ue_only(const Gaussian& ue, const Projection& p,
                           const Eigen::VectorXd& z, const Eigen::MatrixXd& R) {
  Eigen::MatrixXd S = p.H_ue * ue.cov * p.H_ue.transpose() + R;
  symmetrize(S);
  const Eigen::MatrixXd K = ue.cov * p.H_ue.transpose() * S.inverse();
  Gaussian out;
  out.mean = ue.mean + K * wrap_residual(Modality::kBistatic, z, p.zhat);
  out.mean(3) = wrap_angle(out.mean(3));
  out.cov = ue.cov - K * S * K.transpose();
  symmetrize(out.cov);
  return out;
}

double clutter_log_density(const FilterState& fs, const FilterParams& params) {
  return fs.modality == Modality::kBistatic ? params.clutter_log_density_bistatic
                                            : params.clutter_log_density_monostatic;
}

// Detection probability of one model hypothesis. SP paths exist only inside
// the UE field of view; everything else uses the constant.
double model_detection_prob(const FilterState& fs, const FilterParams& params,
                            LandmarkKind kind, const Eigen::VectorXd& mean) {
  if (fs.modality == Modality::kBistatic && kind == LandmarkKind::kSP &&
      params.fov_sp > 0.0) {
    const Eigen::Vector3d ue_pos = fs.ue.density.mean.head<3>();
    if ((mean.head<3>() - ue_pos).norm() > params.fov_sp) return 0.0;
  }
  return params.detection_prob;
}

std::vector<LandmarkKind> birth_models(Modality modality) {
  if (modality == Modality::kBistatic) {
    return {LandmarkKind::kVA, LandmarkKind::kSP};
  }
  return {LandmarkKind::kIP, LandmarkKind::kUETrack};
}

// One newly-detected Bernoulli built from the PPP and a single measurement.
struct BirthCandidate {
  double log_total = kLogZero;  // log of the PPP-detection mass at z
  double existence = 0.0;       // against clutter
  std::vector<ModelHypothesis> hypotheses;
};

BirthCandidate make_birth(const FilterState& fs, const FilterParams& params,
                          const Eigen::VectorXd& z, const Eigen::MatrixXd& R,
                          double gate2) {
  BirthCandidate out;
  const std::vector<LandmarkKind> models = birth_models(fs.modality);
  const double model_prior = 1.0 / static_cast<double>(models.size());
  const bool mono = fs.modality == Modality::kMonostatic;

  struct Term {
    LandmarkKind kind;
    double log_w;
    Gaussian density;
  };
  std::vector<Term> terms;
  std::vector<double> log_ws;

  for (const PPPComponent& comp : fs.map.ppp.components) {
    if (mono) {
      // IP and UE share the monostatic measurement model; one branch serves
      // both models.
      const BirthBranch branch =
          birth_branch(fs, LandmarkKind::kIP, comp.density, z, R);
      if (!branch.valid || !(branch.maha2 <= gate2)) continue;
      const double log_w = std::log(model_prior * params.detection_prob * comp.weight) +
                           branch.log_lik;
      for (const LandmarkKind kind : models) {
        terms.push_back({kind, log_w, branch.density});
        log_ws.push_back(log_w);
      }
    } else {
      for (const LandmarkKind kind : models) {
        const BirthBranch branch = birth_branch(fs, kind, comp.density, z, R);
        if (!branch.valid || !(branch.maha2 <= gate2)) continue;
        const double log_w =
            std::log(model_prior * params.detection_prob * comp.weight) + branch.log_lik;
        terms.push_back({kind, log_w, branch.density});
        log_ws.push_back(log_w);
      }
    }
  }
  if (terms.empty()) return out;
  out.log_total = log_sum_exp(log_ws);

  for (const LandmarkKind kind : birth_models(fs.modality)) {
    std::vector<std::pair<double, Gaussian>> mix;
    double wsum = 0.0;
    for (const Term& t : terms) {
      if (t.kind != kind) continue;
      const double w = std::exp(t.log_w - out.log_total);
      mix.push_back({w, t.density});
      wsum += w;
    }
    if (mix.empty()) continue;
    ModelHypothesis hyp;
    hyp.kind = kind;
    hyp.weight = wsum;
    hyp.density = moment_match_normalized(mix);
    out.hypotheses.push_back(std::move(hyp));
  }
  double total = 0.0;
  for (const auto& h : out.hypotheses) total += h.weight;
  for (auto& h : out.hypotheses) h.weight /= total;
  return out;
}

// Per-hypothesis posterior of one pre-existing Bernoulli.
struct BernoulliPosterior {
  double existence = 0.0;
  std::vector<ModelHypothesis> hypotheses;
};

BernoulliPosterior misdetection_update(const FilterState& fs, const FilterParams& params,
                                       const Bernoulli& bern) {
  BernoulliPosterior out;
  double pbar = 0.0;
  for (const auto& h : bern.hypotheses) {
    pbar += h.weight * model_detection_prob(fs, params, h.kind, h.density.mean);
  }
  const double denom = 1.0 - bern.existence * pbar;
  out.existence = denom > 0.0 ? bern.existence * (1.0 - pbar) / denom : 0.0;
  double wsum = 0.0;
  for (const auto& h : bern.hypotheses) {
    ModelHypothesis hh = h;
    hh.weight =
        h.weight * (1.0 - model_detection_prob(fs, params, h.kind, h.density.mean));
    wsum += hh.weight;
    out.hypotheses.push_back(std::move(hh));
  }
  if (wsum <= 0.0) {
    out.hypotheses = bern.hypotheses;  // pbar == 1 for every model; keep shape
  } else {
    for (auto& h : out.hypotheses) h.weight /= wsum;
  }
  return out;
}

void clamp_probability(double& p) {
  p = std::clamp(p, 0.0, 1.0);
}

}  // namespace

const char* to_string(Modality modality) {
  return modality == Modality::kBistatic ? "bistatic" : "monostatic";
}

const FilterParams& validate(const FilterParams& params) {
  if (!(params.detection_prob > 0.0 && params.detection_prob <= 1.0)) {
    throw std::invalid_argument("FilterParams: detection_prob must be in (0, 1]");
  }
  if (params.num_da < 1) {
    throw std::invalid_argument("FilterParams: num_da must be >= 1");
  }
  return params;
}

Vector5d ue_transition(const Vector5d& s, double speed, double turn_rate, double dt) {
  Vector5d out = s;
  const double heading = s(3);
  if (std::abs(turn_rate) < 1e-12) {
    out(0) += speed * dt * std::cos(heading);
    out(1) += speed * dt * std::sin(heading);
  } else {
    const double ratio = speed / turn_rate;
    out(0) += ratio * (std::sin(heading + turn_rate * dt) - std::sin(heading));
    out(1) -= ratio * (std::cos(heading + turn_rate * dt) - std::cos(heading));
  }
  out(3) = wrap_angle(heading + turn_rate * dt);
  return out;
}

Matrix5d ue_transition_jacobian(const Vector5d& s, double speed, double turn_rate,
                                double dt) {
  Matrix5d jac = Matrix5d::Identity();
  const double heading = s(3);
  if (std::abs(turn_rate) < 1e-12) {
    jac(0, 3) = -speed * dt * std::sin(heading);
    jac(1, 3) = speed * dt * std::cos(heading);
  } else {
    const double ratio = speed / turn_rate;
    jac(0, 3) = ratio * (std::cos(heading + turn_rate * dt) - std::cos(heading));
    jac(1, 3) = ratio * (std::sin(heading + turn_rate * dt) - std::sin(heading));
  }
  return jac;
}

FilterState make_bistatic_filter(const Eigen::Vector3d& bs, const UEPosterior& prior,
                                 const FilterParams& params) {
  FilterState fs;
  fs.modality = Modality::kBistatic;
  fs.bs = bs;
  fs.ue = prior;
  fs.map.ppp = params.birth;
  return fs;
}

FilterState make_monostatic_filter(const Eigen::Vector3d& bs, const FilterParams& params) {
  FilterState fs;
  fs.modality = Modality::kMonostatic;
  fs.bs = bs;
  fs.map.ppp = params.birth;
  return fs;
}

void predict(FilterState& fs, const FilterParams& params) {
  if (fs.modality == Modality::kBistatic) {
    Gaussian& ue = fs.ue.density;
    const Matrix5d F =
        ue_transition_jacobian(ue.mean, params.speed, params.turn_rate, params.dt);
    ue.mean = ue_transition(ue.mean, params.speed, params.turn_rate, params.dt);
    ue.cov = F * ue.cov * F.transpose() + params.process_noise;
    symmetrize(ue.cov);
  } else {
    for (Bernoulli& bern : fs.map.bernoullis) {
      for (ModelHypothesis& hyp : bern.hypotheses) {
        if (hyp.kind == LandmarkKind::kUETrack) {
          hyp.density.cov += params.mono_walk_noise;
          symmetrize(hyp.density.cov);
        }
      }
    }
  }
  // Landmarks are static in both maps; the PPP only receives birth mass.
  for (const PPPComponent& b : params.birth.components) {
    PPPComponent* slot = nullptr;
    for (PPPComponent& c : fs.map.ppp.components) {
      if (c.birth_slot == b.birth_slot && b.birth_slot >= 0) {
        slot = &c;
        break;
      }
    }
    if (slot != nullptr) {
      slot->weight += b.weight;
    } else {
      fs.map.ppp.components.push_back(b);
    }
  }
}

void update(FilterState& fs, const MeasurementSet& z, const FilterParams& params,
            UpdateDiagnostics* diag) {
  validate(params);
  if (z.modality != fs.modality) {
    throw std::invalid_argument("update: measurement modality mismatch");
  }
  const int dz = fs.modality == Modality::kBistatic ? 5 : 3;
  for (int j = 0; j < z.size(); ++j) {
    if (z.values[j].size() != dz || z.covariances[j].rows() != dz) {
      throw std::invalid_argument("update: wrong measurement dimension");
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(z.covariances[j]);
    if (llt.info() != Eigen::Success) {
      throw std::invalid_argument("update: measurement covariance not SPD");
    }
  }

  const boost::math::chi_squared chi2(dz);
  const double gate2 = boost::math::quantile(chi2, params.gate_prob);
  const double log_clutter = clutter_log_density(fs, params);
  const int m = z.size();
  const int n = static_cast<int>(fs.map.bernoullis.size());
  const bool bistatic = fs.modality == Modality::kBistatic;
  const int n_src = n + (bistatic ? 1 : 0);  // extra column: the known BS (LoS)

  // Projections at the predicted state, per (source, model).
  std::vector<std::vector<Projection>> proj(n);
  for (int i = 0; i < n; ++i) {
    for (const auto& hyp : fs.map.bernoullis[i].hypotheses) {
      proj[i].push_back(project_model(fs, hyp, fs.ue.density));
    }
  }
  Projection proj_bs;
  if (bistatic) proj_bs = project_bistatic_known_bs(fs.ue.density, fs.bs);

  // Birth candidates (PPP-detection vs clutter) per measurement.
  std::vector<BirthCandidate> births;
  births.reserve(m);
  for (int j = 0; j < m; ++j) {
    births.push_back(make_birth(fs, params, z.values[j], z.covariances[j], gate2));
  }

  // Cost matrix, rows = measurements, columns = [sources | birth-or-clutter].
  // The gate decides pair feasibility through the best model; posterior model
  // weights use the raw likelihoods so one gate miss cannot erase a model.
  Eigen::MatrixXd cost(std::max(m, 1), n_src + m);
  cost.setConstant(assignment::kInf);
  std::vector<std::vector<std::vector<double>>> det_loglik(
      m, std::vector<std::vector<double>>(n_src));
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) {
      const Bernoulli& bern = fs.map.bernoullis[i];
      std::vector<double> gated_terms;
      std::vector<double> raw_terms;
      double pbar = 0.0;
      for (size_t a = 0; a < bern.hypotheses.size(); ++a) {
        const auto& hyp = bern.hypotheses[a];
        const double pd = model_detection_prob(fs, params, hyp.kind, hyp.density.mean);
        pbar += hyp.weight * pd;
        const PairLikelihood lik =
            pair_likelihood(fs.modality, proj[i][a], z.values[j], z.covariances[j]);
        const double raw = pd > 0.0 && lik.log_lik > kLogZero
                               ? std::log(hyp.weight * pd) + lik.log_lik
                               : kLogZero;
        raw_terms.push_back(raw);
        gated_terms.push_back(lik.maha2 <= gate2 ? raw : kLogZero);
      }
      det_loglik[j][i] = raw_terms;
      const double l_det = std::log(bern.existence) + log_sum_exp(gated_terms);
      // Certain detection (r * pbar = 1) has zero misdetection likelihood;
      // floor it so the ratio stays finite for the solver.
      const double l_mis = std::log(std::max(1.0 - bern.existence * pbar, 1e-300));
      if (l_det > kLogZero) cost(j, i) = -(l_det - l_mis);
    }
    if (bistatic) {
      const PairLikelihood lik =
          pair_likelihood(fs.modality, proj_bs, z.values[j], z.covariances[j]);
      if (lik.maha2 <= gate2) {
        const double l_det = std::log(params.detection_prob) + lik.log_lik;
        const double l_mis = std::log(std::max(1.0 - params.detection_prob, 1e-300));
        cost(j, n) = -(l_det - l_mis);
      }
    }
    cost(j, n_src + j) = -log_sum_exp({log_clutter, births[j].log_total});
  }
  // Birth existence: PPP-detection mass against clutter, r = B / (B + c).
  for (int j = 0; j < m; ++j) {
    if (births[j].log_total == kLogZero) {
      births[j].existence = 0.0;
    } else {
      const double denom = log_sum_exp({log_clutter, births[j].log_total});
      births[j].existence = std::exp(births[j].log_total - denom);
    }
  }

  // Data association: k best global hypotheses.
  std::vector<assignment::Assignment> hyps;
  if (m == 0) {
    hyps.push_back(assignment::Assignment{{}, 0.0});
  } else {
    hyps = assignment::k_best(cost, params.num_da);
  }
  std::vector<double> hyp_w(hyps.size());
  {
    std::vector<double> neg;
    for (const auto& h : hyps) neg.push_back(-h.total_cost);
    const double denom = log_sum_exp(neg);
    for (size_t h = 0; h < hyps.size(); ++h) hyp_w[h] = std::exp(neg[h] - denom);
  }
  if (diag != nullptr) {
    diag->num_hypotheses = static_cast<int>(hyps.size());
    diag->hypothesis_weight_sum = 0.0;
    for (const double w : hyp_w) diag->hypothesis_weight_sum += w;
  }

  // Per-hypothesis posteriors.
  struct HypResult {
    Gaussian ue;
    std::vector<BernoulliPosterior> bernoullis;
    std::vector<char> birth_used;
  };
  std::vector<HypResult> results(hyps.size());

  for (size_t h = 0; h < hyps.size(); ++h) {
    HypResult& res = results[h];
    res.ue = fs.ue.density;
    res.bernoullis.resize(n);
    res.birth_used.assign(m, 0);
    std::vector<char> source_detected(n_src, 0);

    for (int j = 0; j < m; ++j) {
      const int col = hyps[h].row_to_col[j];
      if (col >= n_src) {
        res.birth_used[j] = 1;
        continue;
      }
      source_detected[col] = 1;
      if (bistatic && col == n) {
        // LoS detection: pure UE update, re-linearized at the running mean.
        const Projection p = project_bistatic_known_bs(Gaussian{res.ue.mean, res.ue.cov},
                                                       fs.bs);
        if (p.valid) {
          res.ue = ek_update_ue_only(res.ue, p, z.values[j], z.covariances[j]);
        }
        continue;
      }
      const Bernoulli& bern = fs.map.bernoullis[col];
      BernoulliPosterior& post = res.bernoullis[col];
      post.existence = 1.0;
      std::vector<std::pair<double, Gaussian>> ue_mix;
      double wsum = 0.0;
      for (size_t a = 0; a < bern.hypotheses.size(); ++a) {
        const auto& hyp = bern.hypotheses[a];
        const double log_w = det_loglik[j][col][a];
        if (log_w == kLogZero) continue;
        const double w = std::exp(log_w);
        if (bistatic) {
          const Projection p = project_bistatic(hyp.kind, hyp.density,
                                                Gaussian{res.ue.mean, res.ue.cov}, fs.bs);
          if (!p.valid) continue;
          const JointUpdate ju =
              ek_update_joint(hyp.density, res.ue, p, z.values[j], z.covariances[j]);
          post.hypotheses.push_back(ModelHypothesis{hyp.kind, w, ju.landmark});
          ue_mix.push_back({w, ju.ue});
        } else {
          post.hypotheses.push_back(ModelHypothesis{
              hyp.kind, w,
              ek_update_landmark(hyp.density, proj[col][a], fs.modality, z.values[j],
                                 z.covariances[j])});
        }
        wsum += w;
      }
      if (post.hypotheses.empty()) {
        // All models lost the pairing at the re-linearized point; fall back
        // to a misdetection-shaped posterior so the hypothesis stays usable.
        post = misdetection_update(fs, params, bern);
        continue;
      }
      for (auto& hh : post.hypotheses) hh.weight /= wsum;
      if (bistatic && !ue_mix.empty()) {
        res.ue = moment_match_normalized(ue_mix);
        res.ue.mean(3) = wrap_angle(res.ue.mean(3));
      }
    }
    for (int i = 0; i < n; ++i) {
      if (!source_detected[i]) {
        res.bernoullis[i] = misdetection_update(fs, params, fs.map.bernoullis[i]);
      }
    }
  }

  // Track-oriented merge back to one PMB.
  PMBMap merged;
  merged.ppp = fs.map.ppp;
  if (bistatic) {
    std::vector<std::pair<double, Gaussian>> ue_mix;
    for (size_t h = 0; h < hyps.size(); ++h) ue_mix.push_back({hyp_w[h], results[h].ue});
    fs.ue.density = moment_match_normalized(ue_mix);
    fs.ue.density.mean(3) = wrap_angle(fs.ue.density.mean(3));
  }

  for (int i = 0; i < n; ++i) {
    double r_bar = 0.0;
    for (size_t h = 0; h < hyps.size(); ++h) {
      r_bar += hyp_w[h] * results[h].bernoullis[i].existence;
    }
    Bernoulli out;
    out.id = fs.map.bernoullis[i].id;
    out.resolved_type = fs.map.bernoullis[i].resolved_type;
    out.existence = r_bar;
    clamp_probability(out.existence);
    if (r_bar <= 0.0) {
      out.hypotheses = fs.map.bernoullis[i].hypotheses;
      merged.bernoullis.push_back(std::move(out));
      continue;
    }
    for (const LandmarkKind kind : birth_models(fs.modality)) {
      std::vector<std::pair<double, Gaussian>> mix;
      double wsum = 0.0;
      for (size_t h = 0; h < hyps.size(); ++h) {
        const BernoulliPosterior& post = results[h].bernoullis[i];
        for (const auto& hyp : post.hypotheses) {
          if (hyp.kind != kind) continue;
          const double w = hyp_w[h] * post.existence * hyp.weight;
          if (w > 0.0) {
            mix.push_back({w, hyp.density});
            wsum += w;
          }
        }
      }
      if (mix.empty()) continue;
      ModelHypothesis hyp;
      hyp.kind = kind;
      hyp.weight = wsum / r_bar;
      hyp.density = moment_match_normalized(mix);
      out.hypotheses.push_back(std::move(hyp));
    }
    if (out.hypotheses.empty()) {
      out.hypotheses = fs.map.bernoullis[i].hypotheses;
    } else {
      out.normalize_weights();
    }
    merged.bernoullis.push_back(std::move(out));
  }

  // New Bernoullis from measurements assigned to the birth column.
  for (int j = 0; j < m; ++j) {
    if (births[j].hypotheses.empty()) continue;
    double present = 0.0;
    for (size_t h = 0; h < hyps.size(); ++h) {
      if (results[h].birth_used[j]) present += hyp_w[h];
    }
    if (present <= 0.0) continue;
    Bernoulli out;
    out.id = fs.next_bernoulli_id++;
    out.existence = present * births[j].existence;
    clamp_probability(out.existence);
    out.hypotheses = births[j].hypotheses;
    merged.bernoullis.push_back(std::move(out));
  }

  // PPP thinning: undetected landmarks survive with probability 1 - pD.
  for (PPPComponent& c : merged.ppp.components) {
    c.weight *= 1.0 - params.detection_prob;
  }

  fs.map = std::move(merged);

  // Reduction: prune model hypotheses, recycle weak Bernoullis into the PPP,
  // cap the Bernoulli count, prune the PPP.
  for (Bernoulli& bern : fs.map.bernoullis) {
    bern.prune_hypotheses(params.hyp_prune_weight);
  }
  {
    std::vector<Bernoulli> kept;
    auto recycle = [&](const Bernoulli& bern) {
      for (const auto& hyp : bern.hypotheses) {
        const double w = bern.existence * hyp.weight;
        if (w > params.ppp_prune_weight) {
          fs.map.ppp.components.push_back(PPPComponent{w, hyp.density, -1});
        }
      }
    };
    for (Bernoulli& bern : fs.map.bernoullis) {
      if (bern.existence < params.recycle_threshold) {
        recycle(bern);
      } else {
        kept.push_back(std::move(bern));
      }
    }
    if (static_cast<int>(kept.size()) > params.max_bernoullis) {
      std::stable_sort(kept.begin(), kept.end(),
                       [](const Bernoulli& a, const Bernoulli& b) {
                         return a.existence > b.existence;
                       });
      for (size_t i = params.max_bernoullis; i < kept.size(); ++i) recycle(kept[i]);
      kept.resize(params.max_bernoullis);
      std::stable_sort(kept.begin(), kept.end(),
                       [](const Bernoulli& a, const Bernoulli& b) { return a.id < b.id; });
    }
    fs.map.bernoullis = std::move(kept);
  }
  {
    std::vector<PPPComponent> kept;
    for (PPPComponent& c : fs.map.ppp.components) {
      if (c.weight >= params.ppp_prune_weight || c.birth_slot >= 0) {
        kept.push_back(std::move(c));
      }
    }
    if (static_cast<int>(kept.size()) > params.max_ppp_components) {
      std::stable_sort(kept.begin(), kept.end(),
                       [](const PPPComponent& a, const PPPComponent& b) {
                         const bool ab = a.birth_slot >= 0;
                         const bool bb = b.birth_slot >= 0;
                         if (ab != bb) return ab;  // keep birth components
                         return a.weight > b.weight;
                       });
      kept.resize(params.max_ppp_components);
    }
    fs.map.ppp.components = std::move(kept);
  }

  // Monostatic UE designation: the single Bernoulli best explained by the
  // random-walk model.
  if (!bistatic) {
    fs.ue_track_id.reset();
    double best = 0.0;
    for (const Bernoulli& bern : fs.map.bernoullis) {
      const double w_ue = bern.model_weight(LandmarkKind::kUETrack);
      if (w_ue > 0.5 && bern.existence > 0.5) {
        const double score = bern.existence * w_ue;
        if (score > best) {
          best = score;
          fs.ue_track_id = bern.id;
        }
      }
    }
  }
}

Estimate estimate(const FilterState& fs, const FilterParams& params) {
  Estimate out;
  if (fs.modality == Modality::kBistatic) {
    out.ue_state = UEState::from_vector(fs.ue.density.mean);
  }
  for (const Bernoulli& bern : fs.map.bernoullis) {
    if (bern.existence < params.report_threshold) continue;
    const ModelHypothesis& best = bern.best_hypothesis();
    const bool designated = fs.ue_track_id.has_value() && bern.id == *fs.ue_track_id;
    if (designated) {
      const ModelHypothesis* ue_hyp = bern.hypothesis(LandmarkKind::kUETrack);
      if (ue_hyp != nullptr) out.ue_position = ue_hyp->density.mean.head<3>();
      continue;
    }
    if (best.kind == LandmarkKind::kUETrack) continue;  // ambiguous, unreported
    out.landmarks.push_back({best.kind, best.density.mean.head<3>()});
    if (fs.modality == Modality::kMonostatic && bern.resolved_type.has_value()) {
      const Eigen::Vector3d ip = best.density.mean.head<3>();
      if (*bern.resolved_type == LandmarkKind::kVA) {
        out.resolved.push_back({LandmarkKind::kVA, va_from_ip(ip, fs.bs)});
      } else if (*bern.resolved_type == LandmarkKind::kSP) {
        out.resolved.push_back({LandmarkKind::kSP, ip});
      }
    }
  }
  return out;
}

}  // namespace sensefuse
