#include "sensefuse/fusion.hpp"

#include <cmath>
#include <stdexcept>

#include "sensefuse/assignment.hpp"

namespace sensefuse {

namespace {

Gaussian va_density_to_ip(const Gaussian& va, const Eigen::Vector3d& bs) {
  Gaussian out;
  out.mean = 0.5 * (va.mean + bs);
  out.cov = 0.25 * va.cov;
  return out;
}

Gaussian ip_density_to_va(const Gaussian& ip, const Eigen::Vector3d& bs) {
  Gaussian out;
  out.mean = 2.0 * ip.mean - bs;
  out.cov = 4.0 * ip.cov;
  return out;
}

// Monostatic Bernoullis enter map matching through their IP-model density.
const Gaussian& mono_map_density(const Bernoulli& m) {
  const ModelHypothesis* ip = m.hypothesis(LandmarkKind::kIP);
  if (ip == nullptr) {
    throw std::invalid_argument("match: monostatic Bernoulli lacks an IP hypothesis");
  }
  return ip->density;
}

double quad_form(const Eigen::VectorXd& d, const Eigen::MatrixXd& sigma) {
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(sigma);
  if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any()) {
    throw std::invalid_argument("match_cost: singular covariance");
  }
  return d.dot(ldlt.solve(d));
}

// GCI normalization constant and fused density of f_a^alpha * f_b^beta.
struct GciProduct {
  double constant = 1.0;
  Gaussian density;
};

GciProduct gci_product(const Gaussian& fa, const Gaussian& fb, double alpha, double beta) {
  const auto [sa, ga] = gaussian_power(fa, alpha);
  const auto [sb, gb] = gaussian_power(fb, beta);
  const auto [sp, prod] = gaussian_product(ga, gb);
  GciProduct out;
  out.constant = sa * sb * sp;
  out.density = prod;
  return out;
}

}  // namespace

PMBMap to_ip_space(const PMBMap& b_map, const Eigen::Vector3d& bs) {
  PMBMap out = b_map;
  for (Bernoulli& bern : out.bernoullis) {
    for (ModelHypothesis& hyp : bern.hypotheses) {
      if (hyp.kind == LandmarkKind::kVA) {
        hyp.density = va_density_to_ip(hyp.density, bs);
      }
      // SP densities are IP densities already.
    }
  }
  return out;
}

double match_cost(const Bernoulli& b_in_ip, const Bernoulli& m, LandmarkKind type) {
  const double w = b_in_ip.model_weight(type);
  if (w <= 0.0) return assignment::kInf;
  const ModelHypothesis* hyp = b_in_ip.hypothesis(type);
  const Gaussian& fm = mono_map_density(m);
  const Eigen::VectorXd d = hyp->density.mean - fm.mean;
  return (quad_form(d, hyp->density.cov) + quad_form(d, fm.cov)) / (2.0 * w);
}

std::pair<double, LandmarkKind> match_cost_min(const Bernoulli& b_in_ip,
                                               const Bernoulli& m) {
  double best = assignment::kInf;
  LandmarkKind type = LandmarkKind::kVA;
  for (const LandmarkKind kind : {LandmarkKind::kVA, LandmarkKind::kSP}) {
    if (b_in_ip.hypothesis(kind) == nullptr) continue;
    const double c = match_cost(b_in_ip, m, kind);
    if (c < best) {
      best = c;
      type = kind;
    }
  }
  return {best, type};
}

MatchResult match_maps(const PMBMap& b_ip, const PMBMap& m_map,
                       const FusionParams& params) {
  MatchResult out;
  const int nb = static_cast<int>(b_ip.bernoullis.size());
  const int nm = static_cast<int>(m_map.bernoullis.size());
  if (nb == 0) {
    for (int j = 0; j < nm; ++j) out.unmatched_m.push_back(j);
    return out;
  }

  Eigen::MatrixXd cost(nb, nm + nb);
  cost.setConstant(assignment::kInf);
  std::vector<std::vector<LandmarkKind>> types(nb, std::vector<LandmarkKind>(nm));
  for (int i = 0; i < nb; ++i) {
    for (int j = 0; j < nm; ++j) {
      const auto [c, type] = match_cost_min(b_ip.bernoullis[i], m_map.bernoullis[j]);
      cost(i, j) = c;
      types[i][j] = type;
    }
    cost(i, nm + i) = params.gate;
  }

  const assignment::Assignment best = assignment::solve(cost);
  std::vector<char> m_used(nm, 0);
  for (int i = 0; i < nb; ++i) {
    const int j = best.row_to_col[i];
    if (j < nm) {
      out.pairs.push_back(MatchResult::Pair{i, j, types[i][j], cost(i, j)});
      m_used[j] = 1;
    } else {
      out.unmatched_b.push_back(i);
    }
  }
  for (int j = 0; j < nm; ++j) {
    if (!m_used[j]) out.unmatched_m.push_back(j);
  }
  return out;
}

std::pair<double, Gaussian> fuse_bernoullis(double r_b, const Gaussian& f_b,
                                            double r_m, const Gaussian& f_m) {
  if (r_b + r_m <= 0.0) {
    // The GCI weights are undefined at 0/0; fall back to the stronger input.
    return r_b >= r_m ? std::make_pair(r_b, f_b) : std::make_pair(r_m, f_m);
  }
  const double alpha = r_b / (r_b + r_m);
  const double beta = r_m / (r_b + r_m);
  if (alpha <= 0.0) return {r_m, f_m};
  if (beta <= 0.0) return {r_b, f_b};
  const GciProduct prod = gci_product(f_b, f_m, alpha, beta);
  const double detected =
      prod.constant * std::pow(r_b, alpha) * std::pow(r_m, beta);
  const double empty = std::pow(1.0 - r_b, alpha) * std::pow(1.0 - r_m, beta);
  return {detected / (detected + empty), prod.density};
}

std::pair<double, Gaussian> fuse_bernoulli_ppp(double r_b, const Gaussian& f_b,
                                               const PPPIntensity& ppp,
                                               double no_support_discount) {
  const PPPComponent* best = nullptr;
  double best_logdens = -std::numeric_limits<double>::infinity();
  for (const PPPComponent& comp : ppp.components) {
    if (comp.weight <= 0.0) continue;
    const double ld = std::log(comp.weight) + comp.density.log_density(f_b.mean);
    if (ld > best_logdens) {
      best_logdens = ld;
      best = &comp;
    }
  }
  if (best == nullptr) {
    return {r_b * no_support_discount, f_b};
  }
  const double eta = best->weight;
  const double alpha = r_b / (r_b + eta);
  const double beta = eta / (r_b + eta);
  if (alpha <= 0.0 || beta <= 0.0) {
    return {r_b, f_b};
  }
  const GciProduct prod = gci_product(f_b, best->density, alpha, beta);
  const double detected = prod.constant * std::pow(r_b, alpha) * std::pow(eta, beta);
  const double empty = std::pow(1.0 - r_b, alpha);
  return {detected / (detected + empty), prod.density};
}

PPPIntensity fuse_ppps(const PPPIntensity& a, const PPPIntensity& b) {
  PPPIntensity out;
  const int na = static_cast<int>(a.components.size());
  const int nb = static_cast<int>(b.components.size());

  // Greedy nearest pairing by Euclidean distance between component means.
  struct Edge {
    double dist;
    int ia;
    int ib;
  };
  std::vector<Edge> edges;
  for (int i = 0; i < na; ++i) {
    for (int j = 0; j < nb; ++j) {
      edges.push_back(Edge{(a.components[i].density.mean - b.components[j].density.mean).norm(),
                           i, j});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    if (x.dist != y.dist) return x.dist < y.dist;
    if (x.ia != y.ia) return x.ia < y.ia;
    return x.ib < y.ib;
  });
  std::vector<char> a_used(na, 0), b_used(nb, 0);
  for (const Edge& e : edges) {
    if (a_used[e.ia] || b_used[e.ib]) continue;
    a_used[e.ia] = 1;
    b_used[e.ib] = 1;
    const PPPComponent& ca = a.components[e.ia];
    const PPPComponent& cb = b.components[e.ib];
    const GciProduct prod = gci_product(ca.density, cb.density, 0.5, 0.5);
    PPPComponent fused;
    fused.weight = prod.constant * std::sqrt(ca.weight * cb.weight);
    fused.density = prod.density;
    fused.birth_slot = ca.birth_slot == cb.birth_slot ? ca.birth_slot : -1;
    out.components.push_back(std::move(fused));
  }
  // Unpaired components: lambda^(1/2) with the half-power scale.
  auto carry = [&out](const PPPComponent& c) {
    const auto [scale, half] = gaussian_power(c.density, 0.5);
    PPPComponent kept;
    kept.weight = std::sqrt(c.weight) * scale;
    kept.density = half;
    kept.birth_slot = c.birth_slot;
    out.components.push_back(std::move(kept));
  };
  for (int i = 0; i < na; ++i) {
    if (!a_used[i]) carry(a.components[i]);
  }
  for (int j = 0; j < nb; ++j) {
    if (!b_used[j]) carry(b.components[j]);
  }
  return out;
}

UEPosterior fuse_ue(const UEPosterior& b_post, const Gaussian& m_ue) {
  if (b_post.density.dim() != 5 || m_ue.dim() != 3) {
    throw std::invalid_argument("fuse_ue: expects a 5-dim posterior and 3-dim position");
  }
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(3, 5);
  H.leftCols<3>() = Eigen::Matrix3d::Identity();
  const Eigen::MatrixXd& P = b_post.density.cov;
  Eigen::MatrixXd S = H * P * H.transpose() + m_ue.cov;
  symmetrize(S);
  const Eigen::MatrixXd K = P * H.transpose() * S.inverse();
  UEPosterior out;
  out.density.mean =
      b_post.density.mean + K * (m_ue.mean - b_post.density.mean.head<3>());
  out.density.mean(3) = wrap_angle(out.density.mean(3));
  out.density.cov = P - K * S * K.transpose();
  symmetrize(out.density.cov);
  return out;
}

std::pair<FilterState, FilterState> fuse_maps(const FilterState& fs_b,
                                              const FilterState& fs_m,
                                              const FusionParams& params) {
  if (fs_b.modality != Modality::kBistatic || fs_m.modality != Modality::kMonostatic) {
    throw std::invalid_argument("fuse_maps: expects (bistatic, monostatic) states");
  }
  const Eigen::Vector3d& bs = fs_b.bs;

  // The designated UE Bernoulli is fused with the UE posterior, not matched
  // against landmarks. Undesignated tracks without an IP hypothesis are
  // ambiguous moving objects; they pass through the fusion untouched.
  PMBMap m_land;
  m_land.ppp = fs_m.map.ppp;
  const Bernoulli* ue_bern = nullptr;
  std::vector<Bernoulli> passthrough;
  for (const Bernoulli& bern : fs_m.map.bernoullis) {
    if (fs_m.ue_track_id.has_value() && bern.id == *fs_m.ue_track_id) {
      ue_bern = &bern;
    } else if (bern.hypothesis(LandmarkKind::kIP) == nullptr) {
      passthrough.push_back(bern);
    } else {
      m_land.bernoullis.push_back(bern);
    }
  }

  const PMBMap b_ip = to_ip_space(fs_b.map, bs);
  const MatchResult match = match_maps(b_ip, m_land, params);

  struct FusedComponent {
    double r = 0.0;
    Gaussian ip_density;
    // VA or SP when the type is determined, nullopt for monostatic-only
    // components (kept 50/50 in the bistatic map).
    std::optional<LandmarkKind> type;
  };
  std::vector<FusedComponent> fused;

  for (const MatchResult::Pair& pair : match.pairs) {
    const Bernoulli& b = b_ip.bernoullis[pair.b_index];
    const Bernoulli& m = m_land.bernoullis[pair.m_index];
    const auto [r, density] = fuse_bernoullis(b.existence,
                                              b.hypothesis(pair.type)->density,
                                              m.existence, mono_map_density(m));
    fused.push_back(FusedComponent{r, density, pair.type});
  }
  for (const int bi : match.unmatched_b) {
    const Bernoulli& b = b_ip.bernoullis[bi];
    // Hard type decision against the monostatic PPP: for each type, rate the
    // best-supporting component with the matching cost, then keep the argmin.
    LandmarkKind type = b.best_hypothesis().kind;
    double best_cost = assignment::kInf;
    for (const LandmarkKind kind : {LandmarkKind::kVA, LandmarkKind::kSP}) {
      const ModelHypothesis* hyp = b.hypothesis(kind);
      if (hyp == nullptr || hyp->weight <= 0.0) continue;
      for (const PPPComponent& comp : m_land.ppp.components) {
        if (comp.weight <= 0.0) continue;
        const Eigen::VectorXd d = hyp->density.mean - comp.density.mean;
        const double c =
            (quad_form(d, hyp->density.cov) + quad_form(d, comp.density.cov)) /
            (2.0 * hyp->weight);
        if (c < best_cost) {
          best_cost = c;
          type = kind;
        }
      }
    }
    const auto [r, density] =
        fuse_bernoulli_ppp(b.existence, b.hypothesis(type)->density, m_land.ppp,
                           params.no_support_discount);
    fused.push_back(FusedComponent{r, density, type});
  }
  for (const int mj : match.unmatched_m) {
    const Bernoulli& m = m_land.bernoullis[mj];
    const auto [r, density] = fuse_bernoulli_ppp(m.existence, mono_map_density(m),
                                                 fs_b.map.ppp, params.no_support_discount);
    fused.push_back(FusedComponent{r, density, std::nullopt});
  }

  const PPPIntensity fused_ppp = fuse_ppps(fs_b.map.ppp, fs_m.map.ppp);

  // UE state fusion (skipped when monostatic sensing has not designated a
  // UE track yet).
  UEPosterior fused_ue = fs_b.ue;
  std::optional<Gaussian> fused_ue_pos;
  if (ue_bern != nullptr) {
    const ModelHypothesis* ue_hyp = ue_bern->hypothesis(LandmarkKind::kUETrack);
    if (ue_hyp != nullptr) {
      fused_ue = fuse_ue(fs_b.ue, ue_hyp->density);
      fused_ue_pos = Gaussian{fused_ue.density.mean.head<3>(),
                              fused_ue.density.cov.topLeftCorner<3, 3>()};
    }
  }

  // Overwrite both filters with the fused map, re-indexed from zero.
  FilterState out_b = fs_b;
  FilterState out_m = fs_m;
  out_b.map.bernoullis.clear();
  out_m.map.bernoullis.clear();
  out_b.map.ppp = fused_ppp;
  out_m.map.ppp = fused_ppp;
  out_b.ue = fused_ue;

  int next_id = 0;
  for (const FusedComponent& fc : fused) {
    Bernoulli mb;
    mb.id = next_id;
    mb.existence = fc.r;
    mb.hypotheses = {ModelHypothesis{LandmarkKind::kIP, 1.0, fc.ip_density}};
    mb.resolved_type = fc.type;
    out_m.map.bernoullis.push_back(std::move(mb));

    Bernoulli bb;
    bb.id = next_id;
    bb.existence = fc.r;
    if (fc.type.has_value()) {
      const Gaussian density = *fc.type == LandmarkKind::kVA
                                   ? ip_density_to_va(fc.ip_density, bs)
                                   : fc.ip_density;
      bb.hypotheses = {ModelHypothesis{*fc.type, 1.0, density}};
    } else {
      // Landmark only seen by monostatic sensing: 50% SP, 50% VA, the VA
      // branch duplicated through the IP<->VA affine relation.
      bb.hypotheses = {
          ModelHypothesis{LandmarkKind::kVA, 0.5, ip_density_to_va(fc.ip_density, bs)},
          ModelHypothesis{LandmarkKind::kSP, 0.5, fc.ip_density}};
    }
    out_b.map.bernoullis.push_back(std::move(bb));
    ++next_id;
  }

  for (Bernoulli bern : passthrough) {
    bern.id = next_id++;
    out_m.map.bernoullis.push_back(std::move(bern));
  }

  // The monostatic UE track survives fusion with its density replaced by the
  // fused position marginal.
  out_m.ue_track_id.reset();
  if (ue_bern != nullptr) {
    Bernoulli ue_out = *ue_bern;
    ue_out.id = next_id++;
    if (fused_ue_pos.has_value()) {
      for (ModelHypothesis& hyp : ue_out.hypotheses) {
        if (hyp.kind == LandmarkKind::kUETrack) hyp.density = *fused_ue_pos;
      }
    }
    out_m.ue_track_id = ue_out.id;
    out_m.map.bernoullis.push_back(std::move(ue_out));
  }
  out_b.next_bernoulli_id = next_id;
  out_m.next_bernoulli_id = next_id;
  return {std::move(out_b), std::move(out_m)};
}

}  // namespace sensefuse
