#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "sensefuse/filters.hpp"
#include "sensefuse/rfs.hpp"

namespace sensefuse {

struct FusionParams {
  double gate = 25.0;   // T_G, dimensionless matching cost threshold
  int period = 5;       // time steps between fusion events
  // Existence discount applied when a Bernoulli has no PPP support to fuse
  // against (empty intensity).
  double no_support_discount = 0.8;
};

struct MatchResult {
  struct Pair {
    int b_index = -1;
    int m_index = -1;
    LandmarkKind type = LandmarkKind::kVA;  // chosen landmark type
    double cost = 0.0;
  };
  std::vector<Pair> pairs;
  std::vector<int> unmatched_b;
  std::vector<int> unmatched_m;
};

/// Converts a bistatic map into IP space: VA hypotheses are pushed through
/// x -> (x + bs)/2 (covariance scaled by 1/4); SP hypotheses are unchanged.
PMBMap to_ip_space(const PMBMap& b_map, const Eigen::Vector3d& bs);

/// Matching cost for one type choice:
/// c = (1 / (2 w_type)) * (d' Sigma_b^-1 d + d' Sigma_m^-1 d) with
/// d = mean_b - mean_m. Returns +inf when the type weight is zero.
double match_cost(const Bernoulli& b_in_ip, const Bernoulli& m, LandmarkKind type);

/// Minimum cost over the VA/SP type choice and the minimizing type.
std::pair<double, LandmarkKind> match_cost_min(const Bernoulli& b_in_ip,
                                               const Bernoulli& m);

/// Optimal gated matching between the two Bernoulli lists (bistatic map
/// already converted to IP space). Rows assigned to the T_G block are
/// unmatched; monostatic columns never chosen are unmatched.
MatchResult match_maps(const PMBMap& b_ip, const PMBMap& m_map,
                       const FusionParams& params);

/// GCI fusion of two Bernoullis with single Gaussian densities in a common
/// space; alpha = r_b / (r_b + r_m). Returns {r_F, f_F}.
std::pair<double, Gaussian> fuse_bernoullis(double r_b, const Gaussian& f_b,
                                            double r_m, const Gaussian& f_m);

/// GCI fusion of a Bernoulli with a PPP; the PPP component with the highest
/// density at the Bernoulli mean stands in for the intensity.
std::pair<double, Gaussian> fuse_bernoulli_ppp(double r_b, const Gaussian& f_b,
                                               const PPPIntensity& ppp,
                                               double no_support_discount);

/// GCI fusion of two Gaussian-mixture PPPs at alpha = beta = 1/2 with greedy
/// nearest component pairing; unpaired components are carried with the
/// half-power scaling.
PPPIntensity fuse_ppps(const PPPIntensity& a, const PPPIntensity& b);

/// Product of the 5-dim UE posterior with a 3-dim position density
/// (selection onto the position block).
UEPosterior fuse_ue(const UEPosterior& b_post, const Gaussian& m_ue);

/// Full fusion event: match, fuse components and PPPs, fuse the UE state,
/// and produce the two overwritten filter states.
std::pair<FilterState, FilterState> fuse_maps(const FilterState& fs_b,
                                              const FilterState& fs_m,
                                              const FusionParams& params);

}  // namespace sensefuse
