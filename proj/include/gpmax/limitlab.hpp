#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "gpmax/grid.hpp"
#include "gpmax/kernels.hpp"
#include "gpmax/sampling.hpp"
#include "gpmax/stats.hpp"

namespace gpmax {

/// One asymptotic experiment: draw the field maximum on a strictly increasing
/// schedule of window sides R (fixed mesh) and track the statistics behind
/// the Gaussian limit: Var[M_R] vs Var[Q1], growth of the mean, normal vs
/// Gumbel distributional distance, argmax window mass.
struct LimitExperimentSpec {
    CovarianceModel model;
    std::vector<double> r_schedule;  ///< strictly increasing window sides
    double mesh = 1.0;
    std::size_t replicates = 1000;   ///< per level
    std::uint64_t master_seed = 1;
    Backend backend = Backend::automatic;
    double deloc_beta = 0.5;         ///< window exponent: windows of side R^(1-beta)
    int workers = 1;
};

struct LevelStats {
    double side = 0.0;
    Eigen::Index points_per_axis = 0;
    Eigen::Index points = 0;
    std::size_t replicates = 0;
    double mean_m = 0.0, se_mean_m = 0.0;
    double var_m = 0.0, se_var_m = 0.0;
    double var_q1 = 0.0, se_var_q1 = 0.0;  ///< disjoint-pair estimate of p^T K p
    double ratio = 0.0, se_ratio = 0.0;    ///< var_q1 / var_m
    double ks_normal = 0.0;                ///< standardised sample vs N(0,1)
    double ks_gumbel = 0.0;                ///< sample vs its ML Gumbel fit
    double growth_ratio = 0.0, se_growth_ratio = 0.0;  ///< mean / sqrt(2 d log N)
    double var_m_over_w = 0.0;             ///< Var[M_R] / w(R)
    double max_window_mass = 0.0, se_window_mass = 0.0;
    double window_fraction = 0.0;          ///< window points / total points
    std::size_t tie_count = 0;
    bool repaired = false;
};

struct LimitExperimentResult {
    LimitExperimentSpec spec;
    std::vector<LevelStats> levels;
    /// Raw per-replicate draws, one inner vector per schedule level, in
    /// replicate order (replicate ids are level_index * replicates + r).
    std::vector<std::vector<double>> maxima;
    std::vector<std::vector<Eigen::Index>> argmaxes;
};

LimitExperimentResult run_limit_experiment(const LimitExperimentSpec& spec);

/// Growth of the mean toward the independent-field rate: the ratios
/// mean(M_R) / sqrt(2 d log N_R) (N_R = points per axis) must be
/// nondecreasing across statistically distinguishable levels and inside
/// [band_lo, band_hi] at the top R.
struct GrowthCheck {
    std::vector<double> sides;
    std::vector<double> ratios, ses;
    std::vector<TrendPoint> merged;  ///< indistinguishable neighbours pooled at merge_z
    double merge_z = 3.0;
    bool increasing = false;
    bool top_in_band = false;
    double band_lo = 0.6, band_hi = 1.1;
};

GrowthCheck growth_check(const LimitExperimentResult& result);

/// Largest empirical argmax mass over sliding sub-windows of side R^(1-beta)
/// (half-window steps, all axis offsets in 2D), with its binomial SE and the
/// window's share of the grid points.
struct WindowMass {
    double mass = 0.0;
    double se = 0.0;
    double fraction = 0.0;
    Eigen::Index window_points_per_axis = 0;
};

WindowMass max_window_mass(const std::vector<Eigen::Index>& argmaxes, const LatticeGrid& grid,
                           double beta);

/// Delocalisation of the argmax: in the strongly correlated regime the
/// maximal window mass should decay like R^(-beta'), beta' > 0, so the
/// log-log regression slope of mass on R must be significantly negative.
struct DelocalisationResult {
    std::vector<double> sides, masses, ses, fractions;
    double slope = 0.0, se_slope = 0.0;  ///< weighted log-log fit
    double beta_prime = 0.0;             ///< fitted decay exponent, -slope
    bool significantly_negative = false; ///< slope + 2.5758 se < 0
};

DelocalisationResult delocalisation_probe(const LimitExperimentResult& result, double beta);

/// Hypercontractive occupation bound, tested per dilated cell neighbourhood
/// and coupling time: P[I in S, I^t in S] <= P[I in S]^(1 + (1-t)/2) with
/// Wilson intervals at quantile z on both sides.  A violation means the
/// joint lower bound exceeds the bound computed from the marginal upper
/// bound.
struct HyperCell {
    Eigen::Index cell = 0;
    double t = 0.0;
    std::size_t marginal_count = 0, joint_count = 0;
    double marginal = 0.0, marginal_hi = 0.0;
    double joint = 0.0, joint_lo = 0.0;
    double bound = 0.0;   ///< marginal_hi^(1 + (1-t)/2)
    double margin = 0.0;  ///< bound - joint_lo; negative flags a violation
    bool violated = false;
};

struct HyperProbeReport {
    std::vector<HyperCell> cells;  ///< all (cell, t) pairs, cell-major
    double worst_margin = 0.0;
    std::size_t violations = 0;
    std::size_t replicates = 0;
    Eigen::Index cells_per_axis = 0;
    Eigen::Index cell_points_per_axis = 0;
    double z = 0.0;
};

/// Cells partition the grid into blocks of cell_points per axis (the last
/// block may be short); the occupation set of a cell is its dilated
/// neighbourhood (the cell joined with all adjacent cells).  Every replicate
/// draws one coupled family sharing the base field and independent copy
/// across the whole t grid.
HyperProbeReport hypercontractivity_probe(const GaussianEnsemble& ensemble,
                                          const LatticeGrid& grid, Eigen::Index cell_points,
                                          const std::vector<double>& t_grid, std::size_t budget,
                                          std::uint64_t master_seed, int workers = 1,
                                          double z = 2.5758293035489004);

/// Exponent slack of the hypercontractive bound: 2/(1+t) - (3-t)/2, equal to
/// (1-t)^2 / (2 (1+t)), nonnegative on (0,1] and zero only at t=1.
double alpha_slack(double t);

struct AlphaTable {
    std::vector<double> t, slack;
    double min_slack = 0.0;
    double argmin_t = 1.0;
};

/// Tabulates alpha_slack on the grid t = step, 2 step, ..., 1 (step <= 1e-3
/// enforced) and records the minimum, which must sit at t = 1 with value 0.
AlphaTable alpha_inequality_table(double step = 1e-3);

/// Scaling constants gamma_R = mean(M_R) / sqrt(1 - w(R)); levels where
/// w(R) >= 1 (inside a flat top) are skipped.
struct ScalingRow {
    double side = 0.0;
    double gamma = 0.0;
    double se = 0.0;
};

std::vector<ScalingRow> scaling_constants_study(const LimitExperimentResult& result);

}  // namespace gpmax
