#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "gpmax/sampling.hpp"

namespace gpmax {

/// Coefficients of the best linear approximation Q1(M) = sum_i p_i X_i:
/// estimated argmax probabilities, either from argmax counts or from the
/// Monte Carlo mean of the soft-max gradient at inverse temperature beta.
struct ChaosCoefficients {
    enum class Source { argmax_counts, softmax_expectation };

    Eigen::VectorXd p;
    Source source = Source::argmax_counts;
    double beta = 0.0;            ///< set for the softmax source
    std::size_t sample_count = 0; ///< replicates behind the estimate
};

/// Q1 evaluated on one field draw: sum_i p_i values_i.
double q1_value(const Eigen::VectorXd& field_values, const ChaosCoefficients& coeffs);

/// Var[Q1] by the quadratic form p^T K p.
double var_q1_formula(const ChaosCoefficients& coeffs, const Eigen::MatrixXd& covariance);

/// Argmax-count coefficients over `budget` replicates with ids starting at
/// `replicate_offset` (distinct offsets keep estimation batches independent).
ChaosCoefficients q1_coefficients_argmax(GaussianEnsemble& ensemble, std::size_t budget,
                                         std::uint64_t master_seed,
                                         std::uint64_t replicate_offset = 0);

/// Soft-max-gradient coefficients E[dF_beta/dx_i] at fixed beta.
ChaosCoefficients q1_coefficients_softmax(GaussianEnsemble& ensemble, double beta,
                                          std::size_t budget, std::uint64_t master_seed,
                                          std::uint64_t replicate_offset = 0);

struct EstimateWithError {
    double value = 0.0;
    double se = 0.0;
};

/// Chatterjee interpolation estimate of Var[M]: per replicate draw
/// t ~ Uniform(0,1], couple, and record K(I, I^t); the mean is unbiased for
/// the integral identity.  The stratified option splits t into `strata`
/// equal bins with one uniform draw each (equal-weight bin means).
EstimateWithError chatterjee_variance(GaussianEnsemble& ensemble, std::size_t budget,
                                      std::uint64_t master_seed, bool stratified = false,
                                      int strata = 16, std::uint64_t replicate_offset = 0);

/// Unbiased estimate of p^T K p = E[K(I, I')] from disjoint replicate pairs,
/// usable at scale where neither p nor K is materialised.
EstimateWithError var_q1_from_indices(const GaussianEnsemble& ensemble,
                                      const std::vector<Eigen::Index>& argmax_indices);

/// Orthogonality check of the projection residual: Cov[M - Q1, X_j] for each
/// j over a fresh batch, with standard errors combining the evaluation noise
/// and the propagated coefficient noise (coefficients must come from an
/// independent batch; pass a disjoint replicate_offset).
struct ResidualCheck {
    Eigen::VectorXd covariances;
    Eigen::VectorXd ses;
};

ResidualCheck projection_residual_check(GaussianEnsemble& ensemble,
                                        const ChaosCoefficients& coeffs, std::size_t budget,
                                        std::uint64_t master_seed,
                                        std::uint64_t replicate_offset);

/// Standardised L2 gap E[(X^ - Y^)^2] = 2 (1 - sqrt(var_y / var_x)), valid
/// when Cov[X - Y, Y] = 0; throws std::domain_error unless 0 < var_y <= var_x.
double standardized_l2_gap(double var_x, double var_y);

/// All Var[M] / Var[Q1] routes on one ensemble, with standard errors.
/// Serialised field names: var_m_direct, var_m_chatterjee, var_q1_formula,
/// var_q1_sample, ratio, se_*.
struct VarianceReport {
    double var_m_direct = 0.0;
    double var_m_chatterjee = 0.0;
    double var_q1_formula = 0.0;
    double var_q1_sample = 0.0;
    double ratio = 0.0;  ///< var_q1_formula / var_m_direct
    double se_var_m_direct = 0.0;
    double se_var_m_chatterjee = 0.0;
    double se_var_q1_formula = 0.0;
    double se_var_q1_sample = 0.0;
    double se_ratio = 0.0;
    double mean_m = 0.0;
    double se_mean_m = 0.0;
    std::size_t coeff_replicates = 0;
    std::size_t eval_replicates = 0;
    /// Documented plug-in bias bound O(n / coeff_replicates) for reusing
    /// estimated coefficients.
    double plug_in_bias_bound = 0.0;
};

/// Coefficients on batch A (ids [0, coeff_budget)), evaluation on batch B,
/// Chatterjee on batch C; the three replicate-id ranges are disjoint.
VarianceReport make_variance_report(GaussianEnsemble& ensemble, std::size_t coeff_budget,
                                    std::size_t eval_budget, std::uint64_t master_seed);

}  // namespace gpmax
