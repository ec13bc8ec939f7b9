#include "gpmax/chaos.hpp"

#include <cmath>
#include <stdexcept>

#include "gpmax/maxstats.hpp"
#include "gpmax/stats.hpp"

namespace gpmax {

namespace {

/// Pins the coefficient sum to exactly 1.0 by absorbing the (ulp-scale)
/// normalisation residual into the largest entry.
void pin_probability_sum(Eigen::VectorXd& p) {
    p /= p.sum();
    Eigen::Index largest = 0;
    p.maxCoeff(&largest);
    p[largest] += 1.0 - p.sum();
}

}  // namespace

double q1_value(const Eigen::VectorXd& field_values, const ChaosCoefficients& coeffs) {
    if (field_values.size() != coeffs.p.size()) {
        throw std::invalid_argument("coefficient length does not match the field");
    }
    return coeffs.p.dot(field_values);
}

double var_q1_formula(const ChaosCoefficients& coeffs, const Eigen::MatrixXd& covariance) {
    if (covariance.rows() != coeffs.p.size() || covariance.cols() != coeffs.p.size()) {
        throw std::invalid_argument("covariance dimensions do not match the coefficients");
    }
    return coeffs.p.dot(covariance * coeffs.p);
}

ChaosCoefficients q1_coefficients_argmax(GaussianEnsemble& ensemble, std::size_t budget,
                                         std::uint64_t master_seed,
                                         std::uint64_t replicate_offset) {
    if (budget == 0) throw std::invalid_argument("coefficient estimation needs budget >= 1");
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(ensemble.size());
    for (std::size_t r = 0; r < budget; ++r) {
        RngStream stream(master_seed, replicate_offset + r, StreamPurpose::base_field);
        const Eigen::VectorXd values = ensemble.sample(stream);
        counts[argmax_max(values).index] += 1.0;
    }
    ChaosCoefficients coeffs;
    coeffs.p = counts / static_cast<double>(budget);
    pin_probability_sum(coeffs.p);
    coeffs.source = ChaosCoefficients::Source::argmax_counts;
    coeffs.sample_count = budget;
    return coeffs;
}

ChaosCoefficients q1_coefficients_softmax(GaussianEnsemble& ensemble, double beta,
                                          std::size_t budget, std::uint64_t master_seed,
                                          std::uint64_t replicate_offset) {
    if (budget == 0) throw std::invalid_argument("coefficient estimation needs budget >= 1");
    if (!(beta > 0.0)) throw std::invalid_argument("softmax coefficients require beta > 0");
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(ensemble.size());
    for (std::size_t r = 0; r < budget; ++r) {
        RngStream stream(master_seed, replicate_offset + r, StreamPurpose::base_field);
        sum += softmax_gradient(ensemble.sample(stream), beta);
    }
    ChaosCoefficients coeffs;
    coeffs.p = sum / static_cast<double>(budget);
    pin_probability_sum(coeffs.p);
    coeffs.source = ChaosCoefficients::Source::softmax_expectation;
    coeffs.beta = beta;
    coeffs.sample_count = budget;
    return coeffs;
}

EstimateWithError chatterjee_variance(GaussianEnsemble& ensemble, std::size_t budget,
                                      std::uint64_t master_seed, bool stratified, int strata,
                                      std::uint64_t replicate_offset) {
    if (budget == 0) throw std::invalid_argument("Chatterjee estimator needs budget >= 1");
    if (stratified && (strata < 1 || budget < static_cast<std::size_t>(strata))) {
        throw std::invalid_argument("stratified estimator needs budget >= strata");
    }
    const int bins = stratified ? strata : 1;
    std::vector<double> bin_sum(bins, 0.0);
    std::vector<double> bin_sq(bins, 0.0);
    std::vector<std::size_t> bin_count(bins, 0);
    for (std::size_t r = 0; r < budget; ++r) {
        const std::uint64_t replicate = replicate_offset + r;
        RngStream time_stream(master_seed, replicate, StreamPurpose::coupling_time);
        const double u = time_stream.next_unit();
        const int bin = stratified ? static_cast<int>(r % strata) : 0;
        const double t = stratified ? (static_cast<double>(bin) + u) / strata : u;
        RngStream stream_a(master_seed, replicate, StreamPurpose::base_field);
        RngStream stream_b(master_seed, replicate, StreamPurpose::independent_copy);
        auto [base, copy] = ensemble.sample_pair(stream_a, stream_b);
        const Eigen::Index i = argmax_max(base).index;
        const Eigen::Index j = argmax_max(couple_values(base, t, copy)).index;
        const double value = ensemble.covariance(i, j);
        bin_sum[bin] += value;
        bin_sq[bin] += value * value;
        bin_count[bin] += 1;
    }
    EstimateWithError out;
    double variance_of_mean = 0.0;
    for (int b = 0; b < bins; ++b) {
        const double n = static_cast<double>(bin_count[b]);
        const double mean = bin_sum[b] / n;
        out.value += mean / bins;
        if (bin_count[b] > 1) {
            const double var = (bin_sq[b] - n * mean * mean) / (n - 1.0);
            variance_of_mean += std::max(var, 0.0) / n / (bins * double(bins));
        }
    }
    out.se = std::sqrt(variance_of_mean);
    return out;
}

EstimateWithError var_q1_from_indices(const GaussianEnsemble& ensemble,
                                      const std::vector<Eigen::Index>& argmax_indices) {
    const std::size_t pairs = argmax_indices.size() / 2;
    if (pairs == 0) throw std::invalid_argument("pair estimator needs >= 2 indices");
    double sum = 0.0;
    double sq = 0.0;
    for (std::size_t k = 0; k < pairs; ++k) {
        const double value = ensemble.covariance(argmax_indices[2 * k], argmax_indices[2 * k + 1]);
        sum += value;
        sq += value * value;
    }
    EstimateWithError out;
    const double n = static_cast<double>(pairs);
    out.value = sum / n;
    if (pairs > 1) {
        const double var = (sq - n * out.value * out.value) / (n - 1.0);
        out.se = std::sqrt(std::max(var, 0.0) / n);
    }
    return out;
}

ResidualCheck projection_residual_check(GaussianEnsemble& ensemble,
                                        const ChaosCoefficients& coeffs, std::size_t budget,
                                        std::uint64_t master_seed,
                                        std::uint64_t replicate_offset) {
    const Eigen::Index n = ensemble.size();
    if (coeffs.p.size() != n) throw std::invalid_argument("coefficients do not match the ensemble");
    if (budget < 2) throw std::invalid_argument("residual check needs budget >= 2");

    // First pass accumulators for Cov[M - Q1, X_j] over the evaluation batch.
    std::vector<double> residuals(budget);
    Eigen::MatrixXd fields(n, budget);
    for (std::size_t r = 0; r < budget; ++r) {
        RngStream stream(master_seed, replicate_offset + r, StreamPurpose::base_field);
        const Eigen::VectorXd values = ensemble.sample(stream);
        residuals[r] = argmax_max(values).value - q1_value(values, coeffs);
        fields.col(r) = values;
    }
    const double nb = static_cast<double>(budget);
    const double res_mean = mean_of(residuals);
    const Eigen::VectorXd field_mean = fields.rowwise().mean();

    ResidualCheck out;
    out.covariances.resize(n);
    out.ses.resize(n);

    // Coefficient-noise term: Var[sum_i (p^_i - p_i) K_ij] = (K Sigma_p K)_jj / N_A
    // with Sigma_p = diag(p) - p p^T, evaluated at the plug-in p^.
    Eigen::MatrixXd covariance(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) covariance(i, j) = ensemble.covariance(i, j);
    }
    const Eigen::MatrixXd sigma_p =
        Eigen::MatrixXd(coeffs.p.asDiagonal()) - coeffs.p * coeffs.p.transpose();
    const Eigen::MatrixXd coeff_noise = covariance * sigma_p * covariance;
    const double n_a = static_cast<double>(std::max<std::size_t>(coeffs.sample_count, 1));

    for (Eigen::Index j = 0; j < n; ++j) {
        double cov_sum = 0.0;
        double sq_sum = 0.0;
        for (std::size_t r = 0; r < budget; ++r) {
            const double term = (residuals[r] - res_mean) * (fields(j, r) - field_mean[j]);
            cov_sum += term;
            sq_sum += term * term;
        }
        const double cov = cov_sum / (nb - 1.0);
        const double term_var = (sq_sum / nb - (cov_sum / nb) * (cov_sum / nb));
        out.covariances[j] = cov;
        out.ses[j] = std::sqrt(std::max(term_var, 0.0) / nb + coeff_noise(j, j) / n_a);
    }
    return out;
}

double standardized_l2_gap(double var_x, double var_y) {
    if (!(var_x > 0.0) || !(var_y > 0.0)) {
        throw std::domain_error("standardized_l2_gap requires positive variances");
    }
    if (var_y > var_x) {
        throw std::domain_error("standardized_l2_gap requires var_y <= var_x");
    }
    return 2.0 * (1.0 - std::sqrt(var_y / var_x));
}

VarianceReport make_variance_report(GaussianEnsemble& ensemble, std::size_t coeff_budget,
                                    std::size_t eval_budget, std::uint64_t master_seed) {
    const Eigen::Index n = ensemble.size();
    if (n > 4096) throw std::invalid_argument("variance report materialises K; use n <= 4096");

    const ChaosCoefficients coeffs =
        q1_coefficients_argmax(ensemble, coeff_budget, master_seed, /*replicate_offset=*/0);

    std::vector<double> maxima(eval_budget);
    std::vector<double> q1s(eval_budget);
    for (std::size_t r = 0; r < eval_budget; ++r) {
        RngStream stream(master_seed, coeff_budget + r, StreamPurpose::base_field);
        const Eigen::VectorXd values = ensemble.sample(stream);
        maxima[r] = argmax_max(values).value;
        q1s[r] = q1_value(values, coeffs);
    }
    const MomentSummary m_stats = summarize(maxima);
    const MomentSummary q1_stats = summarize(q1s);

    Eigen::MatrixXd covariance(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) covariance(i, j) = ensemble.covariance(i, j);
    }

    VarianceReport report;
    report.mean_m = m_stats.mean;
    report.se_mean_m = m_stats.se_mean;
    report.var_m_direct = m_stats.variance;
    report.se_var_m_direct = m_stats.se_variance;
    report.var_q1_sample = q1_stats.variance;
    report.se_var_q1_sample = q1_stats.se_variance;
    report.var_q1_formula = var_q1_formula(coeffs, covariance);
    {
        // Delta method through the quadratic form: grad = 2 K p.
        const Eigen::VectorXd grad = 2.0 * (covariance * coeffs.p);
        const Eigen::VectorXd weighted = coeffs.p.asDiagonal() * grad;
        const double quad =
            grad.dot(weighted) - (grad.dot(coeffs.p)) * (grad.dot(coeffs.p));
        report.se_var_q1_formula =
            std::sqrt(std::max(quad, 0.0) / static_cast<double>(coeff_budget));
    }
    const EstimateWithError chat = chatterjee_variance(
        ensemble, eval_budget, master_seed, /*stratified=*/false, /*strata=*/16,
        /*replicate_offset=*/coeff_budget + eval_budget);
    report.var_m_chatterjee = chat.value;
    report.se_var_m_chatterjee = chat.se;
    report.ratio = report.var_q1_formula / report.var_m_direct;
    {
        const double rel_a = report.se_var_q1_formula / report.var_q1_formula;
        const double rel_b = report.se_var_m_direct / report.var_m_direct;
        report.se_ratio = std::abs(report.ratio) * std::sqrt(rel_a * rel_a + rel_b * rel_b);
    }
    report.coeff_replicates = coeff_budget;
    report.eval_replicates = eval_budget;
    report.plug_in_bias_bound = static_cast<double>(n) / static_cast<double>(coeff_budget);
    return report;
}

}  // namespace gpmax
