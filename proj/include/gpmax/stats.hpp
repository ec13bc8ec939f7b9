#pragma once

#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace gpmax {

/// Two-pass moment summary with standard errors for both the mean and the
/// (unbiased) variance; se_variance uses the fourth central moment.
struct MomentSummary {
    std::size_t count = 0;
    double mean = 0.0;
    double variance = 0.0;
    double se_mean = 0.0;
    double se_variance = 0.0;
};

MomentSummary summarize(const std::vector<double>& sample);

double mean_of(const std::vector<double>& sample);
double variance_of(const std::vector<double>& sample);  // unbiased

double normal_pdf(double x);
double normal_cdf(double x);

/// Inverse standard normal CDF, accurate to ~1e-14 (initial rational
/// approximation polished by Newton steps on erfc).
double normal_quantile(double p);

/// One-sample Kolmogorov-Smirnov statistic against an arbitrary CDF.
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);

/// KS statistic of the sample standardised by its own mean/sd against N(0,1).
double ks_statistic_normal(const std::vector<double>& sample);

/// Survival function of the Kolmogorov distribution, Q(lambda).
double kolmogorov_sf(double lambda);

/// Approximate p-value for a one-sample KS statistic at effective size n_eff
/// (Stephens' correction); also used two-sample with n_eff = n1 n2/(n1+n2).
double ks_p_value(double statistic, double n_eff);

struct TwoSampleKs {
    double statistic = 0.0;
    double p_value = 1.0;
};

TwoSampleKs ks_two_sample(std::vector<double> a, std::vector<double> b);

struct GumbelFit {
    double location = 0.0;
    double scale = 1.0;
};

/// Maximum-likelihood Gumbel fit (fixed-point iteration on the scale).
GumbelFit gumbel_fit_ml(const std::vector<double>& sample);

double gumbel_cdf(double x, const GumbelFit& fit);

/// KS statistic of the sample against its own ML Gumbel fit.
double ks_statistic_gumbel(const std::vector<double>& sample);

struct WilsonInterval {
    double lower = 0.0;
    double upper = 1.0;
};

/// Wilson score interval for a binomial proportion at normal quantile z.
WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double se_slope = 0.0;
};

/// Ordinary least squares with residual-based slope standard error.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Weighted least squares with known per-point standard errors.
LineFit fit_line_weighted(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& se_y);

/// Plotting positions for a normal QQ plot: (theoretical, observed) pairs at
/// probabilities (i - 1/2)/n of the standardised sample.
std::vector<std::pair<double, double>> qq_points_normal(std::vector<double> sample);

struct TrendPoint {
    double value = 0.0;
    double se = 0.0;
};

/// Merges adjacent points whose difference is below z times the combined
/// standard error (inverse-variance pooling), left to right.  The result is
/// the sequence of statistically distinguishable levels.
std::vector<TrendPoint> merge_indistinguishable(const std::vector<double>& values,
                                                const std::vector<double>& ses, double z);

/// True when the merged sequence never significantly decreases, i.e. every
/// consecutive merged pair satisfies next >= prev (groups are already
/// z-separated, so a decrease between groups is a significant decrease).
bool trend_nondecreasing(const std::vector<TrendPoint>& merged);

}  // namespace gpmax
