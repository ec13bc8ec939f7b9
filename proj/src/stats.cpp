#include "gpmax/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gpmax {

namespace {
constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;
}  // namespace

MomentSummary summarize(const std::vector<double>& sample) {
    MomentSummary out;
    out.count = sample.size();
    if (sample.empty()) return out;
    const double n = static_cast<double>(sample.size());
    double sum = 0.0;
    for (double v : sample) sum += v;
    out.mean = sum / n;
    if (sample.size() < 2) return out;
    double m2 = 0.0;
    double m4 = 0.0;
    for (double v : sample) {
        const double d = v - out.mean;
        const double d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    out.variance = m2 / (n - 1.0);
    m2 /= n;
    m4 /= n;
    out.se_mean = std::sqrt(out.variance / n);
    // Var[s^2] = (m4 - sigma^4 (n-3)/(n-1)) / n with plug-in central moments.
    const double var_of_var = (m4 - m2 * m2 * (n - 3.0) / (n - 1.0)) / n;
    out.se_variance = var_of_var > 0.0 ? std::sqrt(var_of_var) : 0.0;
    return out;
}

double mean_of(const std::vector<double>& sample) {
    if (sample.empty()) throw std::invalid_argument("mean of empty sample");
    double sum = 0.0;
    for (double v : sample) sum += v;
    return sum / static_cast<double>(sample.size());
}

double variance_of(const std::vector<double>& sample) {
    if (sample.size() < 2) throw std::invalid_argument("variance needs >= 2 points");
    const double mu = mean_of(sample);
    double m2 = 0.0;
    for (double v : sample) m2 += (v - mu) * (v - mu);
    return m2 / (static_cast<double>(sample.size()) - 1.0);
}

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("quantile requires p in (0,1)");
    if (p > 0.5) return -normal_quantile(1.0 - p);
    // Abramowitz & Stegun 26.2.22 initial guess (|error| < 3e-3), then Newton.
    const double t = std::sqrt(-2.0 * std::log(p));
    double x = -(t - (2.30753 + 0.27061 * t) / (1.0 + 0.99229 * t + 0.04481 * t * t));
    for (int iter = 0; iter < 6; ++iter) {
        const double err = normal_cdf(x) - p;
        const double density = normal_pdf(x);
        if (density <= 0.0) break;
        double step = err / density;
        if (std::abs(step) > 1.0) step = step > 0.0 ? 1.0 : -1.0;
        x -= step;
        if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(x))) break;
    }
    return x;
}

double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
    if (sample.empty()) throw std::invalid_argument("KS statistic of empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        const double upper = (static_cast<double>(i) + 1.0) / n - f;
        const double lower = f - static_cast<double>(i) / n;
        d = std::max({d, upper, lower});
    }
    return d;
}

double ks_statistic_normal(const std::vector<double>& sample) {
    const MomentSummary s = summarize(sample);
    if (s.count < 2 || s.variance <= 0.0) {
        throw std::invalid_argument("normal KS needs a non-degenerate sample");
    }
    const double sd = std::sqrt(s.variance);
    std::vector<double> standardized(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) standardized[i] = (sample[i] - s.mean) / sd;
    return ks_statistic(std::move(standardized), [](double x) { return normal_cdf(x); });
}

double kolmogorov_sf(double lambda) {
    if (lambda < 0.2) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        sum += sign * term;
        sign = -sign;
        if (term < 1e-14) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_p_value(double statistic, double n_eff) {
    const double root = std::sqrt(n_eff);
    return kolmogorov_sf((root + 0.12 + 0.11 / root) * statistic);
}

TwoSampleKs ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("two-sample KS needs both samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t ia = 0;
    std::size_t ib = 0;
    double d = 0.0;
    while (ia < a.size() && ib < b.size()) {
        const double x = std::min(a[ia], b[ib]);
        while (ia < a.size() && a[ia] <= x) ++ia;
        while (ib < b.size() && b[ib] <= x) ++ib;
        d = std::max(d, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
    }
    TwoSampleKs out;
    out.statistic = d;
    out.p_value = ks_p_value(d, na * nb / (na + nb));
    return out;
}

GumbelFit gumbel_fit_ml(const std::vector<double>& sample) {
    if (sample.size() < 2) throw std::invalid_argument("Gumbel fit needs >= 2 points");
    const MomentSummary s = summarize(sample);
    const double sd = std::sqrt(std::max(s.variance, 1e-300));
    double scale = sd * std::sqrt(6.0) / std::numbers::pi;  // moment start
    const double x_max = *std::max_element(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    // MLE fixed point: beta = mean(x) - sum(x e^{-x/beta}) / sum(e^{-x/beta}).
    for (int iter = 0; iter < 200; ++iter) {
        double num = 0.0;
        double den = 0.0;
        for (double x : sample) {
            const double w = std::exp(-(x - x_max) / scale);  // shifted for stability
            num += x * w;
            den += w;
        }
        const double next = s.mean - num / den;
        if (!(next > 0.0)) break;
        const double change = std::abs(next - scale);
        scale = next;
        if (change < 1e-12 * scale) break;
    }
    double log_mean_exp = 0.0;
    {
        double den = 0.0;
        for (double x : sample) den += std::exp(-(x - x_max) / scale);
        log_mean_exp = std::log(den / n) - x_max / scale;
    }
    GumbelFit fit;
    fit.scale = scale;
    fit.location = -scale * log_mean_exp;
    return fit;
}

double gumbel_cdf(double x, const GumbelFit& fit) {
    return std::exp(-std::exp(-(x - fit.location) / fit.scale));
}

double ks_statistic_gumbel(const std::vector<double>& sample) {
    const GumbelFit fit = gumbel_fit_ml(sample);
    return ks_statistic(sample, [fit](double x) { return gumbel_cdf(x, fit); });
}

WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z) {
    if (trials == 0) throw std::invalid_argument("Wilson interval needs trials >= 1");
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line needs n >= 2");
    const double n = static_cast<double>(x.size());
    const double xbar = mean_of(x);
    const double ybar = mean_of(y);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - xbar) * (x[i] - xbar);
        sxy += (x[i] - xbar) * (y[i] - ybar);
    }
    if (sxx <= 0.0) throw std::invalid_argument("fit_line: degenerate x values");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = ybar - fit.slope * xbar;
    if (x.size() > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - fit.intercept - fit.slope * x[i];
            rss += r * r;
        }
        fit.se_slope = std::sqrt(rss / (n - 2.0) / sxx);
    }
    return fit;
}

LineFit fit_line_weighted(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& se_y) {
    if (x.size() != y.size() || x.size() != se_y.size() || x.size() < 2) {
        throw std::invalid_argument("fit_line_weighted needs matching n >= 2");
    }
    double wsum = 0.0;
    double wx = 0.0;
    double wy = 0.0;
    std::vector<double> w(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(se_y[i] > 0.0)) throw std::invalid_argument("fit_line_weighted: se must be > 0");
        w[i] = 1.0 / (se_y[i] * se_y[i]);
        wsum += w[i];
        wx += w[i] * x[i];
        wy += w[i] * y[i];
    }
    const double xbar = wx / wsum;
    const double ybar = wy / wsum;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += w[i] * (x[i] - xbar) * (x[i] - xbar);
        sxy += w[i] * (x[i] - xbar) * (y[i] - ybar);
    }
    if (sxx <= 0.0) throw std::invalid_argument("fit_line_weighted: degenerate x values");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = ybar - fit.slope * xbar;
    fit.se_slope = std::sqrt(1.0 / sxx);  // known-variance WLS
    return fit;
}

std::vector<std::pair<double, double>> qq_points_normal(std::vector<double> sample) {
    if (sample.empty()) throw std::invalid_argument("QQ plot of empty sample");
    const MomentSummary s = summarize(sample);
    const double sd = s.variance > 0.0 ? std::sqrt(s.variance) : 1.0;
    std::sort(sample.begin(), sample.end());
    std::vector<std::pair<double, double>> points(sample.size());
    const double n = static_cast<double>(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double p = (static_cast<double>(i) + 0.5) / n;
        points[i] = {normal_quantile(p), (sample[i] - s.mean) / sd};
    }
    return points;
}

std::vector<TrendPoint> merge_indistinguishable(const std::vector<double>& values,
                                                const std::vector<double>& ses, double z) {
    if (values.size() != ses.size()) throw std::invalid_argument("values/ses size mismatch");
    std::vector<TrendPoint> merged;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double se = std::max(ses[i], 1e-300);
        if (!merged.empty()) {
            TrendPoint& group = merged.back();
            const double combined = std::sqrt(group.se * group.se + se * se);
            if (std::abs(values[i] - group.value) < z * combined) {
                // Pool by inverse variance.
                const double wg = 1.0 / (group.se * group.se);
                const double wi = 1.0 / (se * se);
                group.value = (wg * group.value + wi * values[i]) / (wg + wi);
                group.se = std::sqrt(1.0 / (wg + wi));
                continue;
            }
        }
        merged.push_back({values[i], se});
    }
    return merged;
}

bool trend_nondecreasing(const std::vector<TrendPoint>& merged) {
    for (std::size_t i = 1; i < merged.size(); ++i) {
        if (merged[i].value < merged[i - 1].value) return false;
    }
    return true;
}

}  // namespace gpmax
