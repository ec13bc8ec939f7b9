#pragma once

#include <vector>

#include "gpmax/kernels.hpp"

namespace gpmax {

enum class FlatnessVerdict { pass, fail, inconclusive };

const char* verdict_name(FlatnessVerdict verdict);

/// Asymptotic-flatness check: per scale v, the sup over u in [v^-beta, 1]
/// (256 log-spaced points) of |w(uv)/w(v) - 1|; the limsup is proxied by the
/// maximum over the top decade of the v-grid.
struct FlatnessReport {
    double eta = 0.0;
    double beta = 0.0;
    std::vector<double> v_grid;
    std::vector<double> sup_stats;
    double top_decade_max = 0.0;
    FlatnessVerdict verdict = FlatnessVerdict::inconclusive;
};

FlatnessReport flatness_check(const KernelProfile& profile, double eta, double beta,
                              double v_max);

/// Slow-variation probe at fixed u: the deviation |w(u v)/w(v) - 1| along a
/// geometric v-grid (slowly varying profiles trend to 0).
struct RatioTrendPoint {
    double v = 0.0;
    double deviation = 0.0;
};

std::vector<RatioTrendPoint> slow_variation_check(const KernelProfile& profile, double u_fixed,
                                                  double v_max);

/// The sequence w(r) log(r) on a geometric r-grid, with the regime read off
/// by comparing the head and tail decades: divergence (strong), a finite
/// positive limit (boundary) or decay to zero (Berman).
struct RegimeSequence {
    std::vector<double> r_grid;
    std::vector<double> values;
    Regime classified = Regime::berman;
};

RegimeSequence k_logr_divergence(const KernelProfile& profile,
                                 const std::vector<double>& r_grid);

/// Convenience geometric grid 10^1 .. 10^12 for the regime classifier.
std::vector<double> default_regime_grid();

/// Scaled Ho-McCormick regularity statistic (1/n) sum_{k=1}^n |K(k) - K(n)|
/// times log n on unit lattice spacing; the regularity condition holds iff
/// the sequence tends to 0.
std::vector<RatioTrendPoint> hm_regularity(const KernelProfile& profile,
                                           const std::vector<long long>& n_grid);

}  // namespace gpmax
