#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "gpmax/limitlab.hpp"
#include "gpmax/rng.hpp"
#include "gpmax/stats.hpp"

using namespace gpmax;
using doctest::Approx;

namespace {

constexpr std::uint64_t kSeed = 271828;

LimitExperimentSpec iid_spec(std::vector<double> schedule, std::size_t replicates) {
    LimitExperimentSpec spec;
    spec.model = CovarianceModel(KernelProfile::iid_delta(), 1);
    spec.r_schedule = std::move(schedule);
    spec.mesh = 1.0;
    spec.replicates = replicates;
    spec.master_seed = kSeed;
    spec.workers = 2;
    return spec;
}

/// Naive window-count reference sharing the probe's sliding positions
/// (half-window steps plus the flush to the boundary).
std::vector<Eigen::Index> window_starts_ref(Eigen::Index per, Eigen::Index win) {
    std::vector<Eigen::Index> starts;
    const Eigen::Index step = std::max<Eigen::Index>(1, win / 2);
    for (Eigen::Index s = 0; s + win <= per; s += step) starts.push_back(s);
    if (starts.empty() || starts.back() != per - win) starts.push_back(per - win);
    return starts;
}

double brute_force_mass_1d(const std::vector<Eigen::Index>& argmaxes, Eigen::Index per,
                           Eigen::Index win) {
    double best = 0.0;
    for (Eigen::Index start : window_starts_ref(per, win)) {
        std::size_t count = 0;
        for (Eigen::Index a : argmaxes)
            if (a >= start && a < start + win) ++count;
        best = std::max(best, static_cast<double>(count) / argmaxes.size());
    }
    return best;
}

double brute_force_mass_2d(const std::vector<Eigen::Index>& argmaxes, Eigen::Index per,
                           Eigen::Index win) {
    const auto starts = window_starts_ref(per, win);
    double best = 0.0;
    for (Eigen::Index sr : starts) {
        for (Eigen::Index sc : starts) {
            std::size_t count = 0;
            for (Eigen::Index a : argmaxes) {
                const Eigen::Index row = a / per, col = a % per;
                if (row >= sr && row < sr + win && col >= sc && col < sc + win) ++count;
            }
            best = std::max(best, static_cast<double>(count) / argmaxes.size());
        }
    }
    return best;
}

}  // namespace

TEST_SUITE("limitlab") {

TEST_CASE("alpha slack closed forms") {
    // 2/(1+t) - (3-t)/2 at t = 0.5: 4/3 - 5/4 = 1/12.
    CHECK(alpha_slack(0.5) == Approx(1.0 / 12.0).epsilon(1e-14));
    CHECK(alpha_slack(1.0) == 0.0);
    // t -> 0+ tends to 1/2.
    CHECK(alpha_slack(1e-9) == Approx(0.5).epsilon(1e-6));
    // Equivalent form (1-t)^2 / (2 (1+t)) on a grid.
    for (double t = 0.05; t <= 1.0; t += 0.05) {
        CHECK(alpha_slack(t) ==
              Approx((1.0 - t) * (1.0 - t) / (2.0 * (1.0 + t))).epsilon(1e-13));
    }
}

TEST_CASE("alpha inequality table has nonnegative slack, zero only at t=1") {
    const AlphaTable table = alpha_inequality_table(1e-3);
    REQUIRE(table.t.size() == 1000);
    CHECK(table.t.back() == 1.0);
    CHECK(table.min_slack == 0.0);
    CHECK(table.argmin_t == 1.0);
    for (std::size_t k = 0; k < table.t.size(); ++k) {
        CHECK(table.slack[k] >= 0.0);
        if (table.t[k] < 1.0) CHECK(table.slack[k] > 0.0);
    }
    // The t = 0.5 entry carries the 1/12 arithmetic oracle.
    for (std::size_t k = 0; k < table.t.size(); ++k) {
        if (std::abs(table.t[k] - 0.5) < 1e-9) {
            CHECK(table.slack[k] == Approx(1.0 / 12.0).epsilon(1e-9));
        }
    }
    CHECK_THROWS_AS(alpha_inequality_table(2e-3), std::invalid_argument);
    CHECK_THROWS_AS(alpha_inequality_table(0.0), std::invalid_argument);
    CHECK_THROWS_AS(alpha_inequality_table(-1e-4), std::invalid_argument);
}

TEST_CASE("window mass matches a naive reference on random argmaxes") {
    RngStream stream(kSeed, 0, StreamPurpose::scratch);

    const LatticeGrid grid1(1, 32.0, 1.0);  // per = 33, win = 6 at beta 0.5
    std::vector<Eigen::Index> arg1(500);
    for (auto& a : arg1)
        a = static_cast<Eigen::Index>(stream.next_unit() * static_cast<double>(grid1.size())) %
            grid1.size();
    const WindowMass mass1 = max_window_mass(arg1, grid1, 0.5);
    CHECK(mass1.mass ==
          Approx(brute_force_mass_1d(arg1, grid1.per_axis(), mass1.window_points_per_axis))
              .epsilon(1e-12));
    CHECK(mass1.fraction == Approx(static_cast<double>(mass1.window_points_per_axis) /
                                   static_cast<double>(grid1.size()))
                                .epsilon(1e-12));
    CHECK(mass1.se > 0.0);

    const LatticeGrid grid2(2, 12.0, 1.0);  // per = 13
    std::vector<Eigen::Index> arg2(500);
    for (auto& a : arg2)
        a = static_cast<Eigen::Index>(stream.next_unit() * static_cast<double>(grid2.size())) %
            grid2.size();
    const WindowMass mass2 = max_window_mass(arg2, grid2, 0.5);
    CHECK(mass2.mass ==
          Approx(brute_force_mass_2d(arg2, grid2.per_axis(), mass2.window_points_per_axis))
              .epsilon(1e-12));
    const double win2 = static_cast<double>(mass2.window_points_per_axis);
    CHECK(mass2.fraction == Approx(win2 * win2 / static_cast<double>(grid2.size())).epsilon(1e-12));
}

TEST_CASE("window mass degenerate cases") {
    const LatticeGrid grid(1, 16.0, 1.0);  // per = 17
    // All argmaxes concentrated on one site: mass 1 wherever the site falls.
    const std::vector<Eigen::Index> at_zero(40, 0);
    CHECK(max_window_mass(at_zero, grid, 0.5).mass == 1.0);
    // The flush window reaches the final site.
    const std::vector<Eigen::Index> at_end(40, 16);
    CHECK(max_window_mass(at_end, grid, 0.5).mass == 1.0);
    // Perfect round-robin: every window of `win` sites holds exactly win/n of
    // the mass, so mass equals fraction exactly (exchangeability limit).
    std::vector<Eigen::Index> uniform(17);
    for (Eigen::Index i = 0; i < 17; ++i) uniform[static_cast<std::size_t>(i)] = i;
    const WindowMass round_robin = max_window_mass(uniform, grid, 0.5);
    CHECK(round_robin.mass == Approx(round_robin.fraction).epsilon(1e-12));
    // Window shrinks as beta grows.
    CHECK(max_window_mass(at_zero, grid, 0.9).window_points_per_axis <
          max_window_mass(at_zero, grid, 0.1).window_points_per_axis);
}

TEST_CASE("limit experiment on the iid model: fields and closed forms") {
    const LimitExperimentResult result = run_limit_experiment(iid_spec({64.0, 128.0}, 400));
    REQUIRE(result.levels.size() == 2);
    REQUIRE(result.maxima.size() == 2);
    REQUIRE(result.argmaxes.size() == 2);
    CHECK(result.maxima[0].size() == 400);

    const LevelStats& lv0 = result.levels[0];
    const LevelStats& lv1 = result.levels[1];
    CHECK(lv0.side == 64.0);
    CHECK(lv0.points_per_axis == 65);
    CHECK(lv0.points == 65);
    CHECK(lv0.replicates == 400);
    CHECK(lv0.tie_count == 0);
    CHECK(lv0.repaired == false);

    // Internal consistency: growth ratio is mean / sqrt(2 d log N).
    const double rate0 = std::sqrt(2.0 * std::log(65.0));
    CHECK(lv0.growth_ratio == Approx(lv0.mean_m / rate0).epsilon(1e-12));
    CHECK(lv0.se_growth_ratio == Approx(lv0.se_mean_m / rate0).epsilon(1e-12));
    // w(R) = 0 for iid-delta: the Var[M]/w diagnostic is parked at zero.
    CHECK(lv0.var_m_over_w == 0.0);
    // Uniform argmax: Var[Q1] = sum p_i^2 ~ 1/n, tiny.
    CHECK(lv0.var_q1 >= 0.0);
    CHECK(lv0.var_q1 <= 0.2);
    // Exchangeability: max window mass matches the window fraction.
    CHECK(std::abs(lv0.max_window_mass - lv0.window_fraction) <= 5.0 * lv0.se_window_mass);
    CHECK(std::abs(lv1.max_window_mass - lv1.window_fraction) <= 5.0 * lv1.se_window_mass);
    // The mean grows with the grid.
    CHECK(lv1.mean_m > lv0.mean_m);

    const GrowthCheck growth = growth_check(result);
    CHECK(growth.sides == std::vector<double>{64.0, 128.0});
    CHECK(growth.increasing == true);
    CHECK(growth.band_lo == 0.6);
    CHECK(growth.band_hi == 1.1);

    const DelocalisationResult deloc = delocalisation_probe(result, 0.5);
    REQUIRE(deloc.sides.size() == 2);
    CHECK(deloc.slope < 0.0);  // masses track the shrinking fraction
    CHECK(deloc.beta_prime == Approx(-deloc.slope).epsilon(1e-12));
    CHECK(deloc.se_slope > 0.0);

    // iid: w(R) = 0, so gamma_R is just the mean.
    const auto scaling = scaling_constants_study(result);
    REQUIRE(scaling.size() == 2);
    CHECK(scaling[0].side == 64.0);
    CHECK(scaling[0].gamma == Approx(lv0.mean_m).epsilon(1e-12));
    CHECK(scaling[0].se == Approx(lv0.se_mean_m).epsilon(1e-12));
}

TEST_CASE("two-point lattice growth ratio matches the closed form") {
    // side 1, mesh 1: N = 2, E[M] = 1/sqrt(pi), rate sqrt(2 log 2).
    const LimitExperimentResult result = run_limit_experiment(iid_spec({1.0}, 4000));
    REQUIRE(result.levels.size() == 1);
    const LevelStats& lv = result.levels[0];
    const double target = (1.0 / std::sqrt(std::numbers::pi)) / std::sqrt(2.0 * std::log(2.0));
    CHECK(std::abs(lv.growth_ratio - target) <= 3.0 * lv.se_growth_ratio);
    // 0.479 sits below the asserted top-R band (band applies at scale only).
    CHECK(growth_check(result).top_in_band == false);
}

TEST_CASE("the maximum of two iid normals is detectably non-normal") {
    // Closed-form CDF Phi(x)^2: KS distance from the best normal ~ 0.0094.
    LimitExperimentSpec spec = iid_spec({1.0}, 100000);
    const LimitExperimentResult result = run_limit_experiment(spec);
    const double d = result.levels[0].ks_normal;
    CHECK(d > 0.004);
    CHECK(ks_p_value(d, 100000.0) < 0.01);
}

TEST_CASE("limit experiment validates its spec") {
    CHECK_THROWS_AS(run_limit_experiment(iid_spec({}, 400)), std::invalid_argument);
    CHECK_THROWS_AS(run_limit_experiment(iid_spec({64.0, 32.0}, 400)), std::invalid_argument);
    CHECK_THROWS_AS(run_limit_experiment(iid_spec({64.0, 64.0}, 400)), std::invalid_argument);
    CHECK_THROWS_AS(run_limit_experiment(iid_spec({-8.0, 64.0}, 400)), std::invalid_argument);
    CHECK_THROWS_AS(run_limit_experiment(iid_spec({64.0}, 7)), std::invalid_argument);
    LimitExperimentSpec bad_mesh = iid_spec({64.0}, 400);
    bad_mesh.mesh = 0.0;
    CHECK_THROWS_AS(run_limit_experiment(bad_mesh), std::invalid_argument);
    LimitExperimentSpec tiny = iid_spec({0.5}, 400);  // one point per axis
    CHECK_THROWS_AS(run_limit_experiment(tiny), std::invalid_argument);
    LimitExperimentSpec bad_beta = iid_spec({64.0}, 400);
    bad_beta.deloc_beta = 0.0;
    CHECK_THROWS_AS(run_limit_experiment(bad_beta), std::invalid_argument);
    bad_beta.deloc_beta = 1.0;
    CHECK_THROWS_AS(run_limit_experiment(bad_beta), std::invalid_argument);
}

TEST_CASE("growth and delocalisation checks on hand-built levels") {
    LimitExperimentResult result;
    result.spec.model = CovarianceModel(KernelProfile::iid_delta(), 1);
    LevelStats a, b;
    a.side = 10.0;
    a.growth_ratio = 0.50;
    a.se_growth_ratio = 1e-6;
    b.side = 20.0;
    b.growth_ratio = 0.49;
    b.se_growth_ratio = 1e-6;
    result.levels = {a, b};
    const GrowthCheck falling = growth_check(result);
    CHECK(falling.increasing == false);
    CHECK(falling.top_in_band == false);

    result.levels[1].growth_ratio = 0.8;
    const GrowthCheck rising = growth_check(result);
    CHECK(rising.increasing == true);
    CHECK(rising.top_in_band == true);

    result.levels[1].growth_ratio = 1.2;
    CHECK(growth_check(result).top_in_band == false);

    // Statistically indistinguishable levels merge into one plateau, which
    // counts as nondecreasing.
    result.levels[0].growth_ratio = 0.8;
    result.levels[0].se_growth_ratio = 0.1;
    result.levels[1].growth_ratio = 0.79;
    result.levels[1].se_growth_ratio = 0.1;
    const GrowthCheck merged = growth_check(result);
    CHECK(merged.merged.size() == 1);
    CHECK(merged.increasing == true);

    LimitExperimentResult empty;
    CHECK_THROWS_AS(growth_check(empty), std::invalid_argument);
    CHECK_THROWS_AS(delocalisation_probe(empty, 0.5), std::invalid_argument);

    LimitExperimentResult single;
    single.levels = {a};
    CHECK_THROWS_AS(delocalisation_probe(single, 0.5), std::invalid_argument);
}

TEST_CASE("scaling study skips flat-top levels and rejects all-flat results") {
    LimitExperimentResult result;
    result.spec.model = CovarianceModel(KernelProfile::boundary_log(10.0), 1);
    LevelStats flat;
    flat.side = 100.0;  // inside the flat top: w(100) = 1
    flat.mean_m = 3.0;
    flat.se_mean_m = 0.1;
    result.levels = {flat};
    CHECK_THROWS_AS(scaling_constants_study(result), std::invalid_argument);

    LevelStats beyond;
    beyond.side = 30000.0;  // w < 1 out here
    beyond.mean_m = 3.0;
    beyond.se_mean_m = 0.1;
    result.levels = {flat, beyond};
    const auto rows = scaling_constants_study(result);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].side == 30000.0);
    const double w = KernelProfile::boundary_log(10.0)(30000.0);
    CHECK(rows[0].gamma == Approx(3.0 / std::sqrt(1.0 - w)).epsilon(1e-12));
}

TEST_CASE("scaling constant of the two-point log-power lattice is 1/sqrt(pi)") {
    LimitExperimentSpec spec;
    spec.model = CovarianceModel(KernelProfile::log_power(0.5), 1);
    spec.r_schedule = {1.0};  // two points at distance 1: rho = w(1)
    spec.mesh = 1.0;
    spec.replicates = 4000;
    spec.master_seed = kSeed + 9;
    const LimitExperimentResult result = run_limit_experiment(spec);
    const auto rows = scaling_constants_study(result);
    REQUIRE(rows.size() == 1);
    // E[M] = sqrt((1 - rho)/pi) and gamma = E[M]/sqrt(1 - rho) = 1/sqrt(pi),
    // independent of the profile.
    CHECK(std::abs(rows[0].gamma - 1.0 / std::sqrt(std::numbers::pi)) <= 3.0 * rows[0].se);
}

TEST_CASE("hypercontractivity probe on the iid line") {
    const LatticeGrid grid(1, 63.0, 1.0);  // 64 points
    auto ensemble = make_iid_ensemble(grid.size());
    const std::vector<double> t_grid{0.0, 0.5, 1.0};
    const HyperProbeReport report =
        hypercontractivity_probe(*ensemble, grid, 8, t_grid, 1500, kSeed + 1, 2);
    CHECK(report.replicates == 1500);
    CHECK(report.cells_per_axis == 8);
    CHECK(report.cell_points_per_axis == 8);
    REQUIRE(report.cells.size() == 8 * t_grid.size());
    CHECK(report.violations == 0);
    CHECK(report.worst_margin > 0.0);
    for (const auto& cell : report.cells) {
        CHECK(cell.marginal_count >= cell.joint_count);
        CHECK(cell.bound >= 0.0);
        CHECK(cell.violated == (cell.margin < 0.0));
        // t = 1 couples to the identical field: the joint event equals the
        // marginal event exactly.
        if (cell.t == 1.0) CHECK(cell.joint_count == cell.marginal_count);
        // t = 0 is the independent case: joint probability near marginal^2,
        // strictly inside the bound.
        if (cell.t == 0.0) CHECK(cell.joint <= cell.marginal + 1e-12);
    }
}

TEST_CASE("hypercontractivity probe validates its inputs") {
    const LatticeGrid grid(1, 63.0, 1.0);
    auto ensemble = make_iid_ensemble(grid.size());
    auto small = make_iid_ensemble(10);
    CHECK_THROWS_AS(hypercontractivity_probe(*small, grid, 8, {0.5}, 100, kSeed),
                    std::invalid_argument);  // size mismatch
    CHECK_THROWS_AS(hypercontractivity_probe(*ensemble, grid, 0, {0.5}, 100, kSeed),
                    std::invalid_argument);
    CHECK_THROWS_AS(hypercontractivity_probe(*ensemble, grid, 65, {0.5}, 100, kSeed),
                    std::invalid_argument);
    CHECK_THROWS_AS(hypercontractivity_probe(*ensemble, grid, 8, {1.5}, 100, kSeed),
                    std::invalid_argument);
    CHECK_THROWS_AS(hypercontractivity_probe(*ensemble, grid, 8, {-0.5}, 100, kSeed),
                    std::invalid_argument);
    CHECK_THROWS_AS(hypercontractivity_probe(*ensemble, grid, 8, {0.5}, 0, kSeed),
                    std::invalid_argument);
}

}  // TEST_SUITE
