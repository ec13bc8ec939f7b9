#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "gpmax/diagnostics.hpp"
#include "gpmax/kernels.hpp"

using namespace gpmax;
using doctest::Approx;

TEST_SUITE("diagnostics") {

TEST_CASE("log-power passes the flatness check at the reference setting") {
    const FlatnessReport report =
        flatness_check(KernelProfile::log_power(0.5), 0.1, 0.17, 1e8);
    CHECK(report.eta == 0.1);
    CHECK(report.beta == 0.17);
    CHECK(report.verdict == FlatnessVerdict::pass);
    // Asymptotic sup statistic (1 - beta)^(-a) - 1 ~ 0.0976; the finite-v
    // value frozen from an independent evaluation of the same grids.
    CHECK(report.top_decade_max == Approx(0.097643).epsilon(2e-4));
    CHECK(report.top_decade_max == Approx(std::pow(1.0 - 0.17, -0.5) - 1.0).epsilon(2e-3));
    CHECK(report.v_grid.size() == report.sup_stats.size());
    for (double s : report.sup_stats) CHECK(s >= 0.0);
}

TEST_CASE("boundary-log fails flatness with the exact ratio statistic") {
    // w(uv)/w(v) -> (log v)/(log uv) at u = v^-beta gives 1/(1-beta) - 1
    // = beta/(1-beta) ~ 0.2048 > eta.
    const FlatnessReport report =
        flatness_check(KernelProfile::boundary_log(2.0), 0.1, 0.17, 1e8);
    CHECK(report.verdict == FlatnessVerdict::fail);
    CHECK(report.top_decade_max == Approx(0.20481927710843376).epsilon(5e-3));
}

TEST_CASE("power-law fails flatness for every tested beta") {
    for (double beta : {0.1, 0.17, 0.3}) {
        const FlatnessReport report =
            flatness_check(KernelProfile::power_law(0.5), 0.1, beta, 1e8);
        CAPTURE(beta);
        CHECK(report.verdict == FlatnessVerdict::fail);
        // Ratio ~ u^-a at u = v^-beta: statistic ~ v^(a beta) - 1, which is
        // 1.51 even at the smallest beta -- an order of magnitude above eta.
        CHECK(report.top_decade_max > 1.0);
    }
}

TEST_CASE("exponential fails flatness") {
    const FlatnessReport report =
        flatness_check(KernelProfile::exponential(), 0.1, 0.17, 1e8);
    CHECK(report.verdict == FlatnessVerdict::fail);
    CHECK(report.top_decade_max > 0.1);
}

TEST_CASE("flatness verdict is monotone in eta") {
    const KernelProfile w = KernelProfile::log_power(0.5);
    const FlatnessReport tight = flatness_check(w, 0.05, 0.17, 1e8);
    const FlatnessReport loose = flatness_check(w, 0.2, 0.17, 1e8);
    // Statistic ~ 0.0976: cannot pass at 0.05 (fail or still-declining
    // inconclusive), passes at 0.2.
    CHECK(tight.verdict != FlatnessVerdict::pass);
    CHECK(loose.verdict == FlatnessVerdict::pass);
    // Smaller beta shrinks the u-window and the statistic.
    const FlatnessReport narrower = flatness_check(w, 0.1, 0.05, 1e8);
    CHECK(narrower.top_decade_max <= tight.top_decade_max + 1e-12);
}

TEST_CASE("slow variation separates log-power from power-law") {
    const auto lp = slow_variation_check(KernelProfile::log_power(0.5), 0.5, 1e8);
    REQUIRE(lp.size() >= 4);
    // Frozen endpoint: deviation at v = 1e8 for u = 0.5.
    CHECK(lp.back().v == Approx(1e8).epsilon(1e-9));
    CHECK(lp.back().deviation == Approx(0.01936256220286836).epsilon(1e-6));
    CHECK(lp.back().deviation < lp.front().deviation);  // trending to zero

    const auto pl = slow_variation_check(KernelProfile::power_law(0.5), 0.5, 1e8);
    // Deviation locks onto u^-a - 1 = sqrt(2) - 1: not slowly varying.
    CHECK(pl.back().deviation == Approx(0.4142135553020274).epsilon(1e-6));

    // u = 1 is the identity ratio.
    const auto unit = slow_variation_check(KernelProfile::log_power(0.5), 1.0, 1e8);
    for (const auto& point : unit) CHECK(point.deviation <= 1e-14);
}

TEST_CASE("w(r) log r classifies the three regimes") {
    const auto grid = default_regime_grid();
    REQUIRE(grid.size() >= 8);
    CHECK(grid.front() == Approx(10.0));
    CHECK(grid.back() == Approx(1e12).epsilon(1e-9));

    const auto strong = k_logr_divergence(KernelProfile::log_power(0.5), grid);
    CHECK(strong.classified == Regime::strong);
    CHECK(strong.values.front() == Approx(1.4439064376212654).epsilon(1e-10));
    CHECK(strong.values.back() == Approx(5.256521769756674).epsilon(1e-10));

    const auto boundary = k_logr_divergence(KernelProfile::boundary_log(2.0), grid);
    CHECK(boundary.classified == Regime::boundary);
    CHECK(boundary.values.back() == Approx(2.0).epsilon(1e-3));

    CHECK(k_logr_divergence(KernelProfile::power_law(0.5), grid).classified ==
          Regime::berman);
    CHECK(k_logr_divergence(KernelProfile::exponential(), grid).classified ==
          Regime::berman);
    CHECK(k_logr_divergence(KernelProfile::iid_delta(), grid).classified == Regime::berman);

    // Classification agrees with the declared family regime for all families.
    for (const auto& profile :
         {KernelProfile::iid_delta(), KernelProfile::log_power(0.5),
          KernelProfile::boundary_log(2.0), KernelProfile::power_law(0.5),
          KernelProfile::exponential()}) {
        CHECK(k_logr_divergence(profile, grid).classified == profile.regime());
    }
}

TEST_CASE("Ho-McCormick statistic decreases for the regular families") {
    const std::vector<long long> sizes{1024, 2048, 4096, 8192, 16384};
    const auto lp = hm_regularity(KernelProfile::log_power(0.5), sizes);
    REQUIRE(lp.size() == 5);
    // Frozen direct-summation oracle values.
    const double expected[] = {0.248074, 0.232617, 0.218583, 0.206155, 0.195267};
    for (std::size_t i = 0; i < lp.size(); ++i) {
        CAPTURE(i);
        CHECK(lp[i].v == Approx(static_cast<double>(sizes[i])));
        CHECK(lp[i].deviation == Approx(expected[i]).epsilon(1e-4));
    }
    for (std::size_t i = 1; i < lp.size(); ++i) CHECK(lp[i].deviation < lp[i - 1].deviation);

    // iid-delta: K(k) = 0 for k >= 1, so the statistic is identically zero.
    const auto iid = hm_regularity(KernelProfile::iid_delta(), sizes);
    for (const auto& point : iid) CHECK(point.deviation == 0.0);

    // Exponential decays much faster still.
    const auto expo = hm_regularity(KernelProfile::exponential(), sizes);
    for (std::size_t i = 0; i < expo.size(); ++i) CHECK(expo[i].deviation < 0.01);
}

TEST_CASE("verdict names") {
    CHECK(std::string(verdict_name(FlatnessVerdict::pass)) == "pass");
    CHECK(std::string(verdict_name(FlatnessVerdict::fail)) == "fail");
    CHECK(std::string(verdict_name(FlatnessVerdict::inconclusive)) == "inconclusive");
}

}  // TEST_SUITE
