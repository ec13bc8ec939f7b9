#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "gpmax/errors.hpp"
#include "gpmax/grid.hpp"
#include "gpmax/kernels.hpp"

using namespace gpmax;
using doctest::Approx;

TEST_SUITE("kernels") {

TEST_CASE("profile closed-form point values") {
    const double e = std::exp(1.0);
    CHECK(KernelProfile::iid_delta()(0.0) == 1.0);
    CHECK(KernelProfile::iid_delta()(0.5) == 0.0);
    CHECK(KernelProfile::log_power(0.5)(0.0) == 1.0);
    // (log(e+10))^(-1/2), frozen from independent evaluation.
    CHECK(KernelProfile::log_power(0.5)(10.0) == Approx(0.6270805982434974).epsilon(1e-14));
    CHECK(KernelProfile::boundary_log(2.0)(10.0) == Approx(0.786460153386845).epsilon(1e-14));
    CHECK(KernelProfile::power_law(0.5)(3.0) == Approx(0.5).epsilon(1e-15));
    CHECK(KernelProfile::exponential()(1.0) == Approx(0.36787944117144233).epsilon(1e-15));
    // Flat top of the clipped boundary profile: w = 1 up to e^mu - e.
    CHECK(KernelProfile::boundary_log(2.0)(4.0) == 1.0);
    CHECK(KernelProfile::boundary_log(2.0)(e * e - e) == Approx(1.0).epsilon(1e-12));
    CHECK(KernelProfile::boundary_log(2.0)(5.0) < 1.0);
}

TEST_CASE("profiles stay within [0, 1] and decay monotonically") {
    const KernelProfile profiles[] = {
        KernelProfile::iid_delta(), KernelProfile::log_power(0.3),
        KernelProfile::boundary_log(3.0), KernelProfile::power_law(1.5),
        KernelProfile::exponential()};
    for (const auto& w : profiles) {
        double prev = w(0.0);
        CHECK(prev == 1.0);
        for (double r = 0.25; r < 1e6; r *= 4.0) {
            const double value = w(r);
            CHECK(value >= 0.0);
            CHECK(value <= prev + 1e-15);
            prev = value;
        }
    }
}

TEST_CASE("log_value agrees with the profile and handles exact zeros") {
    for (double r : {0.5, 10.0, 1e4}) {
        CHECK(std::exp(KernelProfile::log_power(0.5).log_value(r)) ==
              Approx(KernelProfile::log_power(0.5)(r)).epsilon(1e-12));
        CHECK(std::exp(KernelProfile::power_law(2.0).log_value(r)) ==
              Approx(KernelProfile::power_law(2.0)(r)).epsilon(1e-12));
    }
    CHECK(KernelProfile::iid_delta().log_value(0.0) == 0.0);
    CHECK(KernelProfile::iid_delta().log_value(1.0) ==
          -std::numeric_limits<double>::infinity());
    // Deep tail where w underflows to zero but log w stays finite.
    const double tail = KernelProfile::exponential().log_value(1e4);
    CHECK(tail == Approx(-1e4).epsilon(1e-12));
}

TEST_CASE("regime tags and names") {
    CHECK(KernelProfile::log_power(0.5).regime() == Regime::strong);
    CHECK(KernelProfile::boundary_log(2.0).regime() == Regime::boundary);
    CHECK(KernelProfile::power_law(0.5).regime() == Regime::berman);
    CHECK(KernelProfile::exponential().regime() == Regime::berman);
    CHECK(KernelProfile::iid_delta().regime() == Regime::berman);
    CHECK(std::string(regime_name(Regime::strong)) == "strong");
    CHECK(std::string(family_name(KernelFamily::iid_delta)) == "iid-delta");
    CHECK(std::string(family_name(KernelFamily::log_power)) == "log-power");
}

TEST_CASE("family parameter domains are enforced") {
    CHECK_THROWS_AS(KernelProfile::log_power(0.0), std::invalid_argument);
    CHECK_THROWS_AS(KernelProfile::log_power(1.0), std::invalid_argument);
    CHECK_THROWS_AS(KernelProfile::log_power(-0.5), std::invalid_argument);
    CHECK_THROWS_AS(KernelProfile::power_law(0.0), std::invalid_argument);
    CHECK_THROWS_AS(KernelProfile::boundary_log(0.99), std::invalid_argument);
    CHECK_NOTHROW(KernelProfile::boundary_log(1.0));
    CHECK_THROWS_AS(eval_profile(KernelProfile::exponential(), -1.0), std::invalid_argument);
}

TEST_CASE("flat_top_radius is e^mu - e for boundary-log, else zero") {
    CHECK(KernelProfile::boundary_log(2.0).flat_top_radius() ==
          Approx(4.670774270471604).epsilon(1e-14));
    CHECK(KernelProfile::log_power(0.5).flat_top_radius() == 0.0);
    CHECK(KernelProfile::iid_delta().flat_top_radius() == 0.0);
    CHECK(KernelProfile::exponential().flat_top_radius() == 0.0);
}

TEST_CASE("deformation is the identity or x + sin x") {
    CHECK(apply_deformation(DeformationKind::none, 1.7) == 1.7);
    CHECK(apply_deformation(DeformationKind::sine, 1.7) == Approx(1.7 + std::sin(1.7)));
    CHECK(apply_deformation(DeformationKind::sine, 0.0) == 0.0);
}

TEST_CASE("eval_cov composes profile, deformation and nugget") {
    const LatticeGrid grid(1, 4.0, 1.0);
    const KernelProfile w = KernelProfile::log_power(0.5);

    const CovarianceModel plain(w, 1);
    CHECK(eval_cov(plain, grid, 2, 2) == 1.0);
    CHECK(eval_cov(plain, grid, 0, 3) == Approx(w(3.0)).epsilon(1e-15));
    CHECK(eval_cov(plain, grid, 3, 0) == eval_cov(plain, grid, 0, 3));

    const CovarianceModel nuggety(w, 1, DeformationKind::none, 0.25);
    CHECK(eval_cov(nuggety, grid, 1, 1) == 1.0);
    CHECK(eval_cov(nuggety, grid, 0, 3) == Approx(0.75 * w(3.0)).epsilon(1e-15));

    // Deformed distance |tau(x) - tau(y)| with tau(x) = x + sin(x).
    const CovarianceModel bent(w, 1, DeformationKind::sine);
    const double tx = 1.0 + std::sin(1.0), ty = 3.0 + std::sin(3.0);
    CHECK(eval_cov(bent, grid, 1, 3) == Approx(w(std::abs(tx - ty))).epsilon(1e-15));
    CHECK(bent.stationary() == false);
    CHECK(plain.stationary() == true);

    // 2D distance is Euclidean in lattice coordinates.
    const LatticeGrid grid2(2, 3.0, 1.0);
    const CovarianceModel plain2(w, 2);
    const Eigen::Index i = 0, j = 1 * grid2.per_axis() + 1;  // offset (1,1)
    CHECK(eval_cov(plain2, grid2, i, j) == Approx(w(std::sqrt(2.0))).epsilon(1e-15));
}

TEST_CASE("model/grid validation rejects a flat top wider than the mesh") {
    const CovarianceModel boundary(KernelProfile::boundary_log(2.0), 1);
    // Flat top radius ~ 4.67: mesh 1 makes distinct sites perfectly
    // correlated, mesh 5 does not.
    CHECK_THROWS_AS(validate_model_grid(boundary, LatticeGrid(1, 16.0, 1.0)),
                    std::invalid_argument);
    CHECK_NOTHROW(validate_model_grid(boundary, LatticeGrid(1, 80.0, 5.0)));
    // A nugget restores strict decorrelation at any mesh.
    const CovarianceModel repaired(KernelProfile::boundary_log(2.0), 1,
                                   DeformationKind::none, 0.01);
    CHECK_NOTHROW(validate_model_grid(repaired, LatticeGrid(1, 16.0, 1.0)));
    // A single site has no off-diagonal pair to degenerate.
    CHECK_NOTHROW(validate_model_grid(boundary, LatticeGrid(1, 0.5, 1.0)));
    CHECK_NOTHROW(validate_model_grid(CovarianceModel(KernelProfile::log_power(0.5), 1),
                                      LatticeGrid(1, 16.0, 1.0)));
    // Model and grid dimensions must agree.
    CHECK_THROWS_AS(validate_model_grid(CovarianceModel(KernelProfile::exponential(), 1),
                                        LatticeGrid(2, 4.0, 1.0)),
                    std::invalid_argument);
}

TEST_CASE("build_cov_matrix produces the symmetric unit-diagonal matrix") {
    const CovarianceModel model(KernelProfile::log_power(0.5), 1);
    const LatticeGrid grid(1, 1.0, 1.0);  // two points at distance 1
    const auto result = build_cov_matrix(model, grid);
    REQUIRE(result.matrix.rows() == 2);
    const double w1 = KernelProfile::log_power(0.5)(1.0);
    CHECK(result.matrix(0, 0) == 1.0);
    CHECK(result.matrix(1, 1) == 1.0);
    CHECK(result.matrix(0, 1) == Approx(w1).epsilon(1e-15));
    CHECK(result.matrix(0, 1) == result.matrix(1, 0));
    CHECK(result.repaired == false);

    const CovarianceModel model2(KernelProfile::exponential(), 2);
    const LatticeGrid grid2(2, 4.0, 1.0);
    const auto result2 = build_cov_matrix(model2, grid2);
    REQUIRE(result2.matrix.rows() == grid2.size());
    CHECK(result2.matrix.diagonal().isConstant(1.0));
    CHECK(result2.matrix.isApprox(result2.matrix.transpose()));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(result2.matrix);
    CHECK(eig.eigenvalues().minCoeff() > -1e-12);
}

TEST_CASE("psd validation clips tolerable noise and rejects real violations") {
    // Rotate diag(1, lambda) so the defect is off-axis.
    const double theta = 0.5;
    Eigen::Matrix2d rot;
    rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    const auto make = [&](double lambda) {
        Eigen::MatrixXd diag = Eigen::Vector2d(1.0, lambda).asDiagonal();
        return Eigen::MatrixXd(rot * diag * rot.transpose());
    };

    Eigen::MatrixXd clean = Eigen::MatrixXd::Identity(3, 3);
    CHECK(validate_and_repair_psd(clean) == false);

    // Smallest eigenvalue -1e-9 is within the 1e-8 relative floor: clipped.
    Eigen::MatrixXd mild = make(-1e-9);
    CHECK(validate_and_repair_psd(mild) == true);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(mild);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-15);

    Eigen::MatrixXd broken = make(-1e-3);
    CHECK_THROWS_AS(validate_and_repair_psd(broken), NotPositiveDefinite);
}

TEST_CASE("kernel specs parse and round-trip") {
    const KernelSpec lp = parse_kernel_spec("log-power a=0.5");
    CHECK(lp.profile.family == KernelFamily::log_power);
    CHECK(lp.profile.exponent == 0.5);
    CHECK(lp.deformation == DeformationKind::none);
    CHECK(lp.nugget == 0.0);

    const KernelSpec prefixed = parse_kernel_spec("family=log-power a=0.5");
    CHECK(prefixed.profile.family == KernelFamily::log_power);

    const KernelSpec bare = parse_kernel_spec("exponential");
    CHECK(bare.profile.family == KernelFamily::exponential);

    const KernelSpec full = parse_kernel_spec("boundary-log mu=2 deformation=sine nugget=0.01");
    CHECK(full.profile.family == KernelFamily::boundary_log);
    CHECK(full.profile.scale == 2.0);
    CHECK(full.deformation == DeformationKind::sine);
    CHECK(full.nugget == 0.01);
    CHECK(full.to_string() == "boundary-log mu=2 deformation=sine nugget=0.01");

    KernelSpec assembled;
    assembled.profile = KernelProfile::log_power(0.5);
    assembled.deformation = DeformationKind::sine;
    assembled.nugget = 0.01;
    CHECK(assembled.to_string() == "log-power a=0.5 deformation=sine nugget=0.01");
    const KernelSpec reparsed = parse_kernel_spec(assembled.to_string());
    CHECK(reparsed.profile.family == assembled.profile.family);
    CHECK(reparsed.profile.exponent == assembled.profile.exponent);
    CHECK(reparsed.deformation == assembled.deformation);
    CHECK(reparsed.nugget == assembled.nugget);
}

TEST_CASE("kernel spec errors") {
    CHECK_THROWS_AS(parse_kernel_spec(""), std::invalid_argument);
    CHECK_THROWS_AS(parse_kernel_spec("banana"), std::invalid_argument);
    CHECK_THROWS_AS(parse_kernel_spec("log-power"), std::invalid_argument);        // missing a
    CHECK_THROWS_AS(parse_kernel_spec("log-power a=0.5 a=0.6"), std::invalid_argument);
    CHECK_THROWS_AS(parse_kernel_spec("log-power b=1"), std::invalid_argument);
    CHECK_THROWS_AS(parse_kernel_spec("power-law mu=3"), std::invalid_argument);
    CHECK_THROWS_AS(parse_kernel_spec("boundary-log a=0.5"), std::invalid_argument);
    CHECK_THROWS_AS(parse_kernel_spec("iid-delta a=0.5"), std::invalid_argument);
    CHECK_THROWS_AS(parse_kernel_spec("log-power a=1.5"), std::invalid_argument);  // domain
}

TEST_CASE("lattice grid geometry") {
    const LatticeGrid g1(1, 1024.0, 0.25);
    CHECK(g1.per_axis() == 4097);  // floor nudge: 1024/0.25 + 1
    CHECK(g1.size() == 4097);
    const LatticeGrid g2(2, 4.0, 1.0);
    CHECK(g2.per_axis() == 5);
    CHECK(g2.size() == 25);
    CHECK(g2.coord(7)[0] == 1.0);  // row-major: index 7 = (1, 2)
    CHECK(g2.coord(7)[1] == 2.0);
    CHECK(g2.distance(0, 7) == Approx(std::sqrt(5.0)));
    const LatticeGrid shifted(1, 4.0, 1.0, 10.0);
    CHECK(shifted.coord(2)[0] == 12.0);
    const LatticeGrid fine = g2.refined();
    CHECK(fine.mesh() == 0.5);
    CHECK(fine.per_axis() == 9);
    CHECK_THROWS_AS(LatticeGrid(3, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(LatticeGrid(1, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(LatticeGrid(1, 1.0, 0.0), std::invalid_argument);
}

}  // TEST_SUITE
