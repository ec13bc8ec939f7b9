#pragma once

#include <optional>
#include <string>

#include <Eigen/Core>

#include "gpmax/grid.hpp"

namespace gpmax {

/// Relative eigenvalue floor for positive-definiteness validation: smallest
/// eigenvalue below -kPsdTol * largest is a hard failure, values in between
/// are clipped to zero with a repair flag.
inline constexpr double kPsdTol = 1e-8;

enum class KernelFamily { iid_delta, log_power, boundary_log, power_law, exponential };

/// Correlation-decay regime of w(r) log r: divergence (strong), finite
/// positive limit (boundary) or decay to zero (Berman).
enum class Regime { strong, boundary, berman };

const char* family_name(KernelFamily family);
const char* regime_name(Regime regime);

/// Unit-variance radial covariance profile w with w(0) = 1 and |w| <= 1.
/// Families:
///   iid-delta     w(0)=1, w(r)=0 for r>0 (lattice only)
///   log-power     w(r) = (log(e+r))^-a, a in (0,1)        [strong]
///   boundary-log  w(r) = min(1, mu (log(e+r))^-1), mu>=1  [boundary]
///   power-law     w(r) = (1+r)^-a, a>0                    [Berman]
///   exponential   w(r) = exp(-r)                          [Berman]
struct KernelProfile {
    KernelFamily family = KernelFamily::iid_delta;
    double exponent = 0.0;  ///< a (log-power, power-law)
    double scale = 0.0;     ///< mu (boundary-log)

    static KernelProfile iid_delta();
    static KernelProfile log_power(double a);
    static KernelProfile boundary_log(double mu);
    static KernelProfile power_law(double a);
    static KernelProfile exponential();

    double operator()(double r) const;

    /// log w(r), exact where w underflows (returns -infinity for exact zeros);
    /// diagnostics evaluate profile ratios through this to stay finite.
    double log_value(double r) const;

    Regime regime() const;

    /// Radius of the clipped flat top (boundary-log: r0 with w(r)=1 for
    /// r <= r0); zero for every other family.
    double flat_top_radius() const;
};

/// Profile evaluation as a free function (total on r >= 0).
double eval_profile(const KernelProfile& profile, double r);

enum class DeformationKind { none, sine };

/// Smooth monotone time-change realising nonstationary models as
/// f(x) = g(tau(x)) with tau(x) = x + sin(x) applied componentwise.
double apply_deformation(DeformationKind kind, double x);

/// Covariance model on a d-dimensional lattice: stationary radial profile,
/// optional smooth deformation, optional nugget (1-nu) K0 + nu delta used for
/// positive-definiteness repair.  Immutable and safe to share across workers.
struct CovarianceModel {
    KernelProfile profile;
    int dimension = 1;
    DeformationKind deformation = DeformationKind::none;
    double nugget = 0.0;

    CovarianceModel() = default;
    CovarianceModel(KernelProfile profile_, int dimension_,
                    DeformationKind deformation_ = DeformationKind::none, double nugget_ = 0.0);

    bool stationary() const { return deformation == DeformationKind::none; }
};

/// Covariance K(x, y) between two points (coordinates beyond the model's
/// dimension are ignored); stationary case w(|x-y|), deformed case
/// w(|tau(x)-tau(y)|), both mixed with the nugget.
double eval_cov(const CovarianceModel& model, const std::array<double, 2>& x,
                const std::array<double, 2>& y);

/// Covariance between two sites of a grid.
double eval_cov(const CovarianceModel& model, const LatticeGrid& grid, Eigen::Index i,
                Eigen::Index j);

/// Checks a model/grid pairing: boundary-log models require mesh > flat-top
/// radius so that |K(x,y)| < 1 strictly for x != y (a.s. unique argmax).
/// Throws std::invalid_argument on violation.
void validate_model_grid(const CovarianceModel& model, const LatticeGrid& grid);

struct CovMatrixResult {
    Eigen::MatrixXd matrix;  ///< exactly symmetric, unit diagonal
    bool repaired = false;   ///< negative eigenvalues within tolerance were clipped
};

/// Numerically validates / repairs a symmetric matrix in place against the
/// relative eigenvalue floor.  Returns true when clipping was applied; throws
/// NotPositiveDefinite when the floor is violated.  (Separate entry point so
/// both branches are testable; build_cov_matrix delegates to it.)
bool validate_and_repair_psd(Eigen::MatrixXd& matrix);

/// Dense covariance matrix of the model on the grid, PSD-validated.
CovMatrixResult build_cov_matrix(const CovarianceModel& model, const LatticeGrid& grid);

/// Parsed form of a kernel specification string such as
/// "log-power a=0.5 deformation=sine nugget=0.01" (a leading "family=" on the
/// first token is accepted).  Throws std::invalid_argument on unknown tokens.
struct KernelSpec {
    KernelProfile profile;
    DeformationKind deformation = DeformationKind::none;
    double nugget = 0.0;

    std::string to_string() const;
};

KernelSpec parse_kernel_spec(const std::string& text);

}  // namespace gpmax
