#include "gpmax/kernels.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "gpmax/errors.hpp"

namespace gpmax {

namespace {
constexpr double kE = std::numbers::e;
}

const char* family_name(KernelFamily family) {
    switch (family) {
        case KernelFamily::iid_delta: return "iid-delta";
        case KernelFamily::log_power: return "log-power";
        case KernelFamily::boundary_log: return "boundary-log";
        case KernelFamily::power_law: return "power-law";
        case KernelFamily::exponential: return "exponential";
    }
    return "unknown";
}

const char* regime_name(Regime regime) {
    switch (regime) {
        case Regime::strong: return "strong";
        case Regime::boundary: return "boundary";
        case Regime::berman: return "berman";
    }
    return "unknown";
}

KernelProfile KernelProfile::iid_delta() { return {KernelFamily::iid_delta, 0.0, 0.0}; }

KernelProfile KernelProfile::log_power(double a) {
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("log-power exponent a must be in (0,1)");
    return {KernelFamily::log_power, a, 0.0};
}

KernelProfile KernelProfile::boundary_log(double mu) {
    // mu < 1 would give w(0) = mu < 1, breaking the unit-variance invariant.
    if (!(mu >= 1.0)) throw std::invalid_argument("boundary-log scale mu must be >= 1");
    return {KernelFamily::boundary_log, 0.0, mu};
}

KernelProfile KernelProfile::power_law(double a) {
    if (!(a > 0.0)) throw std::invalid_argument("power-law exponent a must be positive");
    return {KernelFamily::power_law, a, 0.0};
}

KernelProfile KernelProfile::exponential() { return {KernelFamily::exponential, 0.0, 0.0}; }

double KernelProfile::operator()(double r) const {
    switch (family) {
        case KernelFamily::iid_delta: return r == 0.0 ? 1.0 : 0.0;
        case KernelFamily::log_power: return std::pow(std::log(kE + r), -exponent);
        case KernelFamily::boundary_log: return std::min(1.0, scale / std::log(kE + r));
        case KernelFamily::power_law: return std::pow(1.0 + r, -exponent);
        case KernelFamily::exponential: return std::exp(-r);
    }
    return 0.0;
}

double KernelProfile::log_value(double r) const {
    switch (family) {
        case KernelFamily::iid_delta:
            return r == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
        case KernelFamily::log_power: return -exponent * std::log(std::log(kE + r));
        case KernelFamily::boundary_log:
            return std::min(0.0, std::log(scale) - std::log(std::log(kE + r)));
        case KernelFamily::power_law: return -exponent * std::log1p(r);
        case KernelFamily::exponential: return -r;
    }
    return 0.0;
}

Regime KernelProfile::regime() const {
    switch (family) {
        case KernelFamily::log_power: return Regime::strong;
        case KernelFamily::boundary_log: return Regime::boundary;
        default: return Regime::berman;  // w(r) log r -> 0
    }
}

double KernelProfile::flat_top_radius() const {
    if (family != KernelFamily::boundary_log) return 0.0;
    return std::exp(scale) - kE;  // mu / log(e + r0) = 1
}

double eval_profile(const KernelProfile& profile, double r) {
    if (!(r >= 0.0)) throw std::invalid_argument("profile argument r must be >= 0");
    return profile(r);
}

double apply_deformation(DeformationKind kind, double x) {
    return kind == DeformationKind::sine ? x + std::sin(x) : x;
}

CovarianceModel::CovarianceModel(KernelProfile profile_, int dimension_,
                                 DeformationKind deformation_, double nugget_)
    : profile(profile_), dimension(dimension_), deformation(deformation_), nugget(nugget_) {
    if (dimension != 1 && dimension != 2) throw std::invalid_argument("dimension must be 1 or 2");
    if (!(nugget >= 0.0 && nugget < 1.0)) throw std::invalid_argument("nugget must be in [0,1)");
}

double eval_cov(const CovarianceModel& model, const std::array<double, 2>& x,
                const std::array<double, 2>& y) {
    double sq = 0.0;
    for (int axis = 0; axis < model.dimension; ++axis) {
        const double dx =
            apply_deformation(model.deformation, x[axis]) - apply_deformation(model.deformation, y[axis]);
        sq += dx * dx;
    }
    if (sq == 0.0) return 1.0;
    const double base = model.profile(std::sqrt(sq));
    return (1.0 - model.nugget) * base;
}

double eval_cov(const CovarianceModel& model, const LatticeGrid& grid, Eigen::Index i,
                Eigen::Index j) {
    if (i == j) return 1.0;
    if (model.stationary()) {
        const double base = model.profile(grid.distance(i, j));
        return (1.0 - model.nugget) * base;
    }
    return eval_cov(model, grid.coord(i), grid.coord(j));
}

void validate_model_grid(const CovarianceModel& model, const LatticeGrid& grid) {
    if (grid.dimension() != model.dimension) {
        throw std::invalid_argument("model and grid dimensions differ");
    }
    const double r0 = model.profile.flat_top_radius();
    if (r0 > 0.0 && model.nugget == 0.0 && grid.mesh() <= r0 && grid.size() > 1) {
        std::ostringstream msg;
        msg << "boundary-log flat top r0=" << r0 << " requires mesh > r0 (got " << grid.mesh()
            << "); correlations would reach 1";
        throw std::invalid_argument(msg.str());
    }
}

bool validate_and_repair_psd(Eigen::MatrixXd& matrix) {
    // Fast path: a successful Cholesky certifies positive definiteness.
    Eigen::LLT<Eigen::MatrixXd> llt(matrix);
    if (llt.info() == Eigen::Success) return false;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(matrix);
    if (eigen.info() != Eigen::Success) {
        throw NotPositiveDefinite("eigenvalue decomposition failed");
    }
    const Eigen::VectorXd& values = eigen.eigenvalues();
    const double largest = values[values.size() - 1];
    const double smallest = values[0];
    if (largest <= 0.0 || smallest < -kPsdTol * largest) {
        std::ostringstream msg;
        msg << "covariance matrix is not positive semi-definite (lambda_min=" << smallest
            << ", lambda_max=" << largest << ", relative floor " << kPsdTol << ")";
        throw NotPositiveDefinite(msg.str());
    }
    if (smallest >= 0.0) return false;  // semi-definite within roundoff, nothing to clip

    const Eigen::VectorXd clipped = values.cwiseMax(0.0);
    matrix = eigen.eigenvectors() * clipped.asDiagonal() * eigen.eigenvectors().transpose();
    // Restore exact symmetry lost to floating-point reconstruction.
    matrix = ((matrix + matrix.transpose()) / 2.0).eval();
    return true;
}

CovMatrixResult build_cov_matrix(const CovarianceModel& model, const LatticeGrid& grid) {
    validate_model_grid(model, grid);
    const Eigen::Index n = grid.size();
    CovMatrixResult result;
    result.matrix.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        result.matrix(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double value = eval_cov(model, grid, i, j);
            result.matrix(i, j) = value;
            result.matrix(j, i) = value;
        }
    }
    result.repaired = validate_and_repair_psd(result.matrix);
    if (result.repaired) {
        // Re-pin the exact unit diagonal; the added nonnegative diagonal mass
        // keeps the matrix PSD up to roundoff absorbed later by jitter.
        for (Eigen::Index i = 0; i < n; ++i) result.matrix(i, i) = 1.0;
        result.matrix = ((result.matrix + result.matrix.transpose()) / 2.0).eval();
    }
    return result;
}

namespace {

KernelFamily family_from_name(const std::string& name) {
    if (name == "iid-delta") return KernelFamily::iid_delta;
    if (name == "log-power") return KernelFamily::log_power;
    if (name == "boundary-log") return KernelFamily::boundary_log;
    if (name == "power-law") return KernelFamily::power_law;
    if (name == "exponential") return KernelFamily::exponential;
    throw std::invalid_argument("unknown kernel family '" + name + "'");
}

KernelProfile make_profile(KernelFamily family, std::optional<double> a, std::optional<double> mu) {
    switch (family) {
        case KernelFamily::iid_delta:
        case KernelFamily::exponential:
            if (a || mu) throw std::invalid_argument("family takes no parameters");
            return family == KernelFamily::iid_delta ? KernelProfile::iid_delta()
                                                     : KernelProfile::exponential();
        case KernelFamily::log_power:
            if (!a) throw std::invalid_argument("log-power requires a=");
            if (mu) throw std::invalid_argument("log-power takes no mu");
            return KernelProfile::log_power(*a);
        case KernelFamily::power_law:
            if (!a) throw std::invalid_argument("power-law requires a=");
            if (mu) throw std::invalid_argument("power-law takes no mu");
            return KernelProfile::power_law(*a);
        case KernelFamily::boundary_log:
            if (!mu) throw std::invalid_argument("boundary-log requires mu=");
            if (a) throw std::invalid_argument("boundary-log takes no a");
            return KernelProfile::boundary_log(*mu);
    }
    throw std::invalid_argument("unknown kernel family");
}

}  // namespace

std::string KernelSpec::to_string() const {
    std::ostringstream out;
    out << family_name(profile.family);
    if (profile.family == KernelFamily::log_power || profile.family == KernelFamily::power_law) {
        out << " a=" << profile.exponent;
    }
    if (profile.family == KernelFamily::boundary_log) out << " mu=" << profile.scale;
    if (deformation == DeformationKind::sine) out << " deformation=sine";
    if (nugget > 0.0) out << " nugget=" << nugget;
    return out.str();
}

KernelSpec parse_kernel_spec(const std::string& text) {
    std::istringstream stream(text);
    std::vector<std::string> tokens;
    std::string token;
    while (stream >> token) tokens.push_back(token);
    if (tokens.empty()) throw std::invalid_argument("empty kernel specification");

    std::optional<std::string> family_name_token;
    std::optional<double> a;
    std::optional<double> mu;
    std::optional<double> nugget;
    DeformationKind deformation = DeformationKind::none;

    auto parse_number = [](const std::string& key, const std::string& value) {
        try {
            std::size_t used = 0;
            const double parsed = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument("trailing characters");
            return parsed;
        } catch (const std::exception&) {
            throw std::invalid_argument("invalid numeric value for '" + key + "': " + value);
        }
    };

    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::string& tok = tokens[i];
        const std::size_t eq = tok.find('=');
        if (eq == std::string::npos) {
            if (i == 0) {
                family_name_token = tok;  // bare family name in first position
                continue;
            }
            throw std::invalid_argument("expected key=value token, got '" + tok + "'");
        }
        const std::string key = tok.substr(0, eq);
        const std::string value = tok.substr(eq + 1);
        if (key == "family") {
            if (family_name_token) throw std::invalid_argument("duplicate family");
            family_name_token = value;
        } else if (key == "a") {
            if (a) throw std::invalid_argument("duplicate a");
            a = parse_number(key, value);
        } else if (key == "mu") {
            if (mu) throw std::invalid_argument("duplicate mu");
            mu = parse_number(key, value);
        } else if (key == "nugget") {
            if (nugget) throw std::invalid_argument("duplicate nugget");
            nugget = parse_number(key, value);
        } else if (key == "deformation") {
            if (value == "sine") {
                deformation = DeformationKind::sine;
            } else if (value == "none") {
                deformation = DeformationKind::none;
            } else {
                throw std::invalid_argument("unknown deformation '" + value + "'");
            }
        } else {
            throw std::invalid_argument("unknown kernel spec key '" + key + "'");
        }
    }
    if (!family_name_token) throw std::invalid_argument("kernel specification lacks a family");

    KernelSpec spec;
    spec.profile = make_profile(family_from_name(*family_name_token), a, mu);
    spec.deformation = deformation;
    spec.nugget = nugget.value_or(0.0);
    if (!(spec.nugget >= 0.0 && spec.nugget < 1.0)) {
        throw std::invalid_argument("nugget must be in [0,1)");
    }
    return spec;
}

}  // namespace gpmax
