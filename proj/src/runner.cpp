#include "gpmax/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "gpmax/chaos.hpp"
#include "gpmax/diagnostics.hpp"
#include "gpmax/errors.hpp"
#include "gpmax/limitlab.hpp"
#include "gpmax/maxstats.hpp"
#include "gpmax/sampling.hpp"
#include "gpmax/stats.hpp"
#include "gpmax/svg.hpp"
#include "gpmax/version.hpp"
#include "gpmax/workers.hpp"

namespace gpmax {

namespace {

struct ScenarioBody {
    ReportSummary summary;
    std::vector<ReplicateRow> rows;
    std::function<void(const std::string&)> plots;  ///< argument: plots directory
    int exit_code = 0;
    std::vector<std::string> log_lines;
    bool writes_files = true;
};

Json serialize_variance_report(const VarianceReport& vr) {
    Json out = Json::object();
    out["var_m_direct"] = vr.var_m_direct;
    out["var_m_chatterjee"] = vr.var_m_chatterjee;
    out["var_q1_formula"] = vr.var_q1_formula;
    out["var_q1_sample"] = vr.var_q1_sample;
    out["ratio"] = vr.ratio;
    out["se_var_m_direct"] = vr.se_var_m_direct;
    out["se_var_m_chatterjee"] = vr.se_var_m_chatterjee;
    out["se_var_q1_formula"] = vr.se_var_q1_formula;
    out["se_var_q1_sample"] = vr.se_var_q1_sample;
    out["se_ratio"] = vr.se_ratio;
    out["mean_m"] = vr.mean_m;
    out["se_mean_m"] = vr.se_mean_m;
    out["coeff_replicates"] = vr.coeff_replicates;
    out["eval_replicates"] = vr.eval_replicates;
    out["plug_in_bias_bound"] = vr.plug_in_bias_bound;
    return out;
}

// ---------------------------------------------------------------- sample --

ScenarioBody scenario_sample(const ExperimentConfig& config) {
    ScenarioBody body;
    const CovarianceModel model = config_model(config);
    const double side = config.r_schedule.back();
    const LatticeGrid grid(config.dimension, side, config.mesh);
    validate_model_grid(model, grid);
    auto ensemble = make_ensemble(model, grid, config.backend);

    const std::size_t reps = config.replicates;
    std::vector<ReplicateRow> rows(reps);
    std::vector<double> integrand(reps);  // K(I, I^t), the Chatterjee integrand
    std::vector<std::uint8_t> same(reps, 0);
    parallel_chunks(reps, resolve_workers(config.workers), [&](std::size_t begin, std::size_t end) {
        auto local = ensemble->clone();
        for (std::size_t r = begin; r < end; ++r) {
            RngStream t_stream(config.master_seed, r, StreamPurpose::coupling_time);
            const double t = t_stream.next_unit();
            const auto [base, copy] = draw_field_pair(*local, config.master_seed, r);
            const Eigen::VectorXd coupled = couple_values(base.values, t, copy);
            const MaxRecord max_base = argmax_max(base.values);
            const MaxRecord max_coupled = argmax_max(coupled);
            ReplicateRow row;
            row.replicate_id = r;
            row.t = t;
            row.m = max_base.value;
            row.i = max_base.index;
            row.m_t = max_coupled.value;
            row.i_t = max_coupled.index;
            rows[r] = row;
            integrand[r] = local->covariance(max_base.index, max_coupled.index);
            same[r] = max_base.index == max_coupled.index ? 1 : 0;
        }
    });

    const MomentSummary chat = summarize(integrand);
    const std::size_t same_count = static_cast<std::size_t>(
        std::count(same.begin(), same.end(), static_cast<std::uint8_t>(1)));
    const double p_same = static_cast<double>(same_count) / static_cast<double>(reps);

    Json field = Json::object();
    field["kernel"] = config.kernel.to_string();
    field["dimension"] = config.dimension;
    field["side"] = side;
    field["mesh"] = config.mesh;
    field["points_per_axis"] = grid.per_axis();
    field["points"] = grid.size();
    field["backend"] = backend_name(config.backend);
    field["replicates"] = reps;
    field["repaired"] = ensemble->repaired();
    body.summary.stages["field"] = field;

    Json coupling = Json::object();
    coupling["var_m_chatterjee"] = chat.mean;
    coupling["se_var_m_chatterjee"] = chat.se_mean;
    coupling["p_same_argmax"] = p_same;
    coupling["se_p_same_argmax"] =
        std::sqrt(std::max(0.0, p_same * (1.0 - p_same)) / static_cast<double>(reps));
    body.summary.stages["coupling"] = coupling;
    body.summary.stages["replicate_stats"] = replicate_stats(rows);

    if (ensemble->repaired())
        body.summary.warnings.push_back(
            {"make_ensemble", "covariance spectrum clipped within tolerance"});

    std::vector<double> maxima(reps);
    for (std::size_t r = 0; r < reps; ++r) maxima[r] = rows[r].m;
    body.plots = [maxima](const std::string& dir) {
        emit_svg_histogram(maxima, "Field maximum M", "M", dir + "/histogram_m.svg");
        emit_svg_qq_normal(maxima, "Normal QQ plot of M", dir + "/qq_m.svg");
    };
    body.log_lines.push_back("sample: " + std::to_string(reps) + " coupled replicates, mean M = " +
                             format_double(summarize(maxima).mean));
    body.rows = std::move(rows);
    return body;
}

// ------------------------------------------------------------ experiment --

Json level_to_json(const LevelStats& level) {
    Json out = Json::object();
    out["side"] = level.side;
    out["points_per_axis"] = level.points_per_axis;
    out["points"] = level.points;
    out["replicates"] = level.replicates;
    out["mean_m"] = level.mean_m;
    out["se_mean_m"] = level.se_mean_m;
    out["var_m"] = level.var_m;
    out["se_var_m"] = level.se_var_m;
    out["var_q1"] = level.var_q1;
    out["se_var_q1"] = level.se_var_q1;
    out["ratio"] = level.ratio;
    out["se_ratio"] = level.se_ratio;
    out["ks_normal"] = level.ks_normal;
    out["ks_gumbel"] = level.ks_gumbel;
    out["growth_ratio"] = level.growth_ratio;
    out["se_growth_ratio"] = level.se_growth_ratio;
    out["var_m_over_w"] = level.var_m_over_w;
    out["max_window_mass"] = level.max_window_mass;
    out["se_window_mass"] = level.se_window_mass;
    out["window_fraction"] = level.window_fraction;
    out["tie_count"] = level.tie_count;
    out["repaired"] = level.repaired;
    return out;
}

ScenarioBody scenario_experiment(const ExperimentConfig& config) {
    ScenarioBody body;
    LimitExperimentSpec spec;
    spec.model = config_model(config);
    spec.r_schedule = config.r_schedule;
    spec.mesh = config.mesh;
    spec.replicates = config.replicates;
    spec.master_seed = config.master_seed;
    spec.backend = config.backend;
    spec.deloc_beta = config.deloc_beta;
    spec.workers = config.workers;
    const LimitExperimentResult result = run_limit_experiment(spec);
    const GrowthCheck growth = growth_check(result);
    const DelocalisationResult deloc = delocalisation_probe(result, config.deloc_beta);
    const std::vector<ScalingRow> scaling = scaling_constants_study(result);

    Json levels = Json::array();
    for (const LevelStats& level : result.levels) levels.push_back(level_to_json(level));
    body.summary.stages["levels"] = levels;

    Json growth_json = Json::object();
    growth_json["sides"] = growth.sides;
    growth_json["ratios"] = growth.ratios;
    growth_json["ses"] = growth.ses;
    Json merged = Json::array();
    for (const TrendPoint& point : growth.merged)
        merged.push_back(Json{{"value", point.value}, {"se", point.se}});
    growth_json["merged"] = merged;
    growth_json["merge_z"] = growth.merge_z;
    growth_json["increasing"] = growth.increasing;
    growth_json["top_in_band"] = growth.top_in_band;
    growth_json["band_lo"] = growth.band_lo;
    growth_json["band_hi"] = growth.band_hi;
    body.summary.stages["growth"] = growth_json;

    Json deloc_json = Json::object();
    deloc_json["beta"] = config.deloc_beta;
    deloc_json["sides"] = deloc.sides;
    deloc_json["masses"] = deloc.masses;
    deloc_json["ses"] = deloc.ses;
    deloc_json["fractions"] = deloc.fractions;
    deloc_json["slope"] = deloc.slope;
    deloc_json["se_slope"] = deloc.se_slope;
    deloc_json["beta_prime"] = deloc.beta_prime;
    deloc_json["significantly_negative"] = deloc.significantly_negative;
    body.summary.stages["delocalisation"] = deloc_json;

    Json scaling_json = Json::array();
    for (const ScalingRow& row : scaling)
        scaling_json.push_back(Json{{"side", row.side}, {"gamma", row.gamma}, {"se", row.se}});
    body.summary.stages["scaling"] = scaling_json;

    const std::size_t top = result.levels.size() - 1;
    const std::uint64_t offset = static_cast<std::uint64_t>(top) * config.replicates;
    std::vector<ReplicateRow> rows(result.maxima[top].size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        rows[r].replicate_id = offset + r;
        rows[r].m = result.maxima[top][r];
        rows[r].i = result.argmaxes[top][r];
    }
    body.summary.stages["replicate_stats"] = replicate_stats(rows);

    for (const LevelStats& level : result.levels) {
        if (level.repaired)
            body.summary.warnings.push_back(
                {"make_ensemble",
                 "covariance spectrum clipped within tolerance at side " + format_double(level.side)});
    }

    std::vector<double> log_sides(growth.sides.size());
    for (std::size_t k = 0; k < growth.sides.size(); ++k) log_sides[k] = std::log2(growth.sides[k]);
    std::vector<double> ratios;
    for (const LevelStats& level : result.levels) ratios.push_back(level.ratio);
    const std::vector<double> top_maxima = result.maxima[top];
    const std::vector<double> growth_ratios = growth.ratios;
    const std::vector<double> masses = deloc.masses;
    body.plots = [=](const std::string& dir) {
        emit_svg_histogram(top_maxima, "Field maximum M at the top window", "M",
                           dir + "/histogram_m.svg");
        emit_svg_qq_normal(top_maxima, "Normal QQ plot of M at the top window", dir + "/qq_m.svg");
        emit_svg_line(log_sides, ratios, "Var[Q1] / Var[M] across the schedule", "log2 window side",
                      "variance ratio", dir + "/ratio.svg");
        emit_svg_line(log_sides, growth_ratios, "Growth ratio mean(M) / sqrt(2 d log N)",
                      "log2 window side", "growth ratio", dir + "/growth.svg");
        emit_svg_line(log_sides, masses, "Max argmax window mass", "log2 window side",
                      "window mass", dir + "/delocalisation.svg");
    };

    body.log_lines.push_back(
        "experiment: " + std::to_string(result.levels.size()) + " levels, top ratio = " +
        format_double(result.levels.back().ratio) + ", growth increasing = " +
        (growth.increasing ? "yes" : "no"));
    body.rows = std::move(rows);
    return body;
}

// -------------------------------------------------------------- flatness --

ScenarioBody scenario_flatness(const ExperimentConfig& config) {
    ScenarioBody body;
    const KernelProfile& profile = config.kernel.profile;
    const FlatnessReport flat = flatness_check(profile, config.eta, config.beta, config.v_max);
    const std::vector<RatioTrendPoint> slow = slow_variation_check(profile, 0.5, config.v_max);
    const RegimeSequence regime = k_logr_divergence(profile, default_regime_grid());

    std::vector<long long> hm_sizes;
    if (!config.r_schedule.empty()) {
        for (const double side : config.r_schedule)
            hm_sizes.push_back(static_cast<long long>(std::llround(side)));
    } else {
        hm_sizes = {1024, 2048, 4096, 8192, 16384};
    }
    const std::vector<RatioTrendPoint> hm = hm_regularity(profile, hm_sizes);

    Json flat_json = Json::object();
    flat_json["kernel"] = config.kernel.to_string();
    flat_json["eta"] = flat.eta;
    flat_json["beta"] = flat.beta;
    flat_json["v_max"] = config.v_max;
    flat_json["verdict"] = verdict_name(flat.verdict);
    flat_json["top_decade_max"] = flat.top_decade_max;
    flat_json["v_grid"] = flat.v_grid;
    flat_json["sup_stats"] = flat.sup_stats;
    body.summary.stages["flatness"] = flat_json;

    Json slow_json = Json::object();
    slow_json["u"] = 0.5;
    Json slow_points = Json::array();
    for (const RatioTrendPoint& point : slow)
        slow_points.push_back(Json{{"v", point.v}, {"deviation", point.deviation}});
    slow_json["points"] = slow_points;
    body.summary.stages["slow_variation"] = slow_json;

    Json regime_json = Json::object();
    regime_json["declared"] = regime_name(profile.regime());
    regime_json["classified"] = regime_name(regime.classified);
    regime_json["r_grid"] = regime.r_grid;
    regime_json["values"] = regime.values;
    body.summary.stages["regime"] = regime_json;

    Json hm_json = Json::object();
    hm_json["sizes"] = hm_sizes;
    std::vector<double> hm_values;
    for (const RatioTrendPoint& point : hm) hm_values.push_back(point.deviation);
    hm_json["values"] = hm_values;
    body.summary.stages["hm"] = hm_json;

    body.summary.stages["replicate_stats"] = replicate_stats({});

    std::vector<double> log_v, finite_stats;
    for (std::size_t k = 0; k < flat.v_grid.size(); ++k) {
        if (std::isfinite(flat.sup_stats[k])) {
            log_v.push_back(std::log10(flat.v_grid[k]));
            finite_stats.push_back(flat.sup_stats[k]);
        }
    }
    if (!log_v.empty()) {
        body.plots = [log_v, finite_stats](const std::string& dir) {
            emit_svg_line(log_v, finite_stats, "Flatness sup statistic", "log10 v",
                          "sup |w(uv)/w(v) - 1|", dir + "/flatness.svg");
        };
    }

    body.log_lines.push_back(std::string("flatness: verdict = ") + verdict_name(flat.verdict) +
                             ", top-decade max = " + format_double(flat.top_decade_max));
    body.log_lines.push_back(std::string("regime: declared = ") + regime_name(profile.regime()) +
                             ", classified = " + regime_name(regime.classified));
    return body;
}

// ---------------------------------------------------------------- verify --

class Suite {
  public:
    explicit Suite(std::string name) : name_(std::move(name)) {}

    void check_true(const std::string& what, bool ok) {
        Json row = Json::object();
        row["check"] = what;
        row["passed"] = ok;
        push(std::move(row), ok);
    }
    void check_close(const std::string& what, double value, double target, double tol) {
        const bool ok = std::abs(value - target) <= tol;
        Json row = Json::object();
        row["check"] = what;
        row["passed"] = ok;
        row["value"] = value;
        row["target"] = target;
        row["tol"] = tol;
        push(std::move(row), ok);
    }
    void check_le(const std::string& what, double value, double bound) {
        const bool ok = value <= bound;
        Json row = Json::object();
        row["check"] = what;
        row["passed"] = ok;
        row["value"] = value;
        row["bound"] = bound;
        push(std::move(row), ok);
    }

    bool passed() const { return passed_; }
    const std::string& name() const { return name_; }
    Json to_json() const {
        Json out = Json::object();
        out["name"] = name_;
        out["passed"] = passed_;
        out["checks"] = checks_;
        return out;
    }

  private:
    void push(Json row, bool ok) {
        checks_.push_back(std::move(row));
        passed_ = passed_ && ok;
    }
    std::string name_;
    bool passed_ = true;
    Json checks_ = Json::array();
};

Eigen::MatrixXd bivariate_cov(double rho) {
    Eigen::MatrixXd cov(2, 2);
    cov << 1.0, rho, rho, 1.0;
    return cov;
}

void bivariate_checks(Suite& suite, const std::string& tag, VarianceReport vr, double rho) {
    const double pi = std::numbers::pi;
    const double mean_cf = std::sqrt((1.0 - rho) / pi);
    const double var_cf = 1.0 - (1.0 - rho) / pi;
    const double var_q1_cf = (1.0 + rho) / 2.0;
    suite.check_close(tag + ": mean M vs closed form", vr.mean_m, mean_cf, 3.0 * vr.se_mean_m);
    suite.check_close(tag + ": Var[M] vs closed form", vr.var_m_direct, var_cf,
                      3.0 * vr.se_var_m_direct);
    suite.check_close(tag + ": Var[Q1] formula vs closed form", vr.var_q1_formula, var_q1_cf,
                      3.0 * std::max(vr.se_var_q1_formula, 1e-12));
    suite.check_close(tag + ": Var[Q1] sample vs formula", vr.var_q1_sample, vr.var_q1_formula,
                      3.0 * std::hypot(vr.se_var_q1_sample, vr.se_var_q1_formula));
    suite.check_close(tag + ": Chatterjee vs direct Var[M]", vr.var_m_chatterjee, vr.var_m_direct,
                      3.0 * std::hypot(vr.se_var_m_chatterjee, vr.se_var_m_direct));
}

ScenarioBody scenario_verify(const ExperimentConfig& config) {
    ScenarioBody body;
    const std::size_t budget = config.replicates;
    const std::size_t coeff_budget = config.coeff_budget();
    const std::uint64_t seed = config.master_seed;
    const double pi = std::numbers::pi;
    std::vector<Suite> suites;

    // 1. Bivariate closed forms through every Var route.
    {
        Suite suite("bivariate-closed-form");
        auto iid2 = make_iid_ensemble(2);
        bivariate_checks(suite, "rho=0", make_variance_report(*iid2, coeff_budget, budget, seed),
                         0.0);
        auto corr2 = make_matrix_ensemble(bivariate_cov(0.5));
        VarianceReport vr_half = make_variance_report(*corr2, coeff_budget, budget, seed);
        bivariate_checks(suite, "rho=0.5", vr_half, 0.5);
        body.summary.stages["variance_report"] = serialize_variance_report(vr_half);
        suites.push_back(std::move(suite));
    }

    // 2. Chatterjee t-profile and the stratified integral (n=2 iid).
    {
        Suite suite("chatterjee-t-profile");
        auto iid2 = make_iid_ensemble(2);
        const std::vector<double> ts = {0.25, 0.5, 0.75};
        std::vector<std::size_t> same(ts.size(), 0);
        for (std::size_t r = 0; r < budget; ++r) {
            const auto [base, copy] = draw_field_pair(*iid2, seed, r);
            const Eigen::Index i_base = argmax_max(base.values).index;
            for (std::size_t k = 0; k < ts.size(); ++k) {
                const Eigen::VectorXd coupled = couple_values(base.values, ts[k], copy);
                if (argmax_max(coupled).index == i_base) ++same[k];
            }
        }
        for (std::size_t k = 0; k < ts.size(); ++k) {
            const double p_hat = static_cast<double>(same[k]) / static_cast<double>(budget);
            const double target = 0.5 + std::asin(ts[k]) / pi;
            const double se = std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(budget));
            suite.check_close("P[I = I^t] at t=" + format_double(ts[k]), p_hat, target, 3.0 * se);
        }
        const EstimateWithError integral =
            chatterjee_variance(*iid2, budget, seed, /*stratified=*/true, /*strata=*/16,
                                /*replicate_offset=*/4 * budget);
        suite.check_close("stratified integral vs 1 - 1/pi", integral.value, 1.0 - 1.0 / pi,
                          3.0 * integral.se);
        suites.push_back(std::move(suite));
    }

    // 3. Projection residual orthogonality on a random unit-diagonal PSD.
    {
        Suite suite("projection-orthogonality");
        RngStream scratch(seed, 777, StreamPurpose::scratch);
        const Eigen::VectorXd entries = scratch.gaussian_vector(25);
        const Eigen::MatrixXd square = Eigen::Map<const Eigen::MatrixXd>(entries.data(), 5, 5);
        Eigen::MatrixXd cov = square * square.transpose() + 0.5 * Eigen::MatrixXd::Identity(5, 5);
        const Eigen::VectorXd scale = cov.diagonal().cwiseSqrt().cwiseInverse();
        cov = scale.asDiagonal() * cov * scale.asDiagonal();
        auto ensemble = make_matrix_ensemble(cov);
        const ChaosCoefficients coeffs = q1_coefficients_argmax(*ensemble, coeff_budget, seed, 0);
        const ResidualCheck residual =
            projection_residual_check(*ensemble, coeffs, budget, seed, coeff_budget);
        double worst = 0.0;
        for (Eigen::Index j = 0; j < residual.covariances.size(); ++j)
            worst = std::max(worst, std::abs(residual.covariances[j]) / residual.ses[j]);
        suite.check_le("max |Cov[M - Q1, X_j]| / SE over j", worst, 3.0);
        suites.push_back(std::move(suite));
    }

    // 4. Deterministic inequalities: sandwich, gradient, alpha slack.
    {
        Suite suite("deterministic-inequalities");
        RngStream scratch(seed, 778, StreamPurpose::scratch);
        bool sandwich_ok = true;
        bool gradient_sum_ok = true;
        for (int rep = 0; rep < 200; ++rep) {
            const Eigen::VectorXd values = scratch.gaussian_vector(16);
            const double top = argmax_max(values).value;
            const double spread =
                top - values.minCoeff() > 0.0 ? top - values.minCoeff() : 1.0;
            for (const double beta : beta_ladder(spread)) {
                const double soft = softmax_value(values, beta);
                if (!(top <= soft && soft <= top + std::log(16.0) / beta)) sandwich_ok = false;
                const Eigen::VectorXd grad = softmax_gradient(values, beta);
                if (std::abs(grad.sum() - 1.0) > 1e-12) gradient_sum_ok = false;
            }
        }
        suite.check_true("softmax sandwich M <= F <= M + log(n)/beta (exact)", sandwich_ok);
        suite.check_true("softmax gradient sums to 1", gradient_sum_ok);

        double worst_fd = 0.0;
        for (int rep = 0; rep < 5; ++rep) {
            Eigen::VectorXd values = scratch.gaussian_vector(8);
            for (const double beta : {0.5, 2.0, 8.0}) {
                const Eigen::VectorXd grad = softmax_gradient(values, beta);
                for (Eigen::Index j = 0; j < values.size(); ++j) {
                    const double h = 1e-5;
                    const double kept = values[j];
                    values[j] = kept + h;
                    const double up = softmax_value(values, beta);
                    values[j] = kept - h;
                    const double down = softmax_value(values, beta);
                    values[j] = kept;
                    worst_fd = std::max(worst_fd, std::abs(grad[j] - (up - down) / (2.0 * h)));
                }
            }
        }
        suite.check_le("gradient vs central finite difference", worst_fd, 1e-6);

        const AlphaTable alpha = alpha_inequality_table(1e-3);
        const double min_slack =
            *std::min_element(alpha.slack.begin(), alpha.slack.end());
        suite.check_true("alpha slack nonnegative on the grid", min_slack >= 0.0);
        suite.check_true("alpha slack minimum at t=1 equals 0",
                         alpha.min_slack == 0.0 && alpha.argmin_t == 1.0);
        suites.push_back(std::move(suite));
    }

    // 5. Variance identities on a strongly correlated 1D model.
    {
        Suite suite("variance-identity");
        const CovarianceModel model(KernelProfile::log_power(0.5), 1);
        const LatticeGrid grid(1, 256.0, 1.0);
        auto ensemble = make_ensemble(model, grid, config.backend);
        const VarianceReport vr = make_variance_report(*ensemble, coeff_budget, budget, seed);
        suite.check_close("Chatterjee vs direct Var[M]", vr.var_m_chatterjee, vr.var_m_direct,
                          3.0 * std::hypot(vr.se_var_m_chatterjee, vr.se_var_m_direct));
        suite.check_close("Var[Q1] sample vs formula", vr.var_q1_sample, vr.var_q1_formula,
                          3.0 * std::hypot(vr.se_var_q1_sample, vr.se_var_q1_formula));
        suite.check_le("Gaussian concentration: Var[M] <= 1 + 5 SE", vr.var_m_direct,
                       1.0 + 5.0 * vr.se_var_m_direct);

        // Reconstruction via the standardised L2 gap: (1 - g/2)^2 = ratio.
        const ChaosCoefficients coeffs = q1_coefficients_argmax(*ensemble, coeff_budget, seed, 0);
        std::vector<double> gaps(budget);
        for (std::size_t r = 0; r < budget; ++r) {
            const FieldSample field = draw_field(*ensemble, seed, coeff_budget + r);
            const double m_hat =
                (argmax_max(field.values).value - vr.mean_m) / std::sqrt(vr.var_m_direct);
            const double q_hat = q1_value(field.values, coeffs) / std::sqrt(vr.var_q1_formula);
            gaps[r] = (m_hat - q_hat) * (m_hat - q_hat);
        }
        const MomentSummary gap = summarize(gaps);
        const double reconstructed = (1.0 - gap.mean / 2.0) * (1.0 - gap.mean / 2.0);
        const double se_rec = std::abs(1.0 - gap.mean / 2.0) * gap.se_mean;
        suite.check_close("gap-reconstructed ratio vs measured ratio", reconstructed, vr.ratio,
                          3.0 * std::hypot(se_rec, vr.se_ratio));
        suites.push_back(std::move(suite));
    }

    // 6. KS affine invariance.
    {
        Suite suite("ks-affine-invariance");
        RngStream scratch(seed, 779, StreamPurpose::scratch);
        const Eigen::VectorXd sample = scratch.gaussian_vector(500);
        std::vector<double> raw(sample.data(), sample.data() + sample.size());
        std::vector<double> scaled(raw.size());
        for (std::size_t k = 0; k < raw.size(); ++k) scaled[k] = 3.7 * raw[k] - 2.1;
        suite.check_le("|KS(x) - KS(a x + b)|",
                       std::abs(ks_statistic_normal(raw) - ks_statistic_normal(scaled)), 1e-12);
        const TwoSampleKs self = ks_two_sample(raw, raw);
        suite.check_le("two-sample KS of a sample with itself", self.statistic, 1e-15);
        suites.push_back(std::move(suite));
    }

    // 7. Flatness and regime classifications against their closed forms.
    {
        Suite suite("flatness-classification");
        const double eta = 0.1, beta = 0.17, v_max = 1e8;
        suite.check_true(
            "log-power(0.5) passes",
            flatness_check(KernelProfile::log_power(0.5), eta, beta, v_max).verdict ==
                FlatnessVerdict::pass);
        suite.check_true(
            "exponential fails",
            flatness_check(KernelProfile::exponential(), eta, beta, v_max).verdict ==
                FlatnessVerdict::fail);
        bool power_law_fails = true;
        for (const double b : {0.1, 0.17, 0.3})
            power_law_fails =
                power_law_fails &&
                flatness_check(KernelProfile::power_law(0.5), eta, b, v_max).verdict ==
                    FlatnessVerdict::fail;
        suite.check_true("power-law(0.5) fails at every beta", power_law_fails);

        bool regimes_match = true;
        const KernelProfile profiles[] = {
            KernelProfile::iid_delta(), KernelProfile::log_power(0.5),
            KernelProfile::boundary_log(2.0), KernelProfile::power_law(0.5),
            KernelProfile::exponential()};
        for (const KernelProfile& profile : profiles) {
            const RegimeSequence seq = k_logr_divergence(profile, default_regime_grid());
            if (seq.classified != profile.regime()) regimes_match = false;
        }
        suite.check_true("k log r classifier matches declared regimes", regimes_match);

        const std::vector<RatioTrendPoint> hm =
            hm_regularity(KernelProfile::log_power(0.5), {1024, 2048, 4096, 8192, 16384});
        bool decreasing = true;
        for (std::size_t k = 1; k < hm.size(); ++k)
            decreasing = decreasing && hm[k].deviation < hm[k - 1].deviation;
        suite.check_true("Ho-McCormick statistic decreasing for log-power(0.5)", decreasing);
        suites.push_back(std::move(suite));
    }

    // 8. Growth and delocalisation on a small iid schedule.
    {
        Suite suite("growth-delocalisation");
        LimitExperimentSpec spec;
        spec.model = CovarianceModel(KernelProfile::iid_delta(), 1);
        spec.r_schedule = {256.0, 512.0, 1024.0};
        spec.mesh = 1.0;
        spec.replicates = budget;
        spec.master_seed = seed;
        spec.backend = config.backend;
        spec.deloc_beta = 0.5;
        spec.workers = config.workers;
        const LimitExperimentResult result = run_limit_experiment(spec);
        const GrowthCheck growth = growth_check(result);
        suite.check_true("growth ratios nondecreasing after merging", growth.increasing);
        suite.check_true("top growth ratio inside [0.6, 1.1]", growth.top_in_band);
        double worst = 0.0;
        for (const LevelStats& level : result.levels) {
            const double se = std::max(level.se_window_mass, 1e-12);
            worst = std::max(worst,
                             std::abs(level.max_window_mass - level.window_fraction) / se);
        }
        suite.check_le("iid window mass vs window fraction (units of SE)", worst, 5.0);
        suites.push_back(std::move(suite));
    }

    // Replicate dump: n=2 iid with exact coefficients p = (1/2, 1/2).
    {
        const std::size_t dump = std::min<std::size_t>(budget, 2000);
        auto iid2 = make_iid_ensemble(2);
        body.rows.reserve(dump);
        for (std::size_t r = 0; r < dump; ++r) {
            RngStream t_stream(seed, r, StreamPurpose::coupling_time);
            const double t = t_stream.next_unit();
            const auto [base, copy] = draw_field_pair(*iid2, seed, r);
            const Eigen::VectorXd coupled = couple_values(base.values, t, copy);
            const MaxRecord max_base = argmax_max(base.values);
            const MaxRecord max_coupled = argmax_max(coupled);
            ReplicateRow row;
            row.replicate_id = r;
            row.t = t;
            row.m = max_base.value;
            row.i = max_base.index;
            row.m_t = max_coupled.value;
            row.i_t = max_coupled.index;
            row.q1 = 0.5 * (base.values[0] + base.values[1]);
            body.rows.push_back(row);
        }
    }

    Json suites_json = Json::array();
    int failed = 0;
    for (const Suite& suite : suites) {
        suites_json.push_back(suite.to_json());
        if (!suite.passed()) ++failed;
        body.log_lines.push_back(std::string(suite.passed() ? "[PASS] " : "[FAIL] ") +
                                 suite.name());
    }
    body.summary.stages["suites"] = suites_json;
    Json totals = Json::object();
    totals["total"] = suites.size();
    totals["passed"] = suites.size() - static_cast<std::size_t>(failed);
    totals["failed"] = failed;
    body.summary.stages["totals"] = totals;
    body.summary.stages["replicate_stats"] = replicate_stats(body.rows);
    body.exit_code = failed;
    body.log_lines.push_back("verify: " + std::to_string(suites.size() - failed) + "/" +
                             std::to_string(suites.size()) + " suites passed");

    std::vector<double> maxima;
    for (const ReplicateRow& row : body.rows) maxima.push_back(row.m);
    body.plots = [maxima](const std::string& dir) {
        emit_svg_histogram(maxima, "Maximum of the bivariate dump", "M", dir + "/histogram_m.svg");
        emit_svg_qq_normal(maxima, "Normal QQ plot of the bivariate dump", dir + "/qq_m.svg");
    };
    return body;
}

// ---------------------------------------------------------------- report --

ScenarioBody scenario_report(const ExperimentConfig& config) {
    ScenarioBody body;
    body.writes_files = false;
    const std::string dir = config.out_dir;
    const Json stored_summary = read_json_file(dir + "/summary.json");
    const std::vector<ReplicateRow> rows = read_csv_file(dir + "/replicates.csv");
    const Json recomputed = replicate_stats(rows);

    std::string mismatch;
    bool match = false;
    if (!stored_summary.contains("stages") ||
        !stored_summary.at("stages").contains("replicate_stats")) {
        mismatch = "summary.json has no stages.replicate_stats block";
    } else {
        match = stats_match(stored_summary.at("stages").at("replicate_stats"), recomputed, 1e-12,
                            &mismatch);
    }

    Json check = Json::object();
    check["directory"] = dir;
    check["stored_scenario"] =
        stored_summary.contains("scenario") ? stored_summary.at("scenario") : Json("unknown");
    check["rows"] = rows.size();
    check["match"] = match;
    check["mismatch"] = mismatch;
    check["recomputed"] = recomputed;
    body.summary.stages["check"] = check;
    body.exit_code = match ? 0 : 1;
    body.log_lines.push_back(match
                                 ? "report: CSV round-trip reproduces summary statistics"
                                 : "report: MISMATCH — " + mismatch);
    return body;
}

}  // namespace

ScenarioResult run_scenario(const ExperimentConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    ScenarioBody body;
    switch (config.scenario) {
        case Scenario::sample: body = scenario_sample(config); break;
        case Scenario::experiment: body = scenario_experiment(config); break;
        case Scenario::flatness: body = scenario_flatness(config); break;
        case Scenario::verify: body = scenario_verify(config); break;
        case Scenario::report: body = scenario_report(config); break;
    }
    body.summary.scenario = scenario_name(config.scenario);
    body.summary.version = kArtifactVersion;
    body.summary.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (body.writes_files) {
        write_csv_file(config.out_dir + "/replicates.csv", body.rows);
        if (body.plots) body.plots(config.out_dir + "/plots");
        // Last: its presence certifies a completed run.
        write_summary_file(config.out_dir + "/summary.json", body.summary);
        body.log_lines.push_back("wrote " + config.out_dir + "/summary.json");
    }
    return {std::move(body.summary), body.exit_code, std::move(body.log_lines)};
}

}  // namespace gpmax
