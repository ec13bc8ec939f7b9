#include "gpmax/limitlab.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "gpmax/chaos.hpp"
#include "gpmax/maxstats.hpp"
#include "gpmax/workers.hpp"

namespace gpmax {

namespace {

constexpr double kZ99 = 2.5758293035489004;

/// Half-window sliding starts covering [0, per_axis), final window flushed
/// to the right edge so the union of windows is the whole axis.
std::vector<Eigen::Index> window_starts(Eigen::Index per_axis, Eigen::Index win) {
    std::vector<Eigen::Index> starts;
    const Eigen::Index step = std::max<Eigen::Index>(1, win / 2);
    for (Eigen::Index s = 0; s + win <= per_axis; s += step) starts.push_back(s);
    if (starts.empty() || starts.back() + win < per_axis) starts.push_back(per_axis - win);
    return starts;
}

}  // namespace

LimitExperimentResult run_limit_experiment(const LimitExperimentSpec& spec) {
    if (spec.r_schedule.empty()) throw std::invalid_argument("r_schedule must be nonempty");
    for (std::size_t i = 1; i < spec.r_schedule.size(); ++i) {
        if (!(spec.r_schedule[i] > spec.r_schedule[i - 1]))
            throw std::invalid_argument("r_schedule must be strictly increasing");
    }
    if (!(spec.r_schedule.front() > 0.0)) throw std::invalid_argument("window sides must be positive");
    if (spec.replicates < 8) throw std::invalid_argument("replicates must be at least 8");
    if (!(spec.mesh > 0.0)) throw std::invalid_argument("mesh must be positive");
    if (!(spec.deloc_beta > 0.0 && spec.deloc_beta < 1.0))
        throw std::invalid_argument("deloc_beta must lie in (0,1)");

    LimitExperimentResult out;
    out.spec = spec;
    const int workers = resolve_workers(spec.workers);
    const int d = spec.model.dimension;

    for (std::size_t level = 0; level < spec.r_schedule.size(); ++level) {
        const double side = spec.r_schedule[level];
        const LatticeGrid grid(d, side, spec.mesh);
        if (grid.per_axis() < 2)
            throw std::invalid_argument("every window side must cover at least two points per axis");
        auto ensemble = make_ensemble(spec.model, grid, spec.backend);

        std::vector<double> maxima(spec.replicates);
        std::vector<Eigen::Index> argmaxes(spec.replicates);
        std::vector<std::uint8_t> ties(spec.replicates, 0);
        // Replicate ids are disjoint across levels so the levels are
        // statistically independent (no shared streams).
        const std::uint64_t offset = static_cast<std::uint64_t>(level) * spec.replicates;
        parallel_chunks(spec.replicates, workers, [&](std::size_t begin, std::size_t end) {
            auto local = ensemble->clone();
            for (std::size_t r = begin; r < end; ++r) {
                RngStream stream(spec.master_seed, offset + r, StreamPurpose::base_field);
                const Eigen::VectorXd field = local->sample(stream);
                const MaxRecord rec = argmax_max(field);
                maxima[r] = rec.value;
                argmaxes[r] = rec.index;
                ties[r] = rec.tie ? 1 : 0;
            }
        });

        LevelStats stats;
        stats.side = side;
        stats.points_per_axis = grid.per_axis();
        stats.points = grid.size();
        stats.replicates = spec.replicates;
        stats.repaired = ensemble->repaired();

        const MomentSummary mom = summarize(maxima);
        stats.mean_m = mom.mean;
        stats.se_mean_m = mom.se_mean;
        stats.var_m = mom.variance;
        stats.se_var_m = mom.se_variance;

        const EstimateWithError q1 = var_q1_from_indices(*ensemble, argmaxes);
        stats.var_q1 = q1.value;
        stats.se_var_q1 = q1.se;
        if (stats.var_m > 0.0) {
            stats.ratio = stats.var_q1 / stats.var_m;
            stats.se_ratio = std::hypot(q1.se / stats.var_m,
                                        stats.var_q1 * stats.se_var_m / (stats.var_m * stats.var_m));
        }

        stats.ks_normal = ks_statistic_normal(maxima);
        stats.ks_gumbel = ks_statistic_gumbel(maxima);

        const double rate = std::sqrt(2.0 * d * std::log(static_cast<double>(grid.per_axis())));
        stats.growth_ratio = mom.mean / rate;
        stats.se_growth_ratio = mom.se_mean / rate;

        const double w_r = spec.model.profile(side);
        stats.var_m_over_w = w_r > 0.0 ? stats.var_m / w_r : 0.0;

        const WindowMass wm = max_window_mass(argmaxes, grid, spec.deloc_beta);
        stats.max_window_mass = wm.mass;
        stats.se_window_mass = wm.se;
        stats.window_fraction = wm.fraction;
        stats.tie_count = static_cast<std::size_t>(
            std::count(ties.begin(), ties.end(), static_cast<std::uint8_t>(1)));

        out.levels.push_back(stats);
        out.maxima.push_back(std::move(maxima));
        out.argmaxes.push_back(std::move(argmaxes));
    }
    return out;
}

GrowthCheck growth_check(const LimitExperimentResult& result) {
    if (result.levels.empty()) throw std::invalid_argument("growth_check needs at least one level");
    GrowthCheck check;
    for (const LevelStats& level : result.levels) {
        check.sides.push_back(level.side);
        check.ratios.push_back(level.growth_ratio);
        check.ses.push_back(level.se_growth_ratio);
    }
    check.merged = merge_indistinguishable(check.ratios, check.ses, check.merge_z);
    check.increasing = trend_nondecreasing(check.merged);
    const double top = check.ratios.back();
    check.top_in_band = top >= check.band_lo && top <= check.band_hi;
    return check;
}

WindowMass max_window_mass(const std::vector<Eigen::Index>& argmaxes, const LatticeGrid& grid,
                           double beta) {
    if (argmaxes.empty()) throw std::invalid_argument("max_window_mass needs at least one replicate");
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0,1)");

    const Eigen::Index per = grid.per_axis();
    const double span = std::pow(grid.side(), 1.0 - beta);
    Eigen::Index win = static_cast<Eigen::Index>(std::floor(span / grid.mesh() + 1e-9)) + 1;
    win = std::min(win, per);
    const std::vector<Eigen::Index> starts = window_starts(per, win);
    const double total = static_cast<double>(argmaxes.size());

    Eigen::Index best = 0;
    if (grid.dimension() == 1) {
        std::vector<Eigen::Index> prefix(static_cast<std::size_t>(per) + 1, 0);
        for (const Eigen::Index idx : argmaxes) {
            if (idx < 0 || idx >= per) throw std::invalid_argument("argmax index outside the grid");
            ++prefix[static_cast<std::size_t>(idx) + 1];
        }
        std::partial_sum(prefix.begin(), prefix.end(), prefix.begin());
        for (const Eigen::Index s : starts)
            best = std::max(best, prefix[static_cast<std::size_t>(s + win)] -
                                      prefix[static_cast<std::size_t>(s)]);
    } else {
        const std::size_t stride = static_cast<std::size_t>(per) + 1;
        std::vector<Eigen::Index> area(stride * stride, 0);
        for (const Eigen::Index idx : argmaxes) {
            if (idx < 0 || idx >= grid.size()) throw std::invalid_argument("argmax index outside the grid");
            const std::size_t ix = static_cast<std::size_t>(idx / per);
            const std::size_t iy = static_cast<std::size_t>(idx % per);
            ++area[(ix + 1) * stride + (iy + 1)];
        }
        for (std::size_t ix = 1; ix < stride; ++ix)
            for (std::size_t iy = 1; iy < stride; ++iy)
                area[ix * stride + iy] += area[(ix - 1) * stride + iy] +
                                          area[ix * stride + iy - 1] -
                                          area[(ix - 1) * stride + iy - 1];
        for (const Eigen::Index sx : starts) {
            for (const Eigen::Index sy : starts) {
                const std::size_t x0 = static_cast<std::size_t>(sx);
                const std::size_t y0 = static_cast<std::size_t>(sy);
                const std::size_t x1 = x0 + static_cast<std::size_t>(win);
                const std::size_t y1 = y0 + static_cast<std::size_t>(win);
                const Eigen::Index count = area[x1 * stride + y1] - area[x0 * stride + y1] -
                                           area[x1 * stride + y0] + area[x0 * stride + y0];
                best = std::max(best, count);
            }
        }
    }

    WindowMass out;
    out.mass = static_cast<double>(best) / total;
    out.se = std::sqrt(std::max(0.0, out.mass * (1.0 - out.mass)) / total);
    const double win_points = grid.dimension() == 1
                                  ? static_cast<double>(win)
                                  : static_cast<double>(win) * static_cast<double>(win);
    out.fraction = win_points / static_cast<double>(grid.size());
    out.window_points_per_axis = win;
    return out;
}

DelocalisationResult delocalisation_probe(const LimitExperimentResult& result, double beta) {
    if (result.levels.size() < 2)
        throw std::invalid_argument("delocalisation_probe needs at least two levels");
    DelocalisationResult out;
    std::vector<double> log_side, log_mass, log_se;
    for (std::size_t i = 0; i < result.levels.size(); ++i) {
        const LevelStats& level = result.levels[i];
        const LatticeGrid grid(result.spec.model.dimension, level.side, result.spec.mesh);
        const WindowMass wm = max_window_mass(result.argmaxes[i], grid, beta);
        out.sides.push_back(level.side);
        out.masses.push_back(wm.mass);
        out.ses.push_back(wm.se);
        out.fractions.push_back(wm.fraction);
        // The max window always contains at least one argmax, so mass > 0.
        log_side.push_back(std::log(level.side));
        log_mass.push_back(std::log(wm.mass));
        const double floor_se = 0.5 / static_cast<double>(result.argmaxes[i].size());
        log_se.push_back(std::max(wm.se / wm.mass, floor_se));
    }
    const LineFit fit = fit_line_weighted(log_side, log_mass, log_se);
    out.slope = fit.slope;
    out.se_slope = fit.se_slope;
    out.beta_prime = -fit.slope;
    out.significantly_negative = fit.slope + kZ99 * fit.se_slope < 0.0;
    return out;
}

HyperProbeReport hypercontractivity_probe(const GaussianEnsemble& ensemble,
                                          const LatticeGrid& grid, Eigen::Index cell_points,
                                          const std::vector<double>& t_grid, std::size_t budget,
                                          std::uint64_t master_seed, int workers, double z) {
    if (ensemble.size() != grid.size())
        throw std::invalid_argument("ensemble and grid sizes disagree");
    if (cell_points < 1 || cell_points > grid.per_axis())
        throw std::invalid_argument("cell_points must lie in [1, points per axis]");
    if (t_grid.empty()) throw std::invalid_argument("t_grid must be nonempty");
    for (const double t : t_grid)
        if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("coupling times must lie in [0,1]");
    if (budget == 0) throw std::invalid_argument("budget must be positive");
    if (!(z > 0.0)) throw std::invalid_argument("z must be positive");

    const int d = grid.dimension();
    const Eigen::Index per = grid.per_axis();
    const Eigen::Index cells_axis = (per + cell_points - 1) / cell_points;
    const Eigen::Index n_cells = d == 1 ? cells_axis : cells_axis * cells_axis;
    const std::size_t n_t = t_grid.size();

    const auto cell_of = [&](Eigen::Index point) -> std::array<Eigen::Index, 2> {
        if (d == 1) return {point / cell_points, 0};
        return {(point / per) / cell_points, (point % per) / cell_points};
    };
    // Dilated neighbourhood of a cell: the cell plus every adjacent cell, as
    // an axis-aligned box of cell coordinates clipped to the partition.
    struct CellBox {
        Eigen::Index x0, x1, y0, y1;
    };
    const auto dilated = [&](const std::array<Eigen::Index, 2>& c) -> CellBox {
        CellBox box;
        box.x0 = std::max<Eigen::Index>(0, c[0] - 1);
        box.x1 = std::min<Eigen::Index>(cells_axis - 1, c[0] + 1);
        if (d == 1) {
            box.y0 = 0;
            box.y1 = 0;
        } else {
            box.y0 = std::max<Eigen::Index>(0, c[1] - 1);
            box.y1 = std::min<Eigen::Index>(cells_axis - 1, c[1] + 1);
        }
        return box;
    };
    const auto flat_cell = [&](Eigen::Index cx, Eigen::Index cy) {
        return d == 1 ? cx : cx * cells_axis + cy;
    };

    std::vector<std::size_t> marginal_counts(static_cast<std::size_t>(n_cells), 0);
    std::vector<std::size_t> joint_counts(static_cast<std::size_t>(n_cells) * n_t, 0);
    std::mutex merge_mutex;

    parallel_chunks(budget, resolve_workers(workers), [&](std::size_t begin, std::size_t end) {
        auto local = ensemble.clone();
        std::vector<std::size_t> marg(static_cast<std::size_t>(n_cells), 0);
        std::vector<std::size_t> joint(static_cast<std::size_t>(n_cells) * n_t, 0);
        for (std::size_t r = begin; r < end; ++r) {
            RngStream stream_a(master_seed, r, StreamPurpose::base_field);
            RngStream stream_b(master_seed, r, StreamPurpose::independent_copy);
            const auto [base, copy] = local->sample_pair(stream_a, stream_b);
            const auto cell_base = cell_of(argmax_max(base).index);
            const CellBox box_base = dilated(cell_base);
            for (Eigen::Index cx = box_base.x0; cx <= box_base.x1; ++cx)
                for (Eigen::Index cy = box_base.y0; cy <= box_base.y1; ++cy)
                    ++marg[static_cast<std::size_t>(flat_cell(cx, cy))];
            for (std::size_t ti = 0; ti < n_t; ++ti) {
                const Eigen::VectorXd coupled = couple_values(base, t_grid[ti], copy);
                const CellBox box_t = dilated(cell_of(argmax_max(coupled).index));
                const Eigen::Index x0 = std::max(box_base.x0, box_t.x0);
                const Eigen::Index x1 = std::min(box_base.x1, box_t.x1);
                const Eigen::Index y0 = std::max(box_base.y0, box_t.y0);
                const Eigen::Index y1 = std::min(box_base.y1, box_t.y1);
                for (Eigen::Index cx = x0; cx <= x1; ++cx)
                    for (Eigen::Index cy = y0; cy <= y1; ++cy)
                        ++joint[static_cast<std::size_t>(flat_cell(cx, cy)) * n_t + ti];
            }
        }
        const std::lock_guard<std::mutex> hold(merge_mutex);
        for (std::size_t c = 0; c < marginal_counts.size(); ++c) marginal_counts[c] += marg[c];
        for (std::size_t j = 0; j < joint_counts.size(); ++j) joint_counts[j] += joint[j];
    });

    HyperProbeReport report;
    report.replicates = budget;
    report.cells_per_axis = cells_axis;
    report.cell_points_per_axis = cell_points;
    report.z = z;
    report.worst_margin = std::numeric_limits<double>::infinity();
    const double n = static_cast<double>(budget);
    for (Eigen::Index c = 0; c < n_cells; ++c) {
        const std::size_t m_count = marginal_counts[static_cast<std::size_t>(c)];
        const WilsonInterval m_ci = wilson_interval(m_count, budget, z);
        for (std::size_t ti = 0; ti < n_t; ++ti) {
            const std::size_t j_count = joint_counts[static_cast<std::size_t>(c) * n_t + ti];
            const WilsonInterval j_ci = wilson_interval(j_count, budget, z);
            HyperCell cell;
            cell.cell = c;
            cell.t = t_grid[ti];
            cell.marginal_count = m_count;
            cell.joint_count = j_count;
            cell.marginal = static_cast<double>(m_count) / n;
            cell.marginal_hi = m_ci.upper;
            cell.joint = static_cast<double>(j_count) / n;
            cell.joint_lo = j_ci.lower;
            cell.bound = std::pow(m_ci.upper, 1.0 + (1.0 - t_grid[ti]) / 2.0);
            cell.margin = cell.bound - j_ci.lower;
            cell.violated = cell.margin < 0.0;
            if (cell.violated) ++report.violations;
            report.worst_margin = std::min(report.worst_margin, cell.margin);
            report.cells.push_back(cell);
        }
    }
    return report;
}

double alpha_slack(double t) { return 2.0 / (1.0 + t) - (3.0 - t) / 2.0; }

AlphaTable alpha_inequality_table(double step) {
    if (!(step > 0.0 && step <= 1e-3))
        throw std::invalid_argument("step must lie in (0, 1e-3]");
    AlphaTable table;
    const auto count = static_cast<std::size_t>(std::llround(1.0 / step));
    table.t.reserve(count);
    table.slack.reserve(count);
    table.min_slack = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= count; ++k) {
        const double t = k == count ? 1.0 : static_cast<double>(k) * step;
        const double slack = alpha_slack(t);
        table.t.push_back(t);
        table.slack.push_back(slack);
        if (slack < table.min_slack) {
            table.min_slack = slack;
            table.argmin_t = t;
        }
    }
    return table;
}

std::vector<ScalingRow> scaling_constants_study(const LimitExperimentResult& result) {
    std::vector<ScalingRow> rows;
    for (const LevelStats& level : result.levels) {
        const double w = result.spec.model.profile(level.side);
        const double gap = 1.0 - w;
        if (!(gap > 1e-12)) continue;  // flat top: the constant is undefined
        ScalingRow row;
        row.side = level.side;
        row.gamma = level.mean_m / std::sqrt(gap);
        row.se = level.se_mean_m / std::sqrt(gap);
        rows.push_back(row);
    }
    if (rows.empty())
        throw std::invalid_argument("every schedule level sits inside the profile's flat top");
    return rows;
}

}  // namespace gpmax
