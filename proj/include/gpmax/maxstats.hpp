#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace gpmax {

/// Maximum and argmax of one field draw; ties (probability zero, but floating
/// point) are broken to the lowest row-major index and flagged.
struct MaxRecord {
    double value = 0.0;
    Eigen::Index index = 0;
    bool tie = false;
};

MaxRecord argmax_max(const Eigen::VectorXd& values);

/// Soft-max F_beta(x) = beta^-1 log sum_i exp(beta x_i), computed with
/// max-subtraction so overflow never occurs.  Satisfies
/// M <= F_beta <= M + log(n)/beta.
double softmax_value(const Eigen::VectorXd& values, double beta);

/// Gradient of the soft-max: the probability vector exp(beta x_i)/sum_j.
Eigen::VectorXd softmax_gradient(const Eigen::VectorXd& values, double beta);

/// Fixed geometric ladder {1, 4, 16, 64, 256} scaled by 1/spread; the spread
/// is the caller's scale estimate for max - min of the field values.
std::array<double, 5> beta_ladder(double spread);

/// Estimated argmax distribution p_i = count(I = i)/sample_count.
struct ArgmaxDistribution {
    Eigen::VectorXd probabilities;
    std::size_t sample_count = 0;
};

ArgmaxDistribution estimate_argmax_distribution(const std::vector<MaxRecord>& replicates,
                                                Eigen::Index grid_size);

}  // namespace gpmax
