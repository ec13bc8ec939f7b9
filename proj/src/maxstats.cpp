#include "gpmax/maxstats.hpp"

#include <cmath>
#include <stdexcept>

namespace gpmax {

MaxRecord argmax_max(const Eigen::VectorXd& values) {
    if (values.size() == 0) throw std::invalid_argument("argmax of empty vector");
    MaxRecord record;
    record.value = values[0];
    for (Eigen::Index i = 1; i < values.size(); ++i) {
        if (values[i] > record.value) {
            record.value = values[i];
            record.index = i;
            record.tie = false;
        } else if (values[i] == record.value) {
            record.tie = true;  // kept at the lowest index
        }
    }
    return record;
}

double softmax_value(const Eigen::VectorXd& values, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("softmax requires beta > 0");
    const double m = values.maxCoeff();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < values.size(); ++i) sum += std::exp(beta * (values[i] - m));
    return m + std::log(sum) / beta;
}

Eigen::VectorXd softmax_gradient(const Eigen::VectorXd& values, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("softmax requires beta > 0");
    const double m = values.maxCoeff();
    Eigen::VectorXd weights(values.size());
    double sum = 0.0;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        weights[i] = std::exp(beta * (values[i] - m));
        sum += weights[i];
    }
    weights /= sum;
    return weights;
}

std::array<double, 5> beta_ladder(double spread) {
    if (!(spread > 0.0)) throw std::invalid_argument("beta ladder requires spread > 0");
    return {1.0 / spread, 4.0 / spread, 16.0 / spread, 64.0 / spread, 256.0 / spread};
}

ArgmaxDistribution estimate_argmax_distribution(const std::vector<MaxRecord>& replicates,
                                                Eigen::Index grid_size) {
    if (replicates.empty()) throw std::invalid_argument("argmax distribution needs >= 1 replicate");
    ArgmaxDistribution out;
    out.probabilities = Eigen::VectorXd::Zero(grid_size);
    for (const MaxRecord& record : replicates) {
        if (record.index < 0 || record.index >= grid_size) {
            throw std::invalid_argument("argmax index outside the grid");
        }
        out.probabilities[record.index] += 1.0;
    }
    out.sample_count = replicates.size();
    out.probabilities /= static_cast<double>(replicates.size());
    return out;
}

}  // namespace gpmax
