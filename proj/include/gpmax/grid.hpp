#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include <Eigen/Core>

namespace gpmax {

/// The discretised box Lambda_{R,eps} = [0,R]^d intersected with (eps Z)^d,
/// enumerated in row-major order.  An optional origin shifts the whole window
/// (used by translation-invariance checks); refinement halves the mesh and
/// yields a superset of the points (nested grids).
class LatticeGrid {
  public:
    LatticeGrid(int dimension, double side, double mesh, double origin = 0.0)
        : dimension_(dimension), side_(side), mesh_(mesh), origin_(origin) {
        if (dimension != 1 && dimension != 2) throw std::invalid_argument("dimension must be 1 or 2");
        if (!(side > 0.0)) throw std::invalid_argument("side must be positive");
        if (!(mesh > 0.0)) throw std::invalid_argument("mesh must be positive");
        // Nudge guards against 1024/0.25 evaluating to 4095.999... in floating point.
        per_axis_ = static_cast<Eigen::Index>(std::floor(side / mesh + 1e-9)) + 1;
        size_ = per_axis_;
        if (dimension == 2) size_ *= per_axis_;
    }

    int dimension() const { return dimension_; }
    double side() const { return side_; }
    double mesh() const { return mesh_; }
    double origin() const { return origin_; }
    Eigen::Index per_axis() const { return per_axis_; }
    Eigen::Index size() const { return size_; }

    /// Coordinates of the flat row-major index (second entry unused in 1D).
    std::array<double, 2> coord(Eigen::Index flat) const {
        if (dimension_ == 1) return {origin_ + mesh_ * static_cast<double>(flat), 0.0};
        return {origin_ + mesh_ * static_cast<double>(flat / per_axis_),
                origin_ + mesh_ * static_cast<double>(flat % per_axis_)};
    }

    /// Euclidean distance between two lattice sites.
    double distance(Eigen::Index i, Eigen::Index j) const {
        if (dimension_ == 1) return mesh_ * std::abs(static_cast<double>(i - j));
        const double dx = static_cast<double>(i / per_axis_ - j / per_axis_);
        const double dy = static_cast<double>(i % per_axis_ - j % per_axis_);
        return mesh_ * std::sqrt(dx * dx + dy * dy);
    }

    /// Grid with half the mesh on the same window; its points contain this
    /// grid's points (coarse index k maps to fine index 2k per axis).
    LatticeGrid refined() const { return LatticeGrid(dimension_, side_, mesh_ / 2.0, origin_); }

  private:
    int dimension_;
    double side_;
    double mesh_;
    double origin_;
    Eigen::Index per_axis_;
    Eigen::Index size_;
};

}  // namespace gpmax
