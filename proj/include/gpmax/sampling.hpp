#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "gpmax/grid.hpp"
#include "gpmax/kernels.hpp"
#include "gpmax/rng.hpp"

namespace gpmax {

/// One Monte Carlo draw of the field restricted to the grid, with its seed
/// provenance so any replicate can be re-materialised in isolation.
struct FieldSample {
    Eigen::VectorXd values;
    std::uint64_t replicate_id = 0;
    std::uint64_t master_seed = 0;
};

/// Ornstein-Uhlenbeck coupled pair (f, f^t = t f + sqrt(1-t^2) f~) on one grid.
struct CoupledSample {
    FieldSample base;
    double t = 1.0;
    Eigen::VectorXd coupled;
};

/// Jitter escalation ladder tried by the Cholesky sampler before giving up.
inline constexpr double kJitterLadder[3] = {1e-12, 1e-10, 1e-8};

/// Lower-triangular factorization of a PSD covariance (plus the smallest
/// jitter that made it succeed); maps i.i.d. standard normals Z to X = QZ.
class CholeskySampler {
  public:
    explicit CholeskySampler(const Eigen::MatrixXd& covariance, double initial_jitter = 0.0);

    const Eigen::MatrixXd& factor() const { return factor_; }
    double jitter() const { return jitter_; }

    Eigen::VectorXd sample(RngStream& stream) const;

  private:
    Eigen::MatrixXd factor_;
    double jitter_ = 0.0;
};

/// Nonnegative spectrum of the circulant (1D) or block-circulant (2D)
/// extension of the covariance sequence; sampling is exact in law up to the
/// recorded clipping.
struct SpectralEmbedding {
    Eigen::ArrayXd spectrum;     ///< size m (1D) or m*m row-major (2D)
    Eigen::Index points = 0;     ///< grid points retained per axis
    Eigen::Index embed_size = 0; ///< m per axis
    int dimension = 1;
    double mesh = 1.0;
    bool repaired = false;       ///< negatives within tolerance were clipped
    int doublings = 0;           ///< extension doublings applied
};

/// DFT of the first row of the circulant extension of w(0), w(eps), ...;
/// the domain is doubled (up to 16 times, total size capped at 2^24) until
/// negative spectral mass falls inside the tolerance, else EmbeddingFailure.
SpectralEmbedding circulant_embed(const KernelProfile& profile, Eigen::Index n, double mesh,
                                  double nugget = 0.0);

/// Two-dimensional block-circulant analogue on an n-per-axis square grid.
SpectralEmbedding block_circulant_embed(const KernelProfile& profile, Eigen::Index n_per_axis,
                                        double mesh, double nugget = 0.0);

enum class Backend { automatic, cholesky, fft };

const char* backend_name(Backend backend);
Backend parse_backend(const std::string& text);

/// A Gaussian law on grid indices that can be sampled and whose covariance is
/// evaluable entrywise.  Implementations are cloneable so each worker thread
/// owns private scratch; sampling mutates only that scratch.
class GaussianEnsemble {
  public:
    virtual ~GaussianEnsemble() = default;

    virtual Eigen::Index size() const = 0;
    virtual double covariance(Eigen::Index i, Eigen::Index j) const = 0;

    /// One sample from the given stream.
    virtual Eigen::VectorXd sample(RngStream& stream) = 0;

    /// Two independent samples.  Backends that generate independent pairs
    /// jointly (circulant real/imaginary parts) may consume only stream_a;
    /// others draw one sample from each stream.
    virtual std::pair<Eigen::VectorXd, Eigen::VectorXd> sample_pair(RngStream& stream_a,
                                                                    RngStream& stream_b) = 0;

    virtual std::unique_ptr<GaussianEnsemble> clone() const = 0;

    /// True when construction clipped eigenvalues or spectral entries.
    virtual bool repaired() const { return false; }
};

/// i.i.d. standard normals (iid-delta fast path, exact for any backend).
std::unique_ptr<GaussianEnsemble> make_iid_ensemble(Eigen::Index n);

/// Dense-matrix ensemble for an explicit covariance (Cholesky sampling).
std::unique_ptr<GaussianEnsemble> make_matrix_ensemble(const Eigen::MatrixXd& covariance);

/// Ensemble for a covariance model on a grid.  Backend `automatic` picks the
/// Cholesky reference for nonstationary or boundary-log models (n <= 4096)
/// and the circulant FFT backend for stationary models at scale
/// (1D n <= 2^18, 2D up to 512 points per axis).
std::unique_ptr<GaussianEnsemble> make_ensemble(const CovarianceModel& model,
                                                const LatticeGrid& grid,
                                                Backend backend = Backend::automatic);

/// The field draw for one replicate: stream purpose `base_field`.
FieldSample draw_field(GaussianEnsemble& ensemble, std::uint64_t master_seed,
                       std::uint64_t replicate_id);

/// t f + sqrt(1 - t^2) f~ without re-drawing.
Eigen::VectorXd couple_values(const Eigen::VectorXd& base, double t,
                              const Eigen::VectorXd& independent);

/// Base field plus an independent copy for this replicate (purposes
/// base_field / independent_copy).
std::pair<FieldSample, Eigen::VectorXd> draw_field_pair(GaussianEnsemble& ensemble,
                                                        std::uint64_t master_seed,
                                                        std::uint64_t replicate_id);

/// Convenience wrapper assembling the full CoupledSample at a fixed t.
CoupledSample draw_coupled(GaussianEnsemble& ensemble, std::uint64_t master_seed,
                           std::uint64_t replicate_id, double t);

/// Discretisation refinement study: the mesh halves `levels - 1` times from
/// `mesh_coarsest`; every replicate is drawn once on the finest grid and the
/// coarser maxima are taken over nested subsamples, so the per-replicate
/// maximum is nondecreasing in refinement by construction.
struct RefineRow {
    double mesh = 0.0;
    double mean_max = 0.0;
    double se_mean = 0.0;
    double mean_increment = 0.0;  ///< vs the previous (coarser) level; 0 at the first
    double se_increment = 0.0;
    double min_increment = 0.0;   ///< exact per-replicate minimum (>= 0)
};

std::vector<RefineRow> refine_grid_study(const CovarianceModel& model, double side,
                                         double mesh_coarsest, int levels, int replicates,
                                         std::uint64_t master_seed,
                                         Backend backend = Backend::automatic);

}  // namespace gpmax
