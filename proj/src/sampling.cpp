#include "gpmax/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <unsupported/Eigen/FFT>

#include "gpmax/errors.hpp"

namespace gpmax {

namespace {

constexpr Eigen::Index kCholeskyCap = 4096;
constexpr Eigen::Index kFftCap1d = Eigen::Index{1} << 18;
constexpr Eigen::Index kFftCapPerAxis2d = 512;
constexpr Eigen::Index kEmbedSizeCap = Eigen::Index{1} << 24;
constexpr int kMaxDoublings = 16;

}  // namespace

CholeskySampler::CholeskySampler(const Eigen::MatrixXd& covariance, double initial_jitter) {
    if (covariance.rows() != covariance.cols() || covariance.rows() == 0) {
        throw std::invalid_argument("covariance must be square and nonempty");
    }
    std::vector<double> ladder;
    ladder.push_back(std::max(initial_jitter, 0.0));
    for (double j : kJitterLadder) {
        if (j > ladder.back()) ladder.push_back(j);
    }
    for (double jitter : ladder) {
        Eigen::MatrixXd attempt = covariance;
        if (jitter > 0.0) attempt.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(attempt);
        if (llt.info() == Eigen::Success) {
            factor_ = llt.matrixL();
            jitter_ = jitter;
            return;
        }
    }
    std::ostringstream msg;
    msg << "Cholesky factorization failed after jitter escalation up to " << kJitterLadder[2];
    throw FactorizationFailure(msg.str());
}

Eigen::VectorXd CholeskySampler::sample(RngStream& stream) const {
    return factor_ * stream.gaussian_vector(factor_.rows());
}

namespace {

/// First row of the circulant extension (ring distance) of the covariance
/// sequence, including the nugget mix (1 - nu) w + nu delta.
Eigen::ArrayXd circulant_first_row(const KernelProfile& profile, Eigen::Index m, double mesh,
                                   double nugget) {
    Eigen::ArrayXd row(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const Eigen::Index ring = std::min(k, m - k);
        if (ring == 0) {
            row[k] = 1.0;
        } else {
            row[k] = (1.0 - nugget) * profile(mesh * static_cast<double>(ring));
        }
    }
    return row;
}

/// Clips negative spectral entries within the relative tolerance; returns
/// true on success and sets `repaired`, false when the floor is violated.
bool clip_spectrum(Eigen::ArrayXd& spectrum, bool& repaired) {
    const double largest = spectrum.maxCoeff();
    const double smallest = spectrum.minCoeff();
    if (largest <= 0.0 || smallest < -kPsdTol * largest) return false;
    repaired = smallest < 0.0;
    spectrum = spectrum.cwiseMax(0.0);
    return true;
}

}  // namespace

SpectralEmbedding circulant_embed(const KernelProfile& profile, Eigen::Index n, double mesh,
                                  double nugget) {
    if (n < 2) throw std::invalid_argument("circulant embedding needs n >= 2");
    if (!(mesh > 0.0)) throw std::invalid_argument("mesh must be positive");
    Eigen::FFT<double> fft;
    Eigen::Index m = 2 * (n - 1);
    for (int doubling = 0; doubling <= kMaxDoublings && m <= kEmbedSizeCap; ++doubling) {
        const Eigen::ArrayXd row = circulant_first_row(profile, m, mesh, nugget);
        Eigen::VectorXcd input = row.matrix().cast<std::complex<double>>();
        Eigen::VectorXcd transformed(m);
        fft.fwd(transformed, input);
        SpectralEmbedding embedding;
        embedding.spectrum = transformed.real().array();
        embedding.points = n;
        embedding.embed_size = m;
        embedding.dimension = 1;
        embedding.mesh = mesh;
        embedding.doublings = doubling;
        if (clip_spectrum(embedding.spectrum, embedding.repaired)) return embedding;
        m *= 2;
    }
    std::ostringstream msg;
    msg << "circulant embedding of " << family_name(profile.family)
        << " kept negative spectral mass beyond tolerance after all doublings";
    throw EmbeddingFailure(msg.str());
}

SpectralEmbedding block_circulant_embed(const KernelProfile& profile, Eigen::Index n_per_axis,
                                        double mesh, double nugget) {
    if (n_per_axis < 2) throw std::invalid_argument("block embedding needs n >= 2 per axis");
    if (!(mesh > 0.0)) throw std::invalid_argument("mesh must be positive");
    Eigen::FFT<double> fft;
    Eigen::Index m = 2 * (n_per_axis - 1);
    for (int doubling = 0; doubling <= kMaxDoublings && m * m <= kEmbedSizeCap; ++doubling) {
        Eigen::MatrixXcd block(m, m);
        for (Eigen::Index k1 = 0; k1 < m; ++k1) {
            const double d1 = static_cast<double>(std::min(k1, m - k1));
            for (Eigen::Index k2 = 0; k2 < m; ++k2) {
                const double d2 = static_cast<double>(std::min(k2, m - k2));
                double value;
                if (k1 == 0 && k2 == 0) {
                    value = 1.0;
                } else {
                    value = (1.0 - nugget) * profile(mesh * std::sqrt(d1 * d1 + d2 * d2));
                }
                block(k1, k2) = value;
            }
        }
        // 2D DFT: rows then columns.
        Eigen::VectorXcd line(m);
        Eigen::VectorXcd out(m);
        for (Eigen::Index r = 0; r < m; ++r) {
            line = block.row(r).transpose();
            fft.fwd(out, line);
            block.row(r) = out.transpose();
        }
        for (Eigen::Index c = 0; c < m; ++c) {
            line = block.col(c);
            fft.fwd(out, line);
            block.col(c) = out;
        }
        SpectralEmbedding embedding;
        embedding.spectrum = Eigen::ArrayXd(m * m);
        for (Eigen::Index k1 = 0; k1 < m; ++k1) {
            for (Eigen::Index k2 = 0; k2 < m; ++k2) {
                embedding.spectrum[k1 * m + k2] = block(k1, k2).real();
            }
        }
        embedding.points = n_per_axis;
        embedding.embed_size = m;
        embedding.dimension = 2;
        embedding.mesh = mesh;
        embedding.doublings = doubling;
        if (clip_spectrum(embedding.spectrum, embedding.repaired)) return embedding;
        m *= 2;
    }
    std::ostringstream msg;
    msg << "block-circulant embedding of " << family_name(profile.family)
        << " kept negative spectral mass beyond tolerance after all doublings";
    throw EmbeddingFailure(msg.str());
}

const char* backend_name(Backend backend) {
    switch (backend) {
        case Backend::automatic: return "auto";
        case Backend::cholesky: return "cholesky";
        case Backend::fft: return "fft";
    }
    return "unknown";
}

Backend parse_backend(const std::string& text) {
    if (text == "auto") return Backend::automatic;
    if (text == "cholesky") return Backend::cholesky;
    if (text == "fft") return Backend::fft;
    throw std::invalid_argument("unknown backend '" + text + "' (expected auto|cholesky|fft)");
}

namespace {

class IidEnsemble final : public GaussianEnsemble {
  public:
    explicit IidEnsemble(Eigen::Index n) : n_(n) {
        if (n < 1) throw std::invalid_argument("ensemble needs n >= 1");
    }

    Eigen::Index size() const override { return n_; }
    double covariance(Eigen::Index i, Eigen::Index j) const override { return i == j ? 1.0 : 0.0; }

    Eigen::VectorXd sample(RngStream& stream) override { return stream.gaussian_vector(n_); }

    std::pair<Eigen::VectorXd, Eigen::VectorXd> sample_pair(RngStream& stream_a,
                                                            RngStream& stream_b) override {
        return {stream_a.gaussian_vector(n_), stream_b.gaussian_vector(n_)};
    }

    std::unique_ptr<GaussianEnsemble> clone() const override {
        return std::make_unique<IidEnsemble>(n_);
    }

  private:
    Eigen::Index n_;
};

class MatrixEnsemble final : public GaussianEnsemble {
  public:
    explicit MatrixEnsemble(const Eigen::MatrixXd& covariance)
        : covariance_(covariance), sampler_(covariance) {}

    Eigen::Index size() const override { return covariance_.rows(); }
    double covariance(Eigen::Index i, Eigen::Index j) const override { return covariance_(i, j); }

    Eigen::VectorXd sample(RngStream& stream) override { return sampler_.sample(stream); }

    std::pair<Eigen::VectorXd, Eigen::VectorXd> sample_pair(RngStream& stream_a,
                                                            RngStream& stream_b) override {
        return {sampler_.sample(stream_a), sampler_.sample(stream_b)};
    }

    std::unique_ptr<GaussianEnsemble> clone() const override {
        return std::make_unique<MatrixEnsemble>(covariance_);
    }

  private:
    Eigen::MatrixXd covariance_;
    CholeskySampler sampler_;
};

/// Dense-matrix ensemble built from a model/grid pair (reference backend).
class LatticeCholeskyEnsemble final : public GaussianEnsemble {
  public:
    LatticeCholeskyEnsemble(const CovarianceModel& model, const LatticeGrid& grid)
        : model_(model), grid_(grid) {
        CovMatrixResult built = build_cov_matrix(model, grid);
        repaired_ = built.repaired;
        covariance_ = std::move(built.matrix);
        sampler_ = std::make_unique<CholeskySampler>(covariance_);
    }

    Eigen::Index size() const override { return covariance_.rows(); }
    double covariance(Eigen::Index i, Eigen::Index j) const override { return covariance_(i, j); }
    bool repaired() const override { return repaired_; }

    Eigen::VectorXd sample(RngStream& stream) override { return sampler_->sample(stream); }

    std::pair<Eigen::VectorXd, Eigen::VectorXd> sample_pair(RngStream& stream_a,
                                                            RngStream& stream_b) override {
        return {sampler_->sample(stream_a), sampler_->sample(stream_b)};
    }

    std::unique_ptr<GaussianEnsemble> clone() const override {
        return std::make_unique<LatticeCholeskyEnsemble>(model_, grid_);
    }

  private:
    CovarianceModel model_;
    LatticeGrid grid_;
    Eigen::MatrixXd covariance_;
    std::unique_ptr<CholeskySampler> sampler_;
    bool repaired_ = false;
};

/// Stationary 1D circulant sampler.  Single draws use the Hermitian-noise
/// construction (m normals, one FFT).  Pairs use one complex FFT whose real
/// and imaginary parts are exactly independent samples (the spectrum is
/// symmetric), so both members of a coupled pair cost a single transform;
/// the pair is then a function of stream_a alone.
class CirculantEnsemble final : public GaussianEnsemble {
  public:
    CirculantEnsemble(const CovarianceModel& model, const LatticeGrid& grid)
        : model_(model),
          grid_(grid),
          embedding_(circulant_embed(model.profile, grid.size(), grid.mesh(), model.nugget)) {
        prepare();
    }

    explicit CirculantEnsemble(const SpectralEmbedding& embedding, const CovarianceModel& model,
                               const LatticeGrid& grid)
        : model_(model), grid_(grid), embedding_(embedding) {
        prepare();
    }

    Eigen::Index size() const override { return embedding_.points; }
    double covariance(Eigen::Index i, Eigen::Index j) const override {
        if (i == j) return 1.0;
        return (1.0 - model_.nugget) * model_.profile(grid_.mesh() * std::abs(double(i - j)));
    }
    bool repaired() const override { return embedding_.repaired; }

    Eigen::VectorXd sample(RngStream& stream) override {
        const Eigen::Index m = embedding_.embed_size;
        // Hermitian spectral noise: W_k = conj(W_{m-k}) makes the transform real.
        work_.setZero(m);
        work_[0] = half_amp_[0] * std::numbers::sqrt2 * stream.next_gaussian();
        for (Eigen::Index k = 1; k < m / 2; ++k) {
            const std::complex<double> w(half_amp_[k] * stream.next_gaussian(),
                                         half_amp_[k] * stream.next_gaussian());
            work_[k] = w;
            work_[m - k] = std::conj(w);
        }
        work_[m / 2] = half_amp_[m / 2] * std::numbers::sqrt2 * stream.next_gaussian();
        fft_.fwd(out_, work_);
        return out_.real().head(embedding_.points);
    }

    std::pair<Eigen::VectorXd, Eigen::VectorXd> sample_pair(RngStream& stream_a,
                                                            RngStream& /*stream_b*/) override {
        const Eigen::Index m = embedding_.embed_size;
        work_.resize(m);
        for (Eigen::Index k = 0; k < m; ++k) {
            work_[k] = std::complex<double>(amp_[k] * stream_a.next_gaussian(),
                                            amp_[k] * stream_a.next_gaussian());
        }
        fft_.fwd(out_, work_);
        return {out_.real().head(embedding_.points), out_.imag().head(embedding_.points)};
    }

    std::unique_ptr<GaussianEnsemble> clone() const override {
        return std::make_unique<CirculantEnsemble>(embedding_, model_, grid_);
    }

  private:
    void prepare() {
        const Eigen::Index m = embedding_.embed_size;
        const double dm = static_cast<double>(m);
        amp_ = (embedding_.spectrum / dm).sqrt();
        half_amp_ = (embedding_.spectrum / (2.0 * dm)).sqrt();
        work_.resize(m);
        out_.resize(m);
    }

    CovarianceModel model_;
    LatticeGrid grid_;
    SpectralEmbedding embedding_;
    Eigen::ArrayXd amp_;       // sqrt(lambda_k / m)
    Eigen::ArrayXd half_amp_;  // sqrt(lambda_k / 2m)
    Eigen::FFT<double> fft_;
    Eigen::VectorXcd work_;
    Eigen::VectorXcd out_;
};

/// Stationary 2D block-circulant sampler (complex scheme for both singles and
/// pairs; the imaginary part is discarded for single draws).
class BlockCirculantEnsemble final : public GaussianEnsemble {
  public:
    BlockCirculantEnsemble(const CovarianceModel& model, const LatticeGrid& grid)
        : model_(model),
          grid_(grid),
          embedding_(block_circulant_embed(model.profile, grid.per_axis(), grid.mesh(),
                                           model.nugget)) {
        prepare();
    }

    BlockCirculantEnsemble(const SpectralEmbedding& embedding, const CovarianceModel& model,
                           const LatticeGrid& grid)
        : model_(model), grid_(grid), embedding_(embedding) {
        prepare();
    }

    Eigen::Index size() const override { return grid_.size(); }
    double covariance(Eigen::Index i, Eigen::Index j) const override {
        if (i == j) return 1.0;
        return (1.0 - model_.nugget) * model_.profile(grid_.distance(i, j));
    }
    bool repaired() const override { return embedding_.repaired; }

    Eigen::VectorXd sample(RngStream& stream) override { return transform(stream).first; }

    std::pair<Eigen::VectorXd, Eigen::VectorXd> sample_pair(RngStream& stream_a,
                                                            RngStream& /*stream_b*/) override {
        return transform(stream_a);
    }

    std::unique_ptr<GaussianEnsemble> clone() const override {
        return std::make_unique<BlockCirculantEnsemble>(embedding_, model_, grid_);
    }

  private:
    void prepare() {
        const Eigen::Index m = embedding_.embed_size;
        amp_ = (embedding_.spectrum / static_cast<double>(m * m)).sqrt();
        field_.resize(m, m);
    }

    std::pair<Eigen::VectorXd, Eigen::VectorXd> transform(RngStream& stream) {
        const Eigen::Index m = embedding_.embed_size;
        const Eigen::Index p = embedding_.points;
        for (Eigen::Index k1 = 0; k1 < m; ++k1) {
            for (Eigen::Index k2 = 0; k2 < m; ++k2) {
                const double a = amp_[k1 * m + k2];
                field_(k1, k2) = std::complex<double>(a * stream.next_gaussian(),
                                                      a * stream.next_gaussian());
            }
        }
        Eigen::VectorXcd line(m);
        Eigen::VectorXcd out(m);
        for (Eigen::Index r = 0; r < m; ++r) {
            line = field_.row(r).transpose();
            fft_.fwd(out, line);
            field_.row(r) = out.transpose();
        }
        for (Eigen::Index c = 0; c < m; ++c) {
            line = field_.col(c);
            fft_.fwd(out, line);
            field_.col(c) = out;
        }
        Eigen::VectorXd first(p * p);
        Eigen::VectorXd second(p * p);
        for (Eigen::Index x = 0; x < p; ++x) {
            for (Eigen::Index y = 0; y < p; ++y) {
                first[x * p + y] = field_(x, y).real();
                second[x * p + y] = field_(x, y).imag();
            }
        }
        return {std::move(first), std::move(second)};
    }

    CovarianceModel model_;
    LatticeGrid grid_;
    SpectralEmbedding embedding_;
    Eigen::ArrayXd amp_;
    Eigen::FFT<double> fft_;
    Eigen::MatrixXcd field_;
};

}  // namespace

std::unique_ptr<GaussianEnsemble> make_iid_ensemble(Eigen::Index n) {
    return std::make_unique<IidEnsemble>(n);
}

std::unique_ptr<GaussianEnsemble> make_matrix_ensemble(const Eigen::MatrixXd& covariance) {
    return std::make_unique<MatrixEnsemble>(covariance);
}

std::unique_ptr<GaussianEnsemble> make_ensemble(const CovarianceModel& model,
                                                const LatticeGrid& grid, Backend backend) {
    validate_model_grid(model, grid);
    const Eigen::Index n = grid.size();

    // The iid-delta law is i.i.d. normals on every grid; sample it directly.
    if (model.profile.family == KernelFamily::iid_delta) return make_iid_ensemble(n);

    if (backend == Backend::automatic) {
        if (!model.stationary() ||
            (model.profile.family == KernelFamily::boundary_log && n <= kCholeskyCap)) {
            backend = Backend::cholesky;
        } else {
            backend = Backend::fft;
        }
    }

    if (backend == Backend::cholesky) {
        if (n > kCholeskyCap) {
            throw std::invalid_argument("cholesky backend is capped at 4096 grid points");
        }
        return std::make_unique<LatticeCholeskyEnsemble>(model, grid);
    }

    if (!model.stationary()) {
        throw std::invalid_argument("fft backend requires a stationary model");
    }
    if (grid.dimension() == 1) {
        if (n > kFftCap1d) throw std::invalid_argument("fft backend is capped at 2^18 points in 1D");
        return std::make_unique<CirculantEnsemble>(model, grid);
    }
    if (grid.per_axis() > kFftCapPerAxis2d) {
        throw std::invalid_argument("fft backend is capped at 512 points per axis in 2D");
    }
    return std::make_unique<BlockCirculantEnsemble>(model, grid);
}

FieldSample draw_field(GaussianEnsemble& ensemble, std::uint64_t master_seed,
                       std::uint64_t replicate_id) {
    RngStream stream(master_seed, replicate_id, StreamPurpose::base_field);
    FieldSample sample;
    sample.values = ensemble.sample(stream);
    sample.replicate_id = replicate_id;
    sample.master_seed = master_seed;
    return sample;
}

Eigen::VectorXd couple_values(const Eigen::VectorXd& base, double t,
                              const Eigen::VectorXd& independent) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("coupling requires t in [0,1]");
    if (base.size() != independent.size()) throw std::invalid_argument("coupling size mismatch");
    return t * base + std::sqrt(1.0 - t * t) * independent;
}

std::pair<FieldSample, Eigen::VectorXd> draw_field_pair(GaussianEnsemble& ensemble,
                                                        std::uint64_t master_seed,
                                                        std::uint64_t replicate_id) {
    RngStream stream_a(master_seed, replicate_id, StreamPurpose::base_field);
    RngStream stream_b(master_seed, replicate_id, StreamPurpose::independent_copy);
    auto [base_values, copy_values] = ensemble.sample_pair(stream_a, stream_b);
    FieldSample base;
    base.values = std::move(base_values);
    base.replicate_id = replicate_id;
    base.master_seed = master_seed;
    return {std::move(base), std::move(copy_values)};
}

CoupledSample draw_coupled(GaussianEnsemble& ensemble, std::uint64_t master_seed,
                           std::uint64_t replicate_id, double t) {
    auto [base, independent] = draw_field_pair(ensemble, master_seed, replicate_id);
    CoupledSample out;
    out.coupled = couple_values(base.values, t, independent);
    out.base = std::move(base);
    out.t = t;
    return out;
}

std::vector<RefineRow> refine_grid_study(const CovarianceModel& model, double side,
                                         double mesh_coarsest, int levels, int replicates,
                                         std::uint64_t master_seed, Backend backend) {
    if (levels < 1) throw std::invalid_argument("refine study needs >= 1 level");
    if (replicates < 1) throw std::invalid_argument("refine study needs >= 1 replicate");
    const double mesh_finest = mesh_coarsest / std::pow(2.0, levels - 1);
    const LatticeGrid fine_grid(model.dimension, side, mesh_finest);
    if (model.dimension != 1) throw std::invalid_argument("refine study is 1D");
    auto ensemble = make_ensemble(model, fine_grid, backend);

    // maxima[level][replicate], level 0 = coarsest.
    std::vector<std::vector<double>> maxima(levels, std::vector<double>(replicates));
    for (int r = 0; r < replicates; ++r) {
        const FieldSample sample = draw_field(*ensemble, master_seed, static_cast<std::uint64_t>(r));
        for (int level = 0; level < levels; ++level) {
            const Eigen::Index stride = Eigen::Index{1} << (levels - 1 - level);
            double best = sample.values[0];
            for (Eigen::Index i = 0; i < sample.values.size(); i += stride) {
                best = std::max(best, sample.values[i]);
            }
            maxima[level][r] = best;
        }
    }

    std::vector<RefineRow> rows(levels);
    for (int level = 0; level < levels; ++level) {
        RefineRow& row = rows[level];
        row.mesh = mesh_coarsest / std::pow(2.0, level);
        {
            double sum = 0.0;
            for (double v : maxima[level]) sum += v;
            const double mean = sum / replicates;
            double m2 = 0.0;
            for (double v : maxima[level]) m2 += (v - mean) * (v - mean);
            const double var = replicates > 1 ? m2 / (replicates - 1) : 0.0;
            row.mean_max = mean;
            row.se_mean = std::sqrt(var / replicates);
        }
        if (level > 0) {
            double sum = 0.0;
            double min_inc = maxima[level][0] - maxima[level - 1][0];
            for (int r = 0; r < replicates; ++r) {
                const double inc = maxima[level][r] - maxima[level - 1][r];
                sum += inc;
                min_inc = std::min(min_inc, inc);
            }
            const double mean_inc = sum / replicates;
            double m2 = 0.0;
            for (int r = 0; r < replicates; ++r) {
                const double inc = maxima[level][r] - maxima[level - 1][r];
                m2 += (inc - mean_inc) * (inc - mean_inc);
            }
            row.mean_increment = mean_inc;
            row.se_increment =
                replicates > 1 ? std::sqrt(m2 / (replicates - 1) / replicates) : 0.0;
            row.min_increment = min_inc;
        }
    }
    return rows;
}

}  // namespace gpmax
