#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Core>

namespace gpmax {

/// Philox4x32-10 counter-based block cipher (Salmon et al. keying constants).
/// Pure function of (counter, key); used as the sole randomness primitive so
/// that every replicate stream is addressable and order-independent.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter counter, Key key);
};

/// Purpose tag separating the independent streams attached to one replicate.
enum class StreamPurpose : std::uint32_t {
    base_field = 0,       ///< the field f itself
    independent_copy = 1, ///< the fresh copy f~ used by the coupling
    coupling_time = 2,    ///< the Uniform[0,1] draw of t
    scratch = 3,          ///< auxiliary draws (stratification, shuffles)
};

/// Deterministic random stream keyed by (master seed, replicate id, purpose).
/// Streams with distinct keys never overlap; draws within a stream are a pure
/// function of the key and the draw index, so results do not depend on which
/// worker thread consumes the stream.
class RngStream {
  public:
    RngStream(std::uint64_t master_seed, std::uint64_t replicate_id, StreamPurpose purpose);

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    /// Uniform draw in (0, 1] (never 0, safe under log).
    double next_unit();

    /// Standard normal via Box-Muller; pairs are cached.
    double next_gaussian();

    /// Fills a fresh vector of independent standard normals.
    Eigen::VectorXd gaussian_vector(Eigen::Index n);

  private:
    void refill();

    Philox4x32::Key key_;
    std::uint32_t lane_hi_;  // replicate hi bits | purpose tag
    std::uint32_t lane_lo_;  // replicate lo bits
    std::uint64_t block_index_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int buffer_pos_ = 4;  // empty
    double cached_gaussian_ = 0.0;
    bool has_cached_gaussian_ = false;
};

}  // namespace gpmax
