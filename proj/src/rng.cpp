#include "gpmax/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gpmax {

namespace {

constexpr std::uint32_t kMult0 = 0xD2511F53u;
constexpr std::uint32_t kMult1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& x, const Philox4x32::Key& k) {
    const std::uint64_t p0 = std::uint64_t{kMult0} * x[0];
    const std::uint64_t p1 = std::uint64_t{kMult1} * x[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    x = {hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0};
}

}  // namespace

Philox4x32::Counter Philox4x32::block(Counter counter, Key key) {
    for (int round = 0; round < 10; ++round) {
        philox_round(counter, key);
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return counter;
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t replicate_id, StreamPurpose purpose) {
    // Replicate ids occupy 48 bits; the top counter byte carries the purpose
    // tag so streams for one replicate are guaranteed disjoint.
    if (replicate_id >> 48 != 0) {
        throw std::invalid_argument("replicate_id must fit in 48 bits");
    }
    key_ = {static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32)};
    lane_lo_ = static_cast<std::uint32_t>(replicate_id);
    lane_hi_ = static_cast<std::uint32_t>(replicate_id >> 32) |
               (static_cast<std::uint32_t>(purpose) << 24);
}

void RngStream::refill() {
    const Philox4x32::Counter counter = {static_cast<std::uint32_t>(block_index_),
                                         static_cast<std::uint32_t>(block_index_ >> 32), lane_lo_,
                                         lane_hi_};
    buffer_ = Philox4x32::block(counter, key_);
    ++block_index_;
    buffer_pos_ = 0;
}

std::uint32_t RngStream::next_u32() {
    if (buffer_pos_ == 4) refill();
    return buffer_[buffer_pos_++];
}

std::uint64_t RngStream::next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
}

double RngStream::next_unit() {
    // 53-bit mantissa mapped to (0, 1]: (m + 1) * 2^-53 with m in [0, 2^53).
    const std::uint64_t m = next_u64() >> 11;
    return static_cast<double>(m + 1) * 0x1.0p-53;
}

double RngStream::next_gaussian() {
    if (has_cached_gaussian_) {
        has_cached_gaussian_ = false;
        return cached_gaussian_;
    }
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_gaussian_ = radius * std::sin(angle);
    has_cached_gaussian_ = true;
    return radius * std::cos(angle);
}

Eigen::VectorXd RngStream::gaussian_vector(Eigen::Index n) {
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = next_gaussian();
    return out;
}

}  // namespace gpmax
