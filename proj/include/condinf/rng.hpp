#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstddef>

#include "condinf/errors.hpp"
#include "condinf/linalg.hpp"

// Counter-based random numbers (Philox 4x32-10). A stream is identified by
// (master_seed, stream_index); the generator has no hidden state beyond the
// position in the stream, so any draw can be produced from scratch given its
// index. That is what makes replication- and draw-level parallelism
// reproducible independently of scheduling.
//
// Layout: key = master_seed, counter = (block_lo, block_hi, stream_lo,
// stream_hi). Each 128-bit block yields two doubles, or two normals via
// Box-Muller.

namespace condinf {

struct SeededStream {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_index = 0;

    // Derived sub-stream for structured purposes (replication slots, batch
    // indices). Plain addition: callers are responsible for spacing indices.
    SeededStream with_index(std::uint64_t index) const { return {master_seed, index}; }
};

namespace detail {

inline void philox_round(std::array<std::uint32_t, 4>& x, std::uint32_t k0, std::uint32_t k1) {
    const std::uint64_t p0 = 0xD2511F53ull * x[0];
    const std::uint64_t p1 = 0xCD9E8D57ull * x[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    x = {hi1 ^ x[1] ^ k0, lo1, hi0 ^ x[3] ^ k1, lo0};
}

}  // namespace detail

// Ten-round Philox 4x32 block function.
inline std::array<std::uint32_t, 4> philox4x32(std::uint64_t key,
                                               std::array<std::uint32_t, 4> counter) {
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    for (int round = 0; round < 10; ++round) {
        detail::philox_round(counter, k0, k1);
        k0 += 0x9E3779B9u;
        k1 += 0xBB67AE85u;
    }
    return counter;
}

// Sequential view of a stream. Cheap to construct; `u64_offset` positions the
// generator at an absolute draw index so disjoint ranges of one stream can be
// consumed independently.
class Rng {
public:
    explicit Rng(SeededStream stream, std::uint64_t u64_offset = 0)
        : stream_(stream), pos_(u64_offset) {}

    std::uint64_t next_u64() {
        const std::uint64_t block = pos_ >> 1;
        const unsigned word = static_cast<unsigned>(pos_ & 1u);
        ++pos_;
        if (block != cached_block_ || !block_valid_) {
            cache_ = philox4x32(stream_.master_seed,
                                {static_cast<std::uint32_t>(block),
                                 static_cast<std::uint32_t>(block >> 32),
                                 static_cast<std::uint32_t>(stream_.stream_index),
                                 static_cast<std::uint32_t>(stream_.stream_index >> 32)});
            cached_block_ = block;
            block_valid_ = true;
        }
        const std::uint32_t lo = cache_[2 * word];
        const std::uint32_t hi = cache_[2 * word + 1];
        return (static_cast<std::uint64_t>(hi) << 32) | lo;
    }

    // Uniform on [0, 1), 53 bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform01() < p; }

    // Standard normal via Box-Muller; consumes exactly two 64-bit draws per
    // pair, fixed consumption being what keeps draw indices addressable.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log1p(-u1));  // 1-u1 in (0,1]
        const double angle = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(angle);
        have_spare_ = true;
        return r * std::cos(angle);
    }

    SeededStream stream() const { return stream_; }

private:
    SeededStream stream_;
    std::uint64_t pos_ = 0;
    std::uint64_t cached_block_ = ~0ull;
    bool block_valid_ = false;
    bool have_spare_ = false;
    double spare_ = 0.0;
    std::array<std::uint32_t, 4> cache_{};
};

// Number of 64-bit draws consumed by `count` Box-Muller normals, rounded up
// to a whole pair. Used to place independent draw blocks inside one stream.
inline std::uint64_t u64s_for_normals(std::size_t count) {
    return 2ull * ((count + 1) / 2);
}

inline void fill_normals(Rng& rng, double* out, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) out[i] = rng.normal();
}

// count x dim matrix of i.i.d. N(0, L L^T) rows. Row r is generated at a
// fixed offset in the stream, so the output does not depend on traversal
// order or batching.
inline Matrix sample_mvn(const Matrix& chol_lower, std::size_t count, SeededStream stream) {
    const std::size_t dim = chol_lower.rows();
    Matrix out(count, dim);
    const std::uint64_t stride = u64s_for_normals(dim);
    Vector z(dim);
    for (std::size_t r = 0; r < count; ++r) {
        Rng rng(stream, stride * r);
        fill_normals(rng, z.data(), dim);
        double* row = out.row_ptr(r);
        for (std::size_t i = 0; i < dim; ++i) {
            double s = 0.0;
            const double* li = chol_lower.row_ptr(i);
            for (std::size_t j = 0; j <= i; ++j) s += li[j] * z[j];
            row[i] = s;
        }
    }
    return out;
}

}  // namespace condinf
