#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace grushin {

/// Philox-4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// Stateless apart from a 128-bit counter and a 64-bit key, so a stream is
/// fully determined by (seed, stream_id). Streams with distinct ids are
/// statistically independent, which is what lets a path batch be partitioned
/// across workers with reproducible results: path i always consumes the
/// stream (seed, i), no matter which thread runs it.
class Philox4x32 {
public:
    using result_type = std::uint64_t;

    Philox4x32() : Philox4x32(0, 0) {}
    Philox4x32(std::uint64_t seed, std::uint64_t stream_id)
        : key0_(static_cast<std::uint32_t>(seed)),
          key1_(static_cast<std::uint32_t>(seed >> 32)),
          block_(0),
          stream_(stream_id),
          have_second_(false),
          second_(0) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type(0); }

    result_type operator()() {
        if (have_second_) {
            have_second_ = false;
            return second_;
        }
        std::uint32_t c0 = static_cast<std::uint32_t>(block_);
        std::uint32_t c1 = static_cast<std::uint32_t>(block_ >> 32);
        std::uint32_t c2 = static_cast<std::uint32_t>(stream_);
        std::uint32_t c3 = static_cast<std::uint32_t>(stream_ >> 32);
        std::uint32_t k0 = key0_, k1 = key1_;
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                k0 += 0x9E3779B9u;
                k1 += 0xBB67AE85u;
            }
            const std::uint64_t p0 = std::uint64_t(0xD2511F53u) * c0;
            const std::uint64_t p1 = std::uint64_t(0xCD9E8D57u) * c2;
            const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            const std::uint32_t n0 = hi1 ^ c1 ^ k0;
            const std::uint32_t n1 = lo1;
            const std::uint32_t n2 = hi0 ^ c3 ^ k1;
            const std::uint32_t n3 = lo0;
            c0 = n0;
            c1 = n1;
            c2 = n2;
            c3 = n3;
        }
        ++block_;
        second_ = (std::uint64_t(c2) << 32) | c3;
        have_second_ = true;
        return (std::uint64_t(c0) << 32) | c1;
    }

    /// Raw one-block evaluation, exposed for known-answer tests.
    static void raw_block(const std::uint32_t ctr[4], const std::uint32_t key[2],
                          std::uint32_t out[4]) {
        std::uint32_t c0 = ctr[0], c1 = ctr[1], c2 = ctr[2], c3 = ctr[3];
        std::uint32_t k0 = key[0], k1 = key[1];
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                k0 += 0x9E3779B9u;
                k1 += 0xBB67AE85u;
            }
            const std::uint64_t p0 = std::uint64_t(0xD2511F53u) * c0;
            const std::uint64_t p1 = std::uint64_t(0xCD9E8D57u) * c2;
            const std::uint32_t n0 = static_cast<std::uint32_t>(p1 >> 32) ^ c1 ^ k0;
            const std::uint32_t n1 = static_cast<std::uint32_t>(p1);
            const std::uint32_t n2 = static_cast<std::uint32_t>(p0 >> 32) ^ c3 ^ k1;
            const std::uint32_t n3 = static_cast<std::uint32_t>(p0);
            c0 = n0;
            c1 = n1;
            c2 = n2;
            c3 = n3;
        }
        out[0] = c0;
        out[1] = c1;
        out[2] = c2;
        out[3] = c3;
    }

private:
    std::uint32_t key0_, key1_;
    std::uint64_t block_;
    std::uint64_t stream_;
    bool have_second_;
    std::uint64_t second_;
};

/// Random stream with the exact samplers the simulation needs.
///
/// All distributions are sampled exactly (rejection/inversion); in particular
/// Gamma and Poisson have no normal approximation anywhere, since the tails
/// of both drive the squared-Bessel absorption statistics.
class Rng {
public:
    Rng() : engine_(0, 0) {}
    explicit Rng(std::uint64_t seed, std::uint64_t stream_id = 0)
        : engine_(seed, stream_id) {}

    std::uint64_t bits() { return engine_(); }

    /// Uniform on the open interval (0,1); never returns 0 or 1.
    double uniform() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Marsaglia's polar method (pair cached).
    double normal() {
        if (have_normal_) {
            have_normal_ = false;
            return cached_normal_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        cached_normal_ = v * f;
        have_normal_ = true;
        return u * f;
    }

    double exponential(double mean) { return -mean * std::log(uniform()); }

    /// Gamma(shape, scale 1), Marsaglia-Tsang for shape >= 1 and the
    /// boost U^{1/shape} for shape < 1. shape == 0 returns 0 (degenerate).
    double gamma(double shape) {
        if (shape < 0.0 || !std::isfinite(shape))
            throw std::domain_error("Rng::gamma: shape must be finite and >= 0");
        if (shape == 0.0) return 0.0;
        double boost = 1.0;
        double k = shape;
        if (k < 1.0) {
            boost = std::pow(uniform(), 1.0 / k);
            k += 1.0;
        }
        const double d = k - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return boost * d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
                return boost * d * v;
        }
    }

    /// Poisson(mean): product inversion below 10, Hormann's PTRD above.
    long poisson(double mean) {
        if (mean < 0.0 || !std::isfinite(mean))
            throw std::domain_error("Rng::poisson: mean must be finite and >= 0");
        if (mean == 0.0) return 0;
        if (mean < 10.0) {
            const double limit = std::exp(-mean);
            long k = 0;
            double p = uniform();
            while (p > limit) {
                ++k;
                p *= uniform();
            }
            return k;
        }
        return poisson_ptrd(mean);
    }

private:
    long poisson_ptrd(double mu) {
        const double smu = std::sqrt(mu);
        const double b = 0.931 + 2.53 * smu;
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double v_r = 0.9277 - 3.6224 / (b - 2.0);
        for (;;) {
            const double u = uniform() - 0.5;
            const double v = uniform();
            const double us = 0.5 - std::fabs(u);
            const double kf = std::floor((2.0 * a / us + b) * u + mu + 0.43);
            if (us >= 0.07 && v <= v_r) return static_cast<long>(kf);
            if (kf < 0.0 || (us < 0.013 && v > us)) continue;
            const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
            const double rhs = kf * std::log(mu) - mu - std::lgamma(kf + 1.0);
            if (lhs <= rhs) return static_cast<long>(kf);
        }
    }

    Philox4x32 engine_;
    bool have_normal_ = false;
    double cached_normal_ = 0.0;
};

}  // namespace grushin
