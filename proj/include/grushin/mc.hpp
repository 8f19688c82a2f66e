#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "grushin/random.hpp"

namespace grushin {

/// Default z-score threshold for statistical assertions: two-sided false
/// alarm rate about 6e-5 per check.
inline constexpr double kZThreshold = 4.0;

/// Monte Carlo estimate in mergeable form. Internally keeps (n, mean, M2);
/// merging two results reproduces the pooled-sample statistics exactly
/// (Chan's parallel-variance combination).
struct MCResult {
    long long n = 0;
    double mean = 0.0;
    double m2 = 0.0;  // sum of squared deviations from the mean
    std::map<std::string, double> extra;

    void add(double x) {
        ++n;
        const double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
    }

    /// Sample standard deviation (n-1 normalization) over sqrt(n).
    double stderror() const {
        if (n < 2) return 0.0;
        const double var = m2 / static_cast<double>(n - 1);
        return std::sqrt(var / static_cast<double>(n));
    }

    double variance() const { return n < 2 ? 0.0 : m2 / static_cast<double>(n - 1); }

    static MCResult merge(const MCResult& a, const MCResult& b) {
        if (a.n == 0) return b;
        if (b.n == 0) return a;
        MCResult r;
        r.n = a.n + b.n;
        const double delta = b.mean - a.mean;
        const double nb = static_cast<double>(b.n);
        const double na = static_cast<double>(a.n);
        const double nn = static_cast<double>(r.n);
        r.mean = a.mean + delta * nb / nn;
        r.m2 = a.m2 + b.m2 + delta * delta * na * nb / nn;
        r.extra = a.extra;
        for (const auto& [k, v] : b.extra) {
            auto it = r.extra.find(k);
            if (it == r.extra.end())
                r.extra[k] = v;
            else
                it->second = (it->second * na + v * nb) / nn;  // extras merge as means
        }
        return r;
    }

    static MCResult from_sample(std::span<const double> xs) {
        MCResult r;
        for (double x : xs) r.add(x);
        return r;
    }
};

/// z-score of mean against a reference value.
inline double z_score(const MCResult& r, double reference) {
    const double se = r.stderror();
    const double diff = r.mean - reference;
    if (se == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return diff / se;
}

/// z-score of the difference of two independent estimates.
inline double z_score(const MCResult& a, const MCResult& b) {
    const double se = std::sqrt(a.stderror() * a.stderror() + b.stderror() * b.stderror());
    const double diff = a.mean - b.mean;
    if (se == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return diff / se;
}

inline int default_thread_count() {
    if (const char* env = std::getenv("GRUSHIN_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Deterministic parallel map-reduce over path indices. Paths are grouped
/// into blocks of a size that depends only on n; workers claim whole blocks,
/// and block accumulators are merged on the calling thread in block order, so
/// the result is bit-identical for every worker count at a fixed seed.
///
/// Acc needs: default-constructible, merge(const Acc&) -> void, and the
/// per-path function fills it via accumulate(acc, path_index, rng).
template <class Acc, class PerPath>
Acc run_parallel(long long n_paths, std::uint64_t seed, int threads, PerPath per_path) {
    if (threads <= 0) threads = default_thread_count();
    const long long block_size = std::clamp<long long>(n_paths / 64, 1, 256);
    const long long n_blocks = (n_paths + block_size - 1) / block_size;
    std::vector<Acc> blocks(static_cast<std::size_t>(n_blocks));
    std::atomic<long long> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        try {
            for (;;) {
                const long long b = next.fetch_add(1);
                if (b >= n_blocks) return;
                Acc acc;
                const long long lo = b * block_size;
                const long long hi = std::min(n_paths, lo + block_size);
                for (long long i = lo; i < hi; ++i) {
                    Rng rng(seed, static_cast<std::uint64_t>(i));
                    per_path(acc, i, rng);
                }
                blocks[static_cast<std::size_t>(b)] = std::move(acc);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    };
    const int nw = static_cast<int>(std::min<long long>(threads, n_blocks));
    if (nw <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(nw));
        for (int i = 0; i < nw; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);
    Acc total;
    for (auto& b : blocks) total.merge(b);
    return total;
}

/// Accumulator reducing one double per path into an MCResult.
struct MeanAcc {
    MCResult result;
    void add(double x) { result.add(x); }
    void merge(const MeanAcc& o) { result = MCResult::merge(result, o.result); }
};

}  // namespace grushin
