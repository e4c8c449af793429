#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace wienerlab {

/// A process trajectory (or any tabulated function) on an ordered time grid.
/// This is the common currency between the simulation, calculus and
/// optimization layers; GridFunction is the same thing by another name.
struct SamplePath {
    std::vector<double> times;
    std::vector<double> values;
    std::int64_t seed_id = 0;

    SamplePath() = default;
    SamplePath(std::vector<double> t, std::vector<double> v, std::int64_t id = 0)
        : times(std::move(t)), values(std::move(v)), seed_id(id) {
        validate();
    }

    std::size_t size() const { return times.size(); }

    double horizon() const { return times.empty() ? 0.0 : times.back(); }

    void validate() const {
        if (times.size() != values.size())
            throw std::invalid_argument("SamplePath: times/values length mismatch");
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (!std::isfinite(values[i]) || !std::isfinite(times[i]))
                throw std::invalid_argument("SamplePath: non-finite entry");
            if (i > 0 && !(times[i] > times[i - 1]))
                throw std::invalid_argument("SamplePath: times not strictly increasing");
        }
    }
};

using GridFunction = SamplePath;

/// Uniform grid t_k = k*T/n_steps, k = 0..n_steps.
inline std::vector<double> uniform_grid(double T, std::size_t n_steps) {
    if (!(T > 0.0) || n_steps < 1)
        throw std::invalid_argument("uniform_grid: need T > 0 and n_steps >= 1");
    std::vector<double> t(n_steps + 1);
    for (std::size_t k = 0; k <= n_steps; ++k) t[k] = static_cast<double>(k) * T / static_cast<double>(n_steps);
    return t;
}

/// Pairwise summation. Reduction order depends only on the element order,
/// never on the worker count.
inline double pairwise_sum(const double* x, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& x) { return pairwise_sum(x.data(), x.size()); }

struct MeanSE {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

inline MeanSE mean_se(const std::vector<double>& x) {
    MeanSE r;
    r.n = x.size();
    if (r.n == 0) return r;
    r.mean = pairwise_sum(x) / static_cast<double>(r.n);
    if (r.n > 1) {
        std::vector<double> dev2(r.n);
        for (std::size_t i = 0; i < r.n; ++i) {
            const double d = x[i] - r.mean;
            dev2[i] = d * d;
        }
        const double var = pairwise_sum(dev2) / static_cast<double>(r.n - 1);
        r.se = std::sqrt(var / static_cast<double>(r.n));
    }
    return r;
}

/// Run fn(i) for i in [0, n). Each index writes to its own slot, so the
/// result is identical for any worker count.
inline void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    workers = std::min<unsigned>(workers, static_cast<unsigned>(n));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr err;
    std::mutex err_mu;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            try {
                for (std::size_t i = w; i < n; i += workers) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

inline double median(std::vector<double> x) {
    if (x.empty()) throw std::invalid_argument("median of empty vector");
    std::sort(x.begin(), x.end());
    const std::size_t n = x.size();
    return (n % 2 == 1) ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

}  // namespace wienerlab
