#pragma once

// Exact simulation of the supported Gaussian process families on a uniform
// grid (covariance factorization with a jitter fallback), the fBm-via-
// Volterra route carrying its driving Wiener path, the fractional
// Ornstein-Uhlenbeck Euler scheme, and the numerical (A)/(B) condition
// checks.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wienerlab/common.hpp"
#include "wienerlab/frac_calc.hpp"
#include "wienerlab/rng.hpp"

namespace wienerlab::gauss {

enum class Kind { Wiener, Fbm, Fou, Subfractional, Bifractional, Mixed, FbmCombo, Volterra };

inline const char* kind_name(Kind k) {
    switch (k) {
        case Kind::Wiener: return "wiener";
        case Kind::Fbm: return "fbm";
        case Kind::Fou: return "fou";
        case Kind::Subfractional: return "subfractional";
        case Kind::Bifractional: return "bifractional";
        case Kind::Mixed: return "mixed";
        case Kind::FbmCombo: return "fbm_combo";
        case Kind::Volterra: return "volterra";
    }
    return "?";
}

struct GaussianModel {
    Kind kind = Kind::Wiener;
    double T = 1.0;
    double H = 0.5;   // Hurst index where applicable
    double K = 1.0;   // bifractional second index
    double a = 0.0, b = 0.0, sigma = 1.0, y0 = 0.0;  // fOU parameters
    std::vector<double> combo_weights;
    std::vector<double> combo_hursts;
    std::function<double(double, double)> volterra_kernel;  // K(t,s)
    double volterra_r = 0.0;  // singularity exponent of the kernel at s=0

    static GaussianModel wiener(double T = 1.0) { return {Kind::Wiener, T}; }

    static GaussianModel fbm(double H, double T = 1.0) {
        GaussianModel m{Kind::Fbm, T};
        m.H = H;
        m.check();
        return m;
    }

    static GaussianModel fou(double a, double b, double sigma, double H, double y0, double T = 1.0) {
        GaussianModel m{Kind::Fou, T};
        m.a = a; m.b = b; m.sigma = sigma; m.H = H; m.y0 = y0;
        m.check();
        return m;
    }

    static GaussianModel subfractional(double H, double T = 1.0) {
        GaussianModel m{Kind::Subfractional, T};
        m.H = H;
        m.check();
        return m;
    }

    static GaussianModel bifractional(double H, double K, double T = 1.0) {
        GaussianModel m{Kind::Bifractional, T};
        m.H = H; m.K = K;
        m.check();
        return m;
    }

    static GaussianModel mixed(double H, double T = 1.0) {
        GaussianModel m{Kind::Mixed, T};
        m.H = H;
        m.check();
        return m;
    }

    static GaussianModel fbm_combo(std::vector<double> weights, std::vector<double> hursts,
                                   double T = 1.0) {
        GaussianModel m{Kind::FbmCombo, T};
        m.combo_weights = std::move(weights);
        m.combo_hursts = std::move(hursts);
        m.check();
        return m;
    }

    static GaussianModel volterra(std::function<double(double, double)> kernel, double r = 0.0,
                                  double T = 1.0) {
        GaussianModel m{Kind::Volterra, T};
        m.volterra_kernel = std::move(kernel);
        m.volterra_r = r;
        return m;
    }

    void check() const {
        if (!(T > 0.0)) throw std::invalid_argument("GaussianModel: T must be > 0");
        auto check_h = [](double h) {
            if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("Hurst parameter must lie in (0,1)");
        };
        switch (kind) {
            case Kind::Fbm:
            case Kind::Subfractional:
            case Kind::Mixed:
                check_h(H);
                break;
            case Kind::Bifractional:
                check_h(H);
                if (!(K > 0.0 && K < 1.0))
                    throw std::invalid_argument("bifractional K must lie in (0,1)");
                break;
            case Kind::Fou:
                check_h(H);
                if (!(sigma >= 0.0)) throw std::invalid_argument("fOU sigma must be >= 0");
                break;
            case Kind::FbmCombo: {
                if (combo_weights.empty() || combo_weights.size() != combo_hursts.size())
                    throw std::invalid_argument("fbm_combo: weights/hursts mismatch");
                for (double h : combo_hursts) check_h(h);
                for (double w : combo_weights)
                    if (!std::isfinite(w)) throw std::invalid_argument("fbm_combo: non-finite weight");
                break;
            }
            default:
                break;
        }
    }
};

inline double fbm_cov(double H, double s, double t) {
    return 0.5 * (std::pow(s, 2.0 * H) + std::pow(t, 2.0 * H) - std::pow(std::abs(t - s), 2.0 * H));
}

/// Closed-form covariance R(s,t). Throws for kinds whose covariance is only
/// available empirically (fOU, generic Volterra).
inline double covariance(const GaussianModel& m, double s, double t) {
    if (s < 0.0 || t < 0.0 || s > m.T + 1e-12 || t > m.T + 1e-12)
        throw std::invalid_argument("covariance: arguments outside [0,T]");
    switch (m.kind) {
        case Kind::Wiener:
            return std::min(s, t);
        case Kind::Fbm:
            return fbm_cov(m.H, s, t);
        case Kind::Subfractional:
            return std::pow(t, 2.0 * m.H) + std::pow(s, 2.0 * m.H) -
                   0.5 * (std::pow(t + s, 2.0 * m.H) + std::pow(std::abs(t - s), 2.0 * m.H));
        case Kind::Bifractional:
            return std::pow(2.0, -m.K) *
                   (std::pow(std::pow(t, 2.0 * m.H) + std::pow(s, 2.0 * m.H), m.K) -
                    std::pow(std::abs(t - s), 2.0 * m.H * m.K));
        case Kind::Mixed:
            return std::min(s, t) + fbm_cov(m.H, s, t);
        case Kind::FbmCombo: {
            double acc = 0.0;
            for (std::size_t i = 0; i < m.combo_weights.size(); ++i)
                acc += m.combo_weights[i] * m.combo_weights[i] * fbm_cov(m.combo_hursts[i], s, t);
            return acc;
        }
        default:
            throw std::invalid_argument(std::string("covariance: unsupported kind ") + kind_name(m.kind));
    }
}

/// Factorizes the covariance of a closed-form model once; sampling then
/// costs one matrix-vector product per path. Paths use counter-based
/// per-path streams, so the result is independent of the worker count.
class ExactSampler {
  public:
    ExactSampler(const GaussianModel& model, std::size_t n_steps)
        : model_(model), times_(uniform_grid(model.T, n_steps)) {
        const std::size_t n = n_steps;
        Eigen::MatrixXd cov(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j)
                cov(i, j) = cov(j, i) = covariance(model_, times_[i + 1], times_[j + 1]);

        double jitter = 1e-12;
        while (true) {
            Eigen::MatrixXd work = cov;
            work.diagonal().array() += jitter;
            Eigen::LLT<Eigen::MatrixXd> llt(work);
            if (llt.info() == Eigen::Success) {
                factor_ = llt.matrixL();
                return;
            }
            if (jitter >= 1e-8)
                throw std::runtime_error("ExactSampler: covariance factorization failed (not PSD)");
            jitter *= 10.0;
        }
    }

    const std::vector<double>& times() const { return times_; }

    SamplePath sample_one(std::uint64_t seed, std::uint64_t path_index) const {
        const std::size_t n = times_.size() - 1;
        PathRng rng(seed, path_index);
        Eigen::VectorXd z(n);
        for (std::size_t i = 0; i < n; ++i) z(i) = rng.gaussian();
        Eigen::VectorXd v = factor_ * z;
        SamplePath p;
        p.times = times_;
        p.seed_id = static_cast<std::int64_t>(path_index);
        p.values.resize(n + 1);
        p.values[0] = 0.0;
        for (std::size_t i = 0; i < n; ++i) p.values[i + 1] = v(i);
        return p;
    }

    std::vector<SamplePath> sample(std::size_t n_paths, std::uint64_t seed,
                                   unsigned workers = 1) const {
        std::vector<SamplePath> out(n_paths);
        parallel_for(n_paths, workers, [&](std::size_t p) { out[p] = sample_one(seed, p); });
        return out;
    }

  private:
    GaussianModel model_;
    std::vector<double> times_;
    Eigen::MatrixXd factor_;
};

/// Exact sampling for models with closed-form covariance.
inline std::vector<SamplePath> simulate_exact(const GaussianModel& model, std::size_t n_steps,
                                              std::size_t n_paths, std::uint64_t seed,
                                              unsigned workers = 1) {
    if (model.kind == Kind::Fou || model.kind == Kind::Volterra)
        throw std::invalid_argument("simulate_exact: no closed-form covariance for this kind");
    ExactSampler sampler(model, n_steps);
    return sampler.sample(n_paths, seed, workers);
}

/// Wiener path from per-path increments on a uniform grid.
inline SamplePath simulate_wiener_path(double T, std::size_t n_steps, std::uint64_t seed,
                                       std::uint64_t path_index) {
    SamplePath p;
    p.times = uniform_grid(T, n_steps);
    p.seed_id = static_cast<std::int64_t>(path_index);
    p.values.assign(n_steps + 1, 0.0);
    PathRng rng(seed, path_index);
    const double sd = std::sqrt(T / static_cast<double>(n_steps));
    for (std::size_t k = 1; k <= n_steps; ++k) p.values[k] = p.values[k - 1] + sd * rng.gaussian();
    return p;
}

/// fBm built from a simulated Wiener path through the K^H kernel; returns
/// both so downstream consumers share one filtration.
inline std::pair<SamplePath, SamplePath> simulate_fbm_volterra(double H, std::size_t n_steps,
                                                               std::uint64_t seed, double T = 1.0,
                                                               std::uint64_t path_index = 0) {
    frac::check_hurst_transform(H);
    SamplePath w = simulate_wiener_path(T, n_steps, seed, path_index);
    SamplePath fbm = frac::KhOperator(w.times, H).apply(w);
    return {fbm, w};
}

/// Generic Volterra transform G(t) = int_0^t K(t,s) dW(s), midpoint in s.
inline std::vector<SamplePath> simulate_volterra(const GaussianModel& model, std::size_t n_steps,
                                                 std::size_t n_paths, std::uint64_t seed,
                                                 unsigned workers = 1) {
    if (model.kind != Kind::Volterra || !model.volterra_kernel)
        throw std::invalid_argument("simulate_volterra: model must carry a kernel");
    const std::vector<double> times = uniform_grid(model.T, n_steps);
    // weights depend only on the grid
    std::vector<double> weights(n_steps * n_steps, 0.0);
    for (std::size_t k = 1; k <= n_steps; ++k)
        for (std::size_t j = 0; j < k; ++j) {
            const double s = 0.5 * (times[j] + times[j + 1]);
            weights[(k - 1) * n_steps + j] = model.volterra_kernel(times[k], s);
        }
    std::vector<SamplePath> out(n_paths);
    const double sd = std::sqrt(model.T / static_cast<double>(n_steps));
    parallel_for(n_paths, workers, [&](std::size_t p) {
        PathRng rng(seed, p);
        std::vector<double> dw(n_steps);
        for (std::size_t j = 0; j < n_steps; ++j) dw[j] = sd * rng.gaussian();
        SamplePath path;
        path.times = times;
        path.seed_id = static_cast<std::int64_t>(p);
        path.values.assign(n_steps + 1, 0.0);
        for (std::size_t k = 1; k <= n_steps; ++k) {
            double acc = 0.0;
            const double* row = &weights[(k - 1) * n_steps];
            for (std::size_t j = 0; j < k; ++j) acc += row[j] * dw[j];
            path.values[k] = acc;
        }
        out[p] = path;
    });
    return out;
}

/// Euler scheme for dY = (b - aY)dt + sigma dB^H on an exact fBm driver.
inline std::vector<SamplePath> simulate_fou(double a, double b, double sigma, double H, double y0,
                                            std::size_t n_steps, std::size_t n_paths,
                                            std::uint64_t seed, double T = 1.0,
                                            unsigned workers = 1) {
    GaussianModel driver = GaussianModel::fbm(H, T);
    ExactSampler sampler(driver, n_steps);
    const double dt = T / static_cast<double>(n_steps);
    std::vector<SamplePath> out(n_paths);
    parallel_for(n_paths, workers, [&](std::size_t p) {
        SamplePath fbm = sampler.sample_one(seed, p);
        SamplePath y;
        y.times = fbm.times;
        y.seed_id = fbm.seed_id;
        y.values.assign(fbm.size(), 0.0);
        y.values[0] = y0;
        for (std::size_t k = 1; k < fbm.size(); ++k) {
            const double prev = y.values[k - 1];
            y.values[k] = prev + (b - a * prev) * dt + sigma * (fbm.values[k] - fbm.values[k - 1]);
        }
        out[p] = y;
    });
    return out;
}

struct ConditionReport {
    double H1_est = 0.0;
    double H2_est = 0.0;
    bool condA_pass = false;
    bool condB_pass = false;
    double min_increment_corr = 0.0;
};

/// Numerical check of conditions (A)/(B) from a bundle of paths on a
/// common grid: log-log regression of E|G(t)-G(s)|^2 against the lag for
/// the scaling exponents, and adjacent disjoint-block increment
/// correlations at three dyadic scales for (B).
inline ConditionReport check_conditions(const std::vector<SamplePath>& paths) {
    if (paths.size() < 100) throw std::invalid_argument("check_conditions: need >= 100 paths");
    const std::size_t n = paths.front().size() - 1;
    for (const auto& p : paths)
        if (p.size() != n + 1) throw std::invalid_argument("check_conditions: grids differ");

    ConditionReport rep;
    const double P = static_cast<double>(paths.size());

    // mean squared increment at dyadic lags
    std::vector<double> log_lag, log_msq;
    for (std::size_t lag = 1; lag <= n / 4; lag *= 2) {
        double acc = 0.0;
        std::size_t cnt = 0;
        for (const auto& p : paths)
            for (std::size_t i = 0; i + lag <= n; i += lag) {
                const double d = p.values[i + lag] - p.values[i];
                acc += d * d;
                ++cnt;
            }
        log_lag.push_back(std::log(paths.front().times[lag] - paths.front().times[0]));
        log_msq.push_back(std::log(acc / static_cast<double>(cnt)));
    }
    auto slope = [](const std::vector<double>& x, const std::vector<double>& y, std::size_t lo,
                    std::size_t hi) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double m = static_cast<double>(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) {
            sx += x[i]; sy += y[i]; sxx += x[i] * x[i]; sxy += x[i] * y[i];
        }
        return (m * sxy - sx * sy) / (m * sxx - sx * sx);
    };
    const std::size_t m = log_lag.size();
    double h_lo = 0.5 * slope(log_lag, log_msq, 0, (m + 1) / 2 + (m > 2 ? 1 : 0));
    double h_hi = 0.5 * slope(log_lag, log_msq, m / 2 > 0 ? m / 2 - (m > 2 ? 1 : 0) : 0, m);
    rep.H1_est = std::max(h_lo, h_hi);
    rep.H2_est = std::min(h_lo, h_hi);
    rep.condA_pass = rep.H2_est > 0.0 && rep.H1_est <= 1.0 + 0.05;

    // condition (B): adjacent disjoint block increments at 3 scales
    double min_corr = 1.0;
    for (std::size_t block = n / 16; block <= n / 4 && block >= 1; block *= 2) {
        const std::size_t n_blocks = n / block;
        for (std::size_t b = 0; b + 1 < n_blocks; ++b) {
            double s1 = 0, s2 = 0, s11 = 0, s22 = 0, s12 = 0;
            for (const auto& p : paths) {
                const double d1 = p.values[(b + 1) * block] - p.values[b * block];
                const double d2 = p.values[(b + 2) * block] - p.values[(b + 1) * block];
                s1 += d1; s2 += d2; s11 += d1 * d1; s22 += d2 * d2; s12 += d1 * d2;
            }
            const double c1 = s11 / P - (s1 / P) * (s1 / P);
            const double c2 = s22 / P - (s2 / P) * (s2 / P);
            const double c12 = s12 / P - (s1 / P) * (s2 / P);
            if (c1 > 0.0 && c2 > 0.0) min_corr = std::min(min_corr, c12 / std::sqrt(c1 * c2));
        }
    }
    rep.min_increment_corr = min_corr;
    rep.condB_pass = min_corr >= -3.0 / std::sqrt(P);
    return rep;
}

}  // namespace wienerlab::gauss
