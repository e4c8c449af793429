#pragma once

// Pricing kernels phi(T) = exp{ int theta dW - 1/2 int theta^2 ds } for
// deterministic theta families (constant, power law, the power-plus-drift
// kernel with Gamma-function constants C1/C2) and tabulated adapted theta,
// plus relative entropies between the base and the changed measure.
//
// For the closed-form theta families the Ito sum uses the exact cell
// average of theta on each step and the quadratic term is integrated in
// closed form; a left-point rule would evaluate the power law at s = 0
// where it is infinite. Tabulated theta falls back to left-point sums and
// trapezoid, which keeps the discrete integral adapted.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "wienerlab/common.hpp"

namespace wienerlab::pricing {

inline std::pair<double, double> c1_c2_constants(double H) {
    if (!(H >= 0.5 && H < 1.0))
        throw std::invalid_argument("c1_c2_constants: H must lie in [1/2, 1)");
    const double g1 = std::tgamma(1.5 - H);
    const double g2 = std::tgamma(2.0 - 2.0 * H);
    const double g3 = std::tgamma(H + 0.5);
    const double c1 = std::sqrt(g1 / (2.0 * H * g2 * g3)) / (1.5 - H);
    return {c1, c1 * (1.5 - H)};
}

enum class ThetaKind { Constant, PowerLaw, Example42, Custom };

/// Deterministic (or tabulated adapted) market-price-of-risk process on
/// [0, T]. power_law exponents must exceed -1/2 so that theta^{4+delta}
/// stays integrable; exponents at or below -1/4 are accepted but flagged.
struct ThetaSpec {
    ThetaKind kind;
    double T = 1.0;
    double c0 = 0.0;             // Constant
    double coeff = 0.0;          // PowerLaw
    double exponent = 0.0;       // PowerLaw
    double mu = 0.0, r = 0.0;    // Example42
    double sigma = 0.0, H = 0.5; // Example42
    GridFunction table;          // Custom
    bool weak_integrability = false;  // exponent in (-1/2, -1/4]

    static ThetaSpec constant(double v, double T = 1.0) {
        ThetaSpec s;
        s.kind = ThetaKind::Constant;
        s.c0 = v;
        s.T = T;
        return s;
    }
    static ThetaSpec power_law(double coeff, double exponent, double T = 1.0) {
        if (!(exponent > -0.5) || exponent > 0.0)
            throw std::invalid_argument("power_law: exponent must lie in (-1/2, 0]");
        ThetaSpec s;
        s.kind = ThetaKind::PowerLaw;
        s.coeff = coeff;
        s.exponent = exponent;
        s.T = T;
        s.weak_integrability = exponent <= -0.25;
        return s;
    }
    static ThetaSpec example42(double mu, double r, double sigma, double H, double T = 1.0) {
        if (!(sigma > 0.0)) throw std::invalid_argument("example42: sigma must be positive");
        if (!(H >= 0.5 && H < 1.0)) throw std::invalid_argument("example42: H must lie in [1/2, 1)");
        ThetaSpec s;
        s.kind = ThetaKind::Example42;
        s.mu = mu;
        s.r = r;
        s.sigma = sigma;
        s.H = H;
        s.T = T;
        s.weak_integrability = H >= 0.75 && mu != r;
        return s;
    }
    static ThetaSpec custom(GridFunction table) {
        table.validate();
        if (table.size() < 2) throw std::invalid_argument("custom theta: need at least 2 points");
        ThetaSpec s;
        s.kind = ThetaKind::Custom;
        s.T = table.times.back();
        s.table = std::move(table);
        return s;
    }

    bool deterministic_closed_form() const { return kind != ThetaKind::Custom; }

    /// Power-plus-constant decomposition theta(s) = A s^q + B of the
    /// closed-form kinds.
    void decompose(double& A, double& q, double& B) const {
        switch (kind) {
            case ThetaKind::Constant: A = 0.0; q = 0.0; B = c0; return;
            case ThetaKind::PowerLaw: A = coeff; q = exponent; B = 0.0; return;
            case ThetaKind::Example42: {
                const double C2 = c1_c2_constants(H).second;
                A = (mu - r) * C2 / sigma;
                q = 0.5 - H;
                B = 0.5 * sigma;
                return;
            }
            case ThetaKind::Custom: break;
        }
        throw std::logic_error("decompose: custom theta has no closed form");
    }

    double value(double s) const {
        if (kind == ThetaKind::Custom) {
            const auto& t = table.times;
            if (s <= t.front()) return table.values.front();
            if (s >= t.back()) return table.values.back();
            std::size_t j = 1;
            while (t[j] < s) ++j;
            const double w = (s - t[j - 1]) / (t[j] - t[j - 1]);
            return table.values[j - 1] + w * (table.values[j] - table.values[j - 1]);
        }
        double A, q, B;
        decompose(A, q, B);
        if (A == 0.0) return B;
        return A * std::pow(s, q) + B;
    }

    /// int_0^t theta(s) ds, exact for the closed-form kinds.
    double integral(double t) const {
        double A, q, B;
        decompose(A, q, B);
        return A * std::pow(t, q + 1.0) / (q + 1.0) + B * t;
    }

    /// int_0^T theta^2(s) ds.
    double square_integral() const {
        if (kind == ThetaKind::Custom) {
            double acc = 0.0;
            for (std::size_t j = 0; j + 1 < table.size(); ++j) {
                const double v0 = table.values[j], v1 = table.values[j + 1];
                acc += 0.5 * (v0 * v0 + v1 * v1) * (table.times[j + 1] - table.times[j]);
            }
            return acc;
        }
        double A, q, B;
        decompose(A, q, B);
        if (!(2.0 * q > -1.0)) throw std::runtime_error("nonintegrable-theta: theta^2 diverges at 0");
        return A * A * std::pow(T, 2.0 * q + 1.0) / (2.0 * q + 1.0) +
               2.0 * A * B * std::pow(T, q + 1.0) / (q + 1.0) + B * B * T;
    }
};

struct KernelSample {
    double phi_T;
    double log_phi_T;
    double ito_integral;  // int theta dW
    double quad_term;     // 1/2 int theta^2 ds
};

/// phi(T) per path. Deterministic given (theta, paths); parallel over paths.
inline std::vector<KernelSample> sample_kernel(const ThetaSpec& theta,
                                               const std::vector<SamplePath>& paths,
                                               unsigned workers = 1) {
    if (paths.empty()) throw std::invalid_argument("sample_kernel: no paths");
    const double quad = 0.5 * theta.square_integral();
    std::vector<KernelSample> out(paths.size());
    parallel_for(paths.size(), workers, [&](std::size_t p) {
        const SamplePath& w = paths[p];
        if (std::abs(w.times.back() - theta.T) > 1e-9 * std::max(1.0, theta.T))
            throw std::invalid_argument("sample_kernel: path horizon differs from theta.T");
        std::vector<double> terms(w.size() - 1);
        if (theta.deterministic_closed_form()) {
            for (std::size_t k = 0; k + 1 < w.size(); ++k) {
                const double dt = w.times[k + 1] - w.times[k];
                const double avg = (theta.integral(w.times[k + 1]) - theta.integral(w.times[k])) / dt;
                terms[k] = avg * (w.values[k + 1] - w.values[k]);
            }
        } else {
            for (std::size_t k = 0; k + 1 < w.size(); ++k)
                terms[k] = theta.value(w.times[k]) * (w.values[k + 1] - w.values[k]);
        }
        KernelSample s;
        s.ito_integral = pairwise_sum(terms.data(), terms.size());
        s.quad_term = quad;
        s.log_phi_T = s.ito_integral - s.quad_term;
        s.phi_T = std::exp(s.log_phi_T);
        if (!(s.phi_T > 0.0) || !std::isfinite(s.phi_T))
            throw std::runtime_error("sample_kernel: kernel overflowed or degenerated");
        out[p] = s;
    });
    return out;
}

enum class EntropyDirection { StarGivenBase, BaseGivenStar };

struct EntropyEstimate {
    double value;
    double se;
    bool diverged;  // batch means failed the stabilization check
};

/// Relative entropy between the changed measure P* (density phi) and the
/// base measure P, estimated from base-measure samples:
///   H(P*|P) = E(phi log phi),   H(P|P*) = E(-log phi).
/// Stability check: 10 batch means whose range must stay within 20% of
/// the pooled mean (scale-relative; skipped when the mean is ~0).
inline EntropyEstimate relative_entropy(const std::vector<KernelSample>& samples,
                                        EntropyDirection dir) {
    if (samples.empty()) throw std::invalid_argument("relative_entropy: no samples");
    std::vector<double> x(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        x[i] = dir == EntropyDirection::StarGivenBase
                   ? samples[i].phi_T * samples[i].log_phi_T
                   : -samples[i].log_phi_T;
    const MeanSE m = mean_se(x);
    EntropyEstimate e{m.mean, m.se, false};
    const std::size_t nb = 10;
    if (x.size() >= 2 * nb) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t b = 0; b < nb; ++b) {
            const std::size_t i0 = b * x.size() / nb, i1 = (b + 1) * x.size() / nb;
            const double bm = pairwise_sum(x.data() + i0, i1 - i0) / static_cast<double>(i1 - i0);
            lo = std::min(lo, bm);
            hi = std::max(hi, bm);
        }
        if (std::abs(m.mean) > 1e-12 && (hi - lo) > 0.2 * std::abs(m.mean)) e.diverged = true;
    }
    return e;
}

/// Lower bound for the prelimit variance blow-up:
///   eps^{1-2H} * t/(2-2H) * (eps^{2H-2} - (t+eps)^{2H-2}).
inline double variance_blowup_bound(double H, double t, double eps) {
    if (!(H > 0.5 && H < 1.0))
        throw std::invalid_argument("variance_blowup_bound: H must lie in (1/2, 1)");
    if (!(eps > 0.0)) throw std::invalid_argument("variance_blowup_bound: eps must be positive");
    if (!(t >= 0.0)) throw std::invalid_argument("variance_blowup_bound: t must be nonnegative");
    return std::pow(eps, 1.0 - 2.0 * H) * t / (2.0 - 2.0 * H) *
           (std::pow(eps, 2.0 * H - 2.0) - std::pow(t + eps, 2.0 * H - 2.0));
}

}  // namespace wienerlab::pricing
