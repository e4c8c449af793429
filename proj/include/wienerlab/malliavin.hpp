#pragma once

// Explicit martingale-representation integrands for smooth terminal
// functionals of a single Wiener path, F = f(W(T)): the integrand is
// t -> E(f'(W(T)) | F_t), a function of (t, W(t)) computed by
// Gauss-Hermite quadrature over the conditional Gaussian law.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "wienerlab/common.hpp"

namespace wienerlab::malliavin {

/// Gauss-Hermite rule for int f(x) e^{-x^2} dx = sum w_i f(x_i),
/// built from the Jacobi matrix of the Hermite recurrence.
struct GaussHermite {
    std::vector<double> nodes, weights;

    explicit GaussHermite(int order = 64) {
        if (order < 1) throw std::invalid_argument("GaussHermite: order must be positive");
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(order, order);
        for (int k = 1; k < order; ++k) {
            const double off = std::sqrt(0.5 * k);
            J(k, k - 1) = off;
            J(k - 1, k) = off;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
        const double sqrt_pi = 1.7724538509055160273;
        nodes.resize(order);
        weights.resize(order);
        for (int k = 0; k < order; ++k) {
            nodes[k] = es.eigenvalues()(k);
            const double v0 = es.eigenvectors()(0, k);
            weights[k] = sqrt_pi * v0 * v0;
        }
    }

    /// E g(Z) for Z ~ N(mean, var).
    double gaussian_mean(const std::function<double(double)>& g, double mean, double var) const {
        if (!(var > 0.0)) return g(mean);
        const double s = std::sqrt(2.0 * var);
        const double inv_sqrt_pi = 0.56418958354775628695;
        double acc = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const double v = g(mean + s * nodes[i]);
            if (!std::isfinite(v))
                throw std::runtime_error("quadrature-overflow: integrand blew up at a node");
            acc += weights[i] * v;
        }
        const double r = inv_sqrt_pi * acc;
        if (!std::isfinite(r)) throw std::runtime_error("quadrature-overflow: non-finite mean");
        return r;
    }
};

enum class FunctionalKind { Linear, Square, SmoothOfWT };

/// Terminal payoff F depending on W(T) only. For SmoothOfWT the caller
/// supplies f and f'; f' must stay finite wherever the quadrature looks.
struct TerminalFunctional {
    FunctionalKind kind;
    double T;
    std::function<double(double)> f;       // SmoothOfWT only
    std::function<double(double)> fprime;  // SmoothOfWT only

    static TerminalFunctional linear(double T) { return {FunctionalKind::Linear, T, {}, {}}; }
    static TerminalFunctional square(double T) { return {FunctionalKind::Square, T, {}, {}}; }
    static TerminalFunctional smooth_of_wt(double T, std::function<double(double)> f,
                                           std::function<double(double)> fprime) {
        if (!f || !fprime)
            throw std::invalid_argument("smooth_of_wt: both f and f' are required");
        return {FunctionalKind::SmoothOfWT, T, std::move(f), std::move(fprime)};
    }

    double value(double w_T) const {
        switch (kind) {
            case FunctionalKind::Linear: return w_T;
            case FunctionalKind::Square: return w_T * w_T;
            case FunctionalKind::SmoothOfWT: return f(w_T);
        }
        throw std::logic_error("unreachable");
    }
};

using IntegrandPath = GridFunction;

/// Representation integrand t -> E(D_t F | F_t) = E(f'(W(T)) | W(t)) along
/// the given Wiener path. Adapted by construction: the value at t_k uses
/// only W(t_k).
inline IntegrandPath clark_ocone_integrand(const TerminalFunctional& F, const SamplePath& w,
                                           const GaussHermite& gh = GaussHermite(64)) {
    w.validate();
    if (std::abs(w.times.back() - F.T) > 1e-12 * std::max(1.0, F.T))
        throw std::invalid_argument("clark_ocone_integrand: path horizon differs from F.T");
    IntegrandPath out;
    out.times = w.times;
    out.seed_id = w.seed_id;
    out.values.resize(w.size());
    switch (F.kind) {
        case FunctionalKind::Linear:
            std::fill(out.values.begin(), out.values.end(), 1.0);
            break;
        case FunctionalKind::Square:
            for (std::size_t i = 0; i < w.size(); ++i) out.values[i] = 2.0 * w.values[i];
            break;
        case FunctionalKind::SmoothOfWT:
            for (std::size_t i = 0; i < w.size(); ++i)
                out.values[i] = gh.gaussian_mean(F.fprime, w.values[i], F.T - w.times[i]);
            break;
    }
    return out;
}

/// Unconditional mean E F = E f(W(T)), via the same quadrature at t = 0.
inline double functional_mean(const TerminalFunctional& F, const GaussHermite& gh = GaussHermite(64)) {
    switch (F.kind) {
        case FunctionalKind::Linear: return 0.0;
        case FunctionalKind::Square: return F.T;
        case FunctionalKind::SmoothOfWT: return gh.gaussian_mean(F.f, 0.0, F.T);
    }
    throw std::logic_error("unreachable");
}

/// | F(w) - E F - sum_k integrand(t_k) (W(t_{k+1}) - W(t_k)) |, the
/// discrete martingale-representation residual with left-point sums.
inline double verify_representation(const TerminalFunctional& F, const SamplePath& w,
                                    const IntegrandPath& integrand,
                                    const GaussHermite& gh = GaussHermite(64)) {
    if (integrand.size() != w.size())
        throw std::invalid_argument("verify_representation: integrand grid mismatch");
    std::vector<double> terms(w.size() - 1);
    for (std::size_t k = 0; k + 1 < w.size(); ++k)
        terms[k] = integrand.values[k] * (w.values[k + 1] - w.values[k]);
    const double ito = pairwise_sum(terms.data(), terms.size());
    return std::abs(F.value(w.values.back()) - functional_mean(F, gh) - ito);
}

}  // namespace wienerlab::malliavin
