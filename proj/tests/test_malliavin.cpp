#include <doctest.h>

#include "oracles.hpp"
#include "wienerlab/gauss_sim.hpp"
#include "wienerlab/malliavin.hpp"

using namespace wienerlab;
using malliavin::TerminalFunctional;

TEST_CASE("quadrature rule reproduces gaussian moments") {
    malliavin::GaussHermite gh(64);
    CHECK(gh.gaussian_mean([](double) { return 1.0; }, 0.3, 2.0) ==
          doctest::Approx(1.0).epsilon(1e-13));
    CHECK(gh.gaussian_mean([](double x) { return x; }, 0.3, 2.0) ==
          doctest::Approx(0.3).epsilon(1e-12));
    CHECK(gh.gaussian_mean([](double x) { return x * x; }, 0.3, 2.0) ==
          doctest::Approx(2.09).epsilon(1e-12));
    CHECK(gh.gaussian_mean([](double x) { return std::exp(x); }, 0.1, 0.5) ==
          doctest::Approx(oracles::lognormal_moment(1.0, 0.1, 0.5)).epsilon(1e-12));
    // zero variance degenerates to a point evaluation
    CHECK(gh.gaussian_mean([](double x) { return std::sin(x); }, 0.7, 0.0) == std::sin(0.7));
}

TEST_CASE("quadrature reports unusable integrands") {
    malliavin::GaussHermite gh(64);
    CHECK_THROWS_AS(gh.gaussian_mean([](double x) { return std::exp(x * x * x * x); }, 0.0, 4.0),
                    std::runtime_error);
}

TEST_CASE("integrand closed forms for the polynomial functionals") {
    const auto w = gauss::simulate_wiener_path(1.0, 64, 1, 0);
    const auto lin = malliavin::clark_ocone_integrand(TerminalFunctional::linear(1.0), w);
    for (double v : lin.values) CHECK(v == 1.0);
    const auto sq = malliavin::clark_ocone_integrand(TerminalFunctional::square(1.0), w);
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(sq.values[i] == 2.0 * w.values[i]);
}

TEST_CASE("exponential functional integrand matches the lognormal closed form") {
    const auto w = gauss::simulate_wiener_path(1.0, 128, 2, 0);
    const auto F = TerminalFunctional::smooth_of_wt(
        1.0, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
    const auto integ = malliavin::clark_ocone_integrand(F, w);
    for (std::size_t i = 0; i < w.size(); i += 16) {
        const double want = std::exp(w.values[i] + 0.5 * (1.0 - w.times[i]));
        CHECK(std::abs(integ.values[i] / want - 1.0) < 1e-6);
    }
    CHECK(malliavin::functional_mean(F) == doctest::Approx(std::exp(0.5)).epsilon(1e-10));
}

TEST_CASE("representation residual for the linear functional is roundoff") {
    for (std::uint64_t p = 0; p < 20; ++p) {
        const auto w = gauss::simulate_wiener_path(1.0, 256, 7, p);
        const auto F = TerminalFunctional::linear(1.0);
        const auto integ = malliavin::clark_ocone_integrand(F, w);
        const double res = malliavin::verify_representation(F, w, integ);
        CHECK(res <= 1e-11 * (1.0 + std::abs(w.values.back())));
    }
}

TEST_CASE("representation residual shrinks with the grid") {
    const auto F = TerminalFunctional::square(1.0);
    std::vector<double> med;
    for (std::size_t n : {64, 256, 1024}) {
        std::vector<double> res;
        for (std::uint64_t p = 0; p < 60; ++p) {
            const auto w = gauss::simulate_wiener_path(1.0, n, 17, p);
            res.push_back(malliavin::verify_representation(
                F, w, malliavin::clark_ocone_integrand(F, w)));
        }
        med.push_back(median(res));
    }
    CHECK(med[1] < med[0]);
    CHECK(med[2] < med[1]);
    // F = W(T)^2 has representation residual = quadratic-variation error
    CHECK(med[2] < 0.1 * std::sqrt(2.0));
}

TEST_CASE("integrand is adapted: the future does not leak") {
    const auto F = TerminalFunctional::smooth_of_wt(
        1.0, [](double x) { return std::tanh(x); },
        [](double x) { const double c = std::cosh(x); return 1.0 / (c * c); });
    auto w = gauss::simulate_wiener_path(1.0, 64, 5, 0);
    const auto base = malliavin::clark_ocone_integrand(F, w);
    // surgery strictly after index 40 must leave values at <= 40 unchanged
    for (std::size_t i = 41; i < w.size(); ++i) w.values[i] += 0.37 * static_cast<double>(i - 40);
    const auto cut = malliavin::clark_ocone_integrand(F, w);
    for (std::size_t i = 0; i <= 40; ++i) CHECK(cut.values[i] == base.values[i]);
}

TEST_CASE("integrand-weighted path mean is constant in t") {
    // E[ integrand(t) ] = E f'(W(T)) for every t; check at t=0 vs t=T/2
    const auto F = TerminalFunctional::smooth_of_wt(
        1.0, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
    const std::size_t n = 64, P = 10000;
    std::vector<double> mid(P), end(P);
    for (std::size_t p = 0; p < P; ++p) {
        const auto w = gauss::simulate_wiener_path(1.0, n, 23, p);
        const auto integ = malliavin::clark_ocone_integrand(F, w);
        mid[p] = integ.values[n / 2];
        end[p] = integ.values[n];
    }
    const auto m1 = mean_se(mid), m2 = mean_se(end);
    const double want = std::exp(0.5);  // E f'(W(T)) = E e^{W(1)}
    CHECK(std::abs(m1.mean - want) < 5.0 * m1.se);
    CHECK(std::abs(m2.mean - want) < 5.0 * m2.se);
}

TEST_CASE("horizon mismatch and grid mismatch are rejected") {
    const auto w = gauss::simulate_wiener_path(1.0, 32, 1, 0);
    CHECK_THROWS_AS(malliavin::clark_ocone_integrand(TerminalFunctional::linear(2.0), w),
                    std::invalid_argument);
    CHECK_THROWS_AS(TerminalFunctional::smooth_of_wt(1.0, nullptr, nullptr),
                    std::invalid_argument);
    auto integ = malliavin::clark_ocone_integrand(TerminalFunctional::linear(1.0), w);
    integ.values.pop_back();
    integ.times.pop_back();
    CHECK_THROWS_AS(malliavin::verify_representation(TerminalFunctional::linear(1.0), w, integ),
                    std::invalid_argument);
}
