#include <doctest.h>

#include "oracles.hpp"
#include "wienerlab/gauss_sim.hpp"
#include "wienerlab/utility.hpp"

using namespace wienerlab;
using utility::UtilitySpec;

namespace {

std::vector<pricing::KernelSample> kernel_bundle(const pricing::ThetaSpec& theta, std::size_t n,
                                                 std::size_t P, std::uint64_t seed) {
    std::vector<SamplePath> paths(P);
    for (std::size_t p = 0; p < P; ++p) paths[p] = gauss::simulate_wiener_path(1.0, n, seed, p);
    return pricing::sample_kernel(theta, paths, 4);
}

}  // namespace

TEST_CASE("inverse marginal utilities") {
    const auto ue = UtilitySpec::exponential(2.0);
    // u'(x) = beta e^{-beta x}; at x = 0 this is beta
    CHECK(utility::inverse_marginal(ue, 2.0) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(utility::inverse_marginal(ue, 2.0 * std::exp(-2.0)) == doctest::Approx(1.0));
    CHECK_THROWS_AS(utility::inverse_marginal(ue, 0.0), std::invalid_argument);

    const auto up = UtilitySpec::power(0.5);
    // u'(x) = x^{-1/2}; inverse is y^{-2}
    CHECK(utility::inverse_marginal(up, 4.0) == doctest::Approx(0.0625));
    CHECK(std::isinf(utility::inverse_marginal(up, 0.0)));

    const auto ul = UtilitySpec::log_utility();
    CHECK(utility::inverse_marginal(ul, 2.0) == doctest::Approx(0.5));
    CHECK(std::isinf(utility::inverse_marginal(ul, -1.0)));

    // all three are strictly decreasing
    for (const auto& u : {ue, up, ul}) {
        double prev = utility::inverse_marginal(u, 0.5);
        for (double y : {1.0, 2.0, 4.0}) {
            const double v = utility::inverse_marginal(u, y);
            CHECK(v < prev);
            prev = v;
        }
    }
}

TEST_CASE("degenerate market: theta = 0 makes the profile constant") {
    const auto kernel = kernel_bundle(pricing::ThetaSpec::constant(0.0), 32, 200, 3);
    const double w = 1.7;

    const auto pe = utility::optimal_profile_exponential(2.0, w, kernel);
    for (double x : pe.x_star) CHECK(x == doctest::Approx(w).epsilon(1e-14));
    CHECK(pe.closed_form == doctest::Approx(1.0 - std::exp(-2.0 * w)).epsilon(1e-14));
    CHECK(pe.budget_residual < 1e-12);

    const auto pp = utility::optimal_profile_power(0.4, w, kernel);
    for (double x : pp.x_star) CHECK(x == doctest::Approx(w).epsilon(1e-14));
    CHECK(pp.closed_form == doctest::Approx(std::pow(w, 0.4) / 0.4).epsilon(1e-14));

    const auto pl = utility::optimal_profile_log(w, kernel);
    for (double x : pl.x_star) CHECK(x == doctest::Approx(w).epsilon(1e-14));
    CHECK(pl.closed_form == doctest::Approx(std::log(w)).epsilon(1e-14));
}

TEST_CASE("constant market price of risk: closed forms within monte carlo error") {
    const double th = 0.3, w = 1.0;
    const auto kernel = kernel_bundle(pricing::ThetaSpec::constant(th), 256, 10000, 99);
    const double half_sq = 0.5 * th * th;  // both entropies for constant theta

    SUBCASE("exponential") {
        const double beta = 2.0;
        const auto p = utility::optimal_profile_exponential(beta, w, kernel);
        const double truth = 1.0 - std::exp(-beta * w - half_sq);
        CHECK(std::abs(p.expected_utility.mean - truth) < 5.0 * p.expected_utility.se);
        CHECK(p.budget_residual < 5.0 * p.budget_se);
        // on-sample identity: E_n u(X*) = 1 - e^{-beta w - H} E_n phi
        std::vector<double> phis(kernel.size());
        for (std::size_t i = 0; i < kernel.size(); ++i) phis[i] = kernel[i].phi_T;
        const double ident = 1.0 - std::exp(-beta * w - p.entropy) * mean_se(phis).mean;
        CHECK(p.expected_utility.mean == doctest::Approx(ident).epsilon(1e-10));
    }
    SUBCASE("power") {
        const double g = 0.5;
        const auto p = utility::optimal_profile_power(g, w, kernel);
        // d = E phi^{-gamma/(1-gamma)} = exp{ (p^2+p)/2 th^2 }, p = -g/(1-g)
        const double pe = -g / (1.0 - g);
        const double d_true = oracles::lognormal_moment(pe, -half_sq, th * th);
        CHECK(p.entropy == doctest::Approx(d_true).epsilon(0.05));
        const double truth = std::pow(w, g) * std::pow(d_true, 1.0 - g) / g;
        CHECK(std::abs(p.expected_utility.mean - truth) < 5.0 * p.expected_utility.se);
        CHECK(p.budget_residual < 5.0 * p.budget_se);
    }
    SUBCASE("log") {
        const auto p = utility::optimal_profile_log(w, kernel);
        CHECK(std::abs(p.expected_utility.mean - half_sq) < 5.0 * p.expected_utility.se);
        // budget for the log profile holds identically on the sample
        CHECK(p.budget_residual < 1e-12 * kernel.size());
    }
}

TEST_CASE("expected utility increases with initial wealth") {
    const auto kernel = kernel_bundle(pricing::ThetaSpec::constant(0.3), 128, 2000, 5);
    double prev_e = -1e300, prev_p = -1e300, prev_l = -1e300;
    for (double w : {0.5, 1.0, 2.0, 4.0}) {
        const double e = utility::optimal_profile_exponential(1.5, w, kernel).expected_utility.mean;
        const double p = utility::optimal_profile_power(0.5, w, kernel).expected_utility.mean;
        const double l = utility::optimal_profile_log(w, kernel).expected_utility.mean;
        CHECK(e > prev_e);
        CHECK(p > prev_p);
        CHECK(l > prev_l);
        prev_e = e; prev_p = p; prev_l = l;
    }
}

TEST_CASE("budget multiplier matches the closed-form normalizations") {
    const auto kernel = kernel_bundle(pricing::ThetaSpec::constant(0.3), 128, 2000, 5);
    const double w = 1.3;

    // log: I(c phi) = 1/(c phi), budget w = E(1)/c -> c = 1/w exactly
    const double cl = utility::solve_budget_multiplier(UtilitySpec::log_utility(), w, kernel);
    CHECK(cl == doctest::Approx(1.0 / w).epsilon(1e-6));

    // power: the bisection lands on the same multiplier the profile reports
    const auto pp = utility::optimal_profile_power(0.5, w, kernel);
    const double cp = utility::solve_budget_multiplier(UtilitySpec::power(0.5), w, kernel);
    CHECK(cp == doctest::Approx(pp.c_star).epsilon(1e-5));

    // exponential under theta = 0: c = beta e^{-beta w}
    const auto k0 = kernel_bundle(pricing::ThetaSpec::constant(0.0), 32, 100, 1);
    const double ce = utility::solve_budget_multiplier(UtilitySpec::exponential(2.0), 0.7, k0);
    CHECK(ce == doctest::Approx(2.0 * std::exp(-1.4)).epsilon(1e-6));

    // multiplier is decreasing in wealth
    double prev = 1e300;
    for (double wealth : {0.5, 1.0, 2.0}) {
        const double c = utility::solve_budget_multiplier(UtilitySpec::power(0.5), wealth, kernel);
        CHECK(c < prev);
        prev = c;
    }
}

TEST_CASE("no probe beats the optimal profile beyond noise") {
    const auto kernel = kernel_bundle(pricing::ThetaSpec::constant(0.3), 128, 4000, 21);
    const double w = 1.0;
    struct Case { UtilitySpec u; std::vector<double> x; MeanSE eu; };
    const auto pe = utility::optimal_profile_exponential(1.5, w, kernel);
    const auto pp = utility::optimal_profile_power(0.5, w, kernel);
    const auto pl = utility::optimal_profile_log(w, kernel);
    const Case cases[] = {{UtilitySpec::exponential(1.5), pe.x_star, pe.expected_utility},
                          {UtilitySpec::power(0.5), pp.x_star, pp.expected_utility},
                          {UtilitySpec::log_utility(), pl.x_star, pl.expected_utility}};
    for (const auto& c : cases) {
        const auto rep = utility::optimality_probe(c.u, w, kernel, c.x, 50, 7);
        CHECK(rep.worst_gap >= -5.0 * c.eu.se);
        CHECK(rep.discarded < rep.total);
    }
}

TEST_CASE("argument validation") {
    CHECK_THROWS_AS(UtilitySpec::exponential(0.0), std::invalid_argument);
    CHECK_THROWS_AS(UtilitySpec::power(1.0), std::invalid_argument);
    const auto kernel = kernel_bundle(pricing::ThetaSpec::constant(0.0), 16, 8, 1);
    CHECK_THROWS_AS(utility::optimal_profile_power(0.5, -1.0, kernel), std::invalid_argument);
    CHECK_THROWS_AS(utility::optimal_profile_log(0.0, kernel), std::invalid_argument);
    CHECK_THROWS_AS(utility::optimal_profile_exponential(1.0, 1.0, {}), std::invalid_argument);
}
