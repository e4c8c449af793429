#include <doctest.h>

#include "oracles.hpp"
#include "wienerlab/frac_calc.hpp"
#include "wienerlab/gauss_sim.hpp"

using namespace wienerlab;

namespace {

GridFunction tabulate(double T, std::size_t n, const std::function<double(double)>& f) {
    GridFunction g;
    g.times = uniform_grid(T, n);
    g.values.resize(g.times.size());
    for (std::size_t i = 0; i < g.times.size(); ++i) g.values[i] = f(g.times[i]);
    return g;
}

}  // namespace

TEST_CASE("left derivative of a constant is exact") {
    auto f = tabulate(1.0, 1024, [](double) { return 3.0; });
    for (double alpha : {0.2, 0.5, 0.8}) {
        const auto d = frac::rl_derivative_left(f, alpha);
        for (std::size_t i = 0; i < d.size(); i += 100) {
            const double want = 3.0 / (frac::gamma_fn(1.0 - alpha) * std::pow(d.times[i], alpha));
            CHECK(d.values[i] == doctest::Approx(want).epsilon(1e-10));
        }
    }
}

TEST_CASE("left derivative power rule") {
    auto f = tabulate(1.0, 4096, [](double t) { return std::pow(t, 1.5); });
    const auto d = frac::rl_derivative_left(f, 0.4);
    const double x = d.times[2047];
    const double want = oracles::frozen::gamma_ratio_25_21 * std::pow(x, 1.1);
    CHECK(std::abs(d.values[2047] / want - 1.0) < 1e-4);
}

TEST_CASE("right derivative of a constant") {
    auto g = tabulate(1.0, 1024, [](double) { return 2.0; });
    const auto d = frac::rl_derivative_right(g, 0.25);
    const double x = d.times[512];
    const double want = 2.0 / (frac::gamma_fn(0.75) * std::pow(1.0 - x, 0.25));
    CHECK(d.values[512] == doctest::Approx(want).epsilon(1e-8));
    // the b-minus variant kills the constant entirely
    const auto db = frac::rl_derivative_right_bminus(g, 0.25);
    for (double v : db.values) CHECK(std::abs(v) < 1e-14);
}

TEST_CASE("uniform fast path agrees with the generic quadrature") {
    auto f = tabulate(1.0, 512, [](double t) { return std::sin(3.0 * t) + t * t; });
    auto f2 = f;
    f2.times[100] += 1e-7;  // breaks uniformity detection only
    for (double alpha : {0.3, 0.45}) {
        const auto a = frac::rl_derivative_left(f, alpha);
        const auto b = frac::rl_derivative_left(f2, alpha);
        for (std::size_t i = 0; i < a.size(); i += 7)
            CHECK(a.values[i] == doctest::Approx(b.values[i]).epsilon(1e-4));
        const auto c = frac::rl_derivative_right_bminus(f, alpha);
        const auto d = frac::rl_derivative_right_bminus(f2, alpha);
        for (std::size_t i = 0; i < c.size(); i += 7)
            CHECK(c.values[i] == doctest::Approx(d.values[i]).epsilon(1e-4));
    }
}

TEST_CASE("weighted norm closed forms") {
    auto lin = tabulate(1.0, 2048, [](double t) { return t; });
    CHECK(frac::holder_norm(lin, 0.25, 1.0) == doctest::Approx(4.0 / 3.0).epsilon(1e-6));
    auto one = tabulate(1.0, 2048, [](double) { return 1.0; });
    CHECK(frac::holder_norm(one, 0.25, 1.0) == doctest::Approx(4.0 / 3.0).epsilon(1e-6));
    // restriction to a shorter horizon shrinks the norm
    CHECK(frac::holder_norm(lin, 0.25, 0.5) < frac::holder_norm(lin, 0.25, 1.0));
    CHECK(frac::holder_norm(lin, 0.25, 0.0) == 0.0);
}

TEST_CASE("pathwise integral: constants and smooth pairs") {
    const std::size_t n = 2048;
    auto one = tabulate(1.0, n, [](double) { return 1.0; });
    auto g = tabulate(1.0, n, [](double t) { return std::sin(3.0 * t); });
    CHECK(frac::gls_integral(one, g, 0.3) == doctest::Approx(std::sin(3.0)).epsilon(1e-12));

    auto f = tabulate(1.0, n, [](double t) { return std::cos(2.0 * t); });
    auto lin = tabulate(1.0, n, [](double t) { return t; });
    const double want = oracles::integrate([](double t) { return std::cos(2.0 * t); }, 0.0, 1.0);
    CHECK(std::abs(frac::gls_integral(f, lin, 0.25) - want) < 1e-3);

    // linearity in the integrand
    auto fs = f;
    for (std::size_t i = 0; i < fs.size(); ++i) fs.values[i] = 2.0 * f.values[i] + 0.5;
    const double lhs = frac::gls_integral(fs, g, 0.3);
    const double rhs = 2.0 * frac::gls_integral(f, g, 0.3) + 0.5 * std::sin(3.0);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
}

TEST_CASE("chain rule for a rough integrator") {
    const auto g = gauss::ExactSampler(gauss::GaussianModel::fbm(0.7), 1024).sample_one(101, 0);
    const double want = 0.5 * g.values.back() * g.values.back();
    const double got = frac::gls_integral_refined(g, g, 0.4);
    CHECK(std::abs(got / want - 1.0) < 0.01);
}

TEST_CASE("integral bound against the seminorm pair") {
    const std::size_t n = 128;
    const double alpha = 0.35;
    gauss::ExactSampler sampler(gauss::GaussianModel::fbm(0.7), n);
    PathRng coeff(2024, 7);
    int checked = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto g = sampler.sample_one(500, static_cast<std::uint64_t>(trial));
        const double a = coeff.gaussian(), b = coeff.gaussian(), c = coeff.gaussian();
        auto f = tabulate(1.0, n, [&](double t) { return a + b * t + c * std::sin(4.0 * t); });
        const double lhs = std::abs(frac::gls_integral(f, g, alpha));
        const double rhs = frac::lambda_alpha(g, alpha) * frac::holder_norm(f, alpha, 1.0);
        CHECK(lhs <= rhs * (1.0 + 1e-6) + 1e-12);
        ++checked;
    }
    CHECK(checked == 20);
}

TEST_CASE("transform constants and guards") {
    CHECK(frac::volterra_constant(0.7) ==
          doctest::Approx(oracles::frozen::volterra_c_07).epsilon(1e-12));
    CHECK(frac::volterra_constant(0.5) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(frac::check_hurst_transform(0.3), std::invalid_argument);
    CHECK_THROWS_AS(frac::check_hurst_transform(1.0), std::invalid_argument);
    CHECK_THROWS_AS(frac::rl_derivative_left(GridFunction{}, 1.5), std::invalid_argument);
}

TEST_CASE("transform at H = 1/2 is the identity") {
    auto w = gauss::simulate_wiener_path(1.0, 128, 3, 0);
    const auto fbm = frac::k_h_transform(w, 0.5);
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(fbm.values[i] == w.values[i]);
}

TEST_CASE("volterra transform reproduces fBm variance and inverts") {
    const double H = 0.7;
    const std::size_t n = 512;
    frac::KhOperator op(uniform_grid(1.0, n), H);
    frac::KhInverseOperator inv(uniform_grid(1.0, n), H);
    double acc_t = 0.0, acc_h = 0.0;
    const int NP = 3000;
    std::vector<double> roundtrip;
    for (int p = 0; p < NP; ++p) {
        const auto w = gauss::simulate_wiener_path(1.0, n, 42, static_cast<std::uint64_t>(p));
        const auto fb = op.apply(w);
        acc_t += fb.values.back() * fb.values.back();
        acc_h += fb.values[n / 2] * fb.values[n / 2];
        if (p < 50) {
            const auto w2 = inv.apply(fb);
            double sup = 0.0, err = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) {
                sup = std::max(sup, std::abs(w.values[i]));
                err = std::max(err, std::abs(w.values[i] - w2.values[i]));
            }
            roundtrip.push_back(err / sup);
        }
    }
    CHECK(acc_t / NP == doctest::Approx(1.0).epsilon(0.05));
    CHECK(acc_h / NP == doctest::Approx(std::pow(0.5, 2.0 * H)).epsilon(0.05));
    CHECK(median(roundtrip) < 0.05);
}

TEST_CASE("default integration order stays inside the admissible band") {
    for (double theta : {0.55, 0.7, 0.9}) {
        const double a = frac::default_alpha_for(theta);
        CHECK(a > 1.0 - theta);
        CHECK(a < 0.5);
    }
}
