#include "doctest.h"

#include "khabi/error.hpp"
#include "khabi/quadrature.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

using namespace khabi;
using khabi::quad::IntegrationSpec;
using khabi::quad::integrate;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;

} // namespace

TEST_CASE("closed-form examples") {
    SUBCASE("arctan tail, rho = 2") {
        IntegrationSpec s;
        s.integrand = [](double t) { return 1.0 / (1.0 + t * t); };
        s.lower = 0.0;
        s.upper = kInf;
        s.tail_decay = 1.0;
        CHECK(integrate(s).value == doctest::Approx(kPi / 2).epsilon(1e-12));
    }
    SUBCASE("inverse square root with a left hint") {
        IntegrationSpec s;
        s.integrand = [](double x) { return 1.0 / std::sqrt(x); };
        s.left_exponent = -0.5;
        CHECK(integrate(s).value == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("sine over a half period") {
        IntegrationSpec s;
        s.integrand = [](double x) { return std::sin(x); };
        s.upper = kPi;
        CHECK(integrate(s).value == doctest::Approx(2.0).epsilon(1e-13));
    }
}

TEST_CASE("t^{rho/2-1}/(1+t^rho) over (0, inf) equals pi/rho") {
    for (double rho : {0.5, 1.1, 1.5, 2.0, 3.0, 5.0, 10.0}) {
        IntegrationSpec s;
        s.integrand = [rho](double t) { return std::pow(t, rho / 2 - 1) / (1 + std::pow(t, rho)); };
        s.lower = 0.0;
        s.upper = kInf;
        s.left_exponent = rho / 2 - 1;
        s.tail_decay = rho / 2;
        const auto r = integrate(s);
        CAPTURE(rho);
        CHECK(std::abs(r.value - kPi / rho) / (kPi / rho) < 1e-10);
    }
}

TEST_CASE("breakpoints restore accuracy across a kink") {
    IntegrationSpec s;
    s.integrand = [](double x) { return x < 0.3141 ? 0.0 : std::pow(x - 0.3141, 1.5); };
    s.breakpoints = {0.3141};
    const double exact = std::pow(1 - 0.3141, 2.5) / 2.5;
    const auto r = integrate(s);
    CHECK(std::abs(r.value - exact) < 1e-13);
    CHECK(std::abs(r.value - exact) <= std::max(r.error, 1e-15));
}

TEST_CASE("error estimates are conservative on a closed-form battery") {
    // Families with known integrals over random parameters.
    std::mt19937 gen(20241);
    std::uniform_real_distribution<double> beta_dist(-0.9, 3.0), rho_dist(1.05, 8.0), b_dist(0.2, 6.0);
    int total = 0, honest = 0;
    for (int trial = 0; trial < 200; ++trial) {
        IntegrationSpec s;
        double exact = 0.0;
        switch (trial % 4) {
        case 0: {
            const double beta = beta_dist(gen), b = b_dist(gen);
            s.integrand = [beta](double x) { return std::pow(x, beta); };
            s.upper = b;
            s.left_exponent = beta;
            exact = std::pow(b, beta + 1) / (beta + 1);
            break;
        }
        case 1: {
            const double rho = rho_dist(gen);
            s.integrand = [rho](double t) { return std::pow(t, rho / 2 - 1) / (1 + std::pow(t, rho)); };
            s.upper = kInf;
            s.left_exponent = rho / 2 - 1;
            s.tail_decay = rho / 2;
            exact = kPi / rho;
            break;
        }
        case 2: {
            const double b = b_dist(gen);
            s.integrand = [](double x) { return std::exp(-x) * std::cos(3 * x); };
            s.upper = b;
            // int e^{-x} cos 3x = e^{-x}(3 sin 3x - cos 3x)/10
            exact = (std::exp(-b) * (3 * std::sin(3 * b) - std::cos(3 * b)) + 1.0) / 10.0;
            break;
        }
        default: {
            const double a = b_dist(gen);
            s.integrand = [a](double x) { return 1.0 / (a * a + x * x); };
            s.lower = 1.0;
            s.upper = kInf;
            exact = (kPi / 2 - std::atan(1.0 / a)) / a;
            break;
        }
        }
        s.rel_tol = 1e-9;
        const auto r = integrate(s);
        ++total;
        // The estimate may be smaller than double rounding; allow a few ulps.
        if (std::abs(r.value - exact) <= r.error + 8 * std::numeric_limits<double>::epsilon() * std::abs(exact))
            ++honest;
        CHECK(std::abs(r.value - exact) / std::abs(exact) < 1e-8);
    }
    CHECK(honest >= total * 99 / 100);
}

TEST_CASE("determinism") {
    IntegrationSpec s;
    s.integrand = [](double t) { return std::pow(t, -0.3) / (1 + t * t * t); };
    s.upper = kInf;
    s.left_exponent = -0.3;
    const double a = integrate(s).value, b = integrate(s).value;
    CHECK(a == b);
}

TEST_CASE("map_to_finite") {
    SUBCASE("decaying tail is preserved") {
        IntegrationSpec s;
        s.integrand = [](double t) { return std::pow(t, -2.5); };
        s.lower = 2.0;
        s.upper = kInf;
        const auto m = quad::map_to_finite(s);
        CHECK(std::isfinite(m.upper));
        CHECK(integrate(m).value == doctest::Approx(std::pow(2.0, -1.5) / 1.5).epsilon(1e-11));
    }
    SUBCASE("constant integrand is rejected") {
        IntegrationSpec s;
        s.integrand = [](double) { return 1.0; };
        s.lower = 1.0;
        s.upper = kInf;
        CHECK_THROWS_AS(quad::map_to_finite(s), DomainError);
    }
}

TEST_CASE("exhausted budget reports the partial value") {
    IntegrationSpec s;
    s.integrand = [](double x) { return std::sin(1.0 / x) / x; };
    s.upper = 1.0;
    s.max_subdivisions = 20;
    s.rel_tol = 1e-13;
    try {
        integrate(s);
        FAIL("expected NonConvergence");
    } catch (const NonConvergence& e) {
        CHECK(std::isfinite(e.partial_value()));
    }
}

TEST_CASE("invalid specs") {
    IntegrationSpec s;
    s.integrand = [](double x) { return x; };
    s.lower = 1.0;
    s.upper = 0.0;
    CHECK_THROWS_AS(integrate(s), DomainError);
    s.upper = 2.0;
    s.breakpoints = {3.0};
    CHECK_THROWS_AS(integrate(s), DomainError);
    s.breakpoints = {};
    s.left_exponent = -1.5;
    CHECK_THROWS_AS(integrate(s), DomainError);
}

TEST_CASE("Gauss-Legendre rules integrate polynomials exactly") {
    for (int p : {5, 10, 20}) {
        const auto& g = quad::gauss_legendre(p);
        REQUIRE(g.nodes.size() == static_cast<std::size_t>(p));
        for (int d = 0; d < 2 * p; ++d) {
            double s = 0.0;
            for (int i = 0; i < p; ++i) s += g.weights[i] * std::pow(g.nodes[i], d);
            const double exact = d % 2 ? 0.0 : 2.0 / (d + 1);
            CHECK(s == doctest::Approx(exact).epsilon(1e-13));
        }
    }
}
