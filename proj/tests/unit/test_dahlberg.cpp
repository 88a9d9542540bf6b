#include "doctest.h"

#include "khabi/constants.hpp"
#include "khabi/dahlberg.hpp"
#include "khabi/quadrature.hpp"

#include <cmath>
#include <numbers>

using namespace khabi;

namespace {

constexpr double kPi = std::numbers::pi;

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// C^lambda_nu(cos theta) from 2F1(-nu, nu + 2 lambda; lambda + 1/2; sin^2(theta/2)).
double gegenbauer_hypergeometric(double lambda, double nu, double theta) {
    const double z = std::pow(std::sin(theta / 2), 2);
    const double a = -nu, b = nu + 2 * lambda, c = lambda + 0.5;
    double term = 1.0, sum = 1.0;
    for (int k = 0; k < 20000; ++k) {
        term *= (a + k) * (b + k) / ((c + k) * (k + 1)) * z;
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return std::exp(std::lgamma(nu + 2 * lambda) - std::lgamma(2 * lambda) - std::lgamma(nu + 1)) * sum;
}

// First positive root of tan z = z.
double first_tan_root() {
    double lo = 4.0, hi = 4.7;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (std::tan(mid) - mid > 0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

TEST_CASE("the n = 2 kernel") {
    CHECK(gegenbauer_c1(2.0, 1e-9) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(gegenbauer_c1(2.0, 0.0) == 1.0);
    for (double rho : {1.5, 2.0, 3.0, 7.0}) CHECK(std::abs(gegenbauer_c1(rho, kPi / (rho + 1))) < 1e-14);
}

TEST_CASE("closed forms against the hypergeometric series") {
    for (int n = 2; n <= 5; ++n)
        for (double rho : {1.5, 2.0, 3.3, 8.0})
            for (double theta : {1e-4, 0.01, 0.2, 0.7, 1.3, 1.9}) {
                CAPTURE(n);
                CAPTURE(rho);
                CAPTURE(theta);
                const double want = gegenbauer_hypergeometric(n - 1.0, rho, theta);
                const double got = gegenbauer(n, rho, theta);
                CHECK(std::abs(got - want) <= 1e-10 * std::max(1.0, gegenbauer_at_one(n, rho)));
            }
}

TEST_CASE("n = 3 matches the two-term sine expression") {
    for (double rho : {1.5, 2.0, 4.0})
        for (double theta : {0.3, 0.8, 1.4}) {
            const double s = std::sin(theta);
            const double want =
                0.25 * ((rho + 3) * std::sin((rho + 1) * theta) - (rho + 1) * std::sin((rho + 3) * theta)) / (s * s * s);
            CHECK(gegenbauer(3, rho, theta) == doctest::Approx(want).epsilon(1e-12));
        }
}

TEST_CASE("value at theta = 0") {
    for (double rho : {1.5, 2.0, 6.0}) {
        CHECK(gegenbauer(3, rho, 0.0) == doctest::Approx((rho + 1) * (rho + 2) * (rho + 3) / 6).epsilon(1e-12));
        CHECK(gegenbauer(3, rho, 1e-6) == doctest::Approx((rho + 1) * (rho + 2) * (rho + 3) / 6).epsilon(1e-8));
        for (int n = 2; n <= 5; ++n) {
            const double g = n - 1.0;
            const double want = std::exp(std::lgamma(rho + 2 * g) - std::lgamma(2 * g) - std::lgamma(rho + 1));
            CHECK(gegenbauer_at_one(n, rho) == doctest::Approx(want).epsilon(1e-12));
            CHECK(gegenbauer_at_one(n, rho, Normalization::solution) == 1.0);
            CHECK(gegenbauer(n, rho, 1e-7) == doctest::Approx(want).epsilon(1e-8));
            CHECK(gegenbauer(n, rho, 0.5, Normalization::solution) ==
                  doctest::Approx(gegenbauer(n, rho, 0.5) / want).epsilon(1e-13));
        }
    }
}

TEST_CASE("ODE residual by finite differences") {
    // y'' + 2 gamma cot(theta) y' + rho (rho + 2 gamma) y = 0 in the angle variable
    for (int n = 2; n <= 4; ++n)
        for (double rho : {1.5, 3.0}) {
            const double g = n - 1.0, h = 1e-4;
            for (double theta = 0.1; theta < kPi - 0.1; theta += 0.05) {
                const double y0 = gegenbauer(n, rho, theta);
                const double yp = gegenbauer(n, rho, theta + h), ym = gegenbauer(n, rho, theta - h);
                const double d1 = (yp - ym) / (2 * h), d2 = (yp - 2 * y0 + ym) / (h * h);
                const double res = d2 + 2 * g / std::tan(theta) * d1 + rho * (rho + 2 * g) * y0;
                const double scale = std::abs(d2) + std::abs(2 * g / std::tan(theta) * d1) + std::abs(rho * (rho + 2 * g) * y0);
                CHECK(std::abs(res) <= 1e-5 * std::max(1.0, scale));
            }
        }
}

TEST_CASE("theta_star") {
    for (double rho : {1.0, 1.5, 2.0, 3.0, 5.0, 10.0})
        CHECK(std::abs(theta_star(2, rho) - kPi / (rho + 1)) < 1e-10);
    CHECK(theta_star(2, 1.0) == doctest::Approx(kPi / 2).epsilon(1e-14));
    for (int n = 3; n <= 5; ++n)
        for (double rho : {1.5, 4.0}) {
            const double t = theta_star(n, rho);
            CHECK(std::abs(gegenbauer(n, rho, t)) < 1e-9 * gegenbauer_at_one(n, rho));
            for (double f : {0.1, 0.5, 0.9, 0.99}) CHECK(gegenbauer(n, rho, f * t) > 0);
        }
    // For n = 3 the zero behaves like z/(rho+2), z the first root of tan z = z;
    // the rough guess pi/(rho+2) is low by about 30%.
    const double z = first_tan_root();
    CHECK(z == doctest::Approx(4.493409457909064).epsilon(1e-14));
    CHECK(rel(theta_star(3, 50.0), z / 52.0) < 0.01);
    CHECK(rel(theta_star(3, 50.0), kPi / 52.0) > 0.05);
}

TEST_CASE("sphere areas") {
    CHECK(sphere_area(1) == doctest::Approx(2 * kPi).epsilon(1e-15));
    CHECK(sphere_area(2) == doctest::Approx(4 * kPi).epsilon(1e-15));
    CHECK(sphere_area(3) == doctest::Approx(2 * kPi * kPi).epsilon(1e-15));
    CHECK(sphere_area(4) == doctest::Approx(8 * kPi * kPi / 3).epsilon(1e-15));
}

TEST_CASE("vartheta") {
    SUBCASE("normalization invariance") {
        for (int n = 2; n <= 4; ++n)
            for (double rho : {1.5, 2.0, 5.0})
                CHECK(rel(vartheta_u(n, rho, Normalization::solution), vartheta_u(n, rho)) < 1e-12);
    }
    SUBCASE("n = 2 closed form") {
        for (double rho : {1.5, 2.0, 3.0, 5.0}) {
            CHECK(rel(vartheta_closed_n2(rho), vartheta_u(2, rho)) < 1e-8);
            CHECK(vartheta_closed_n2(rho) == doctest::Approx(p_n(2, rho) / std::sin(kPi / (rho + 1))).epsilon(1e-15));
            CHECK(vartheta_closed_n2_mixed(rho) == doctest::Approx((rho + 1) * vartheta_closed_n2(rho)).epsilon(1e-15));
        }
        // direct quadrature of the defining ratio at rho = 2
        quad::IntegrationSpec s;
        s.integrand = [](double t) { return std::sin(3 * t) / (3 * std::sin(t)) * std::sin(t) * std::sin(t); };
        s.upper = kPi / 3;
        s.rel_tol = 1e-13;
        const double by_hand = 1.0 * (2 * kPi * kPi) / (4 * kPi) / quad::integrate(s).value;
        CHECK(vartheta_u(2, 2.0) == doctest::Approx(by_hand).epsilon(1e-12));
        CHECK(vartheta_u(2, 2.0) == doctest::Approx(8 * std::sqrt(3.0) * kPi / 3).epsilon(1e-12));
    }
    SUBCASE("n = 3 coefficient") {
        for (double rho : {1.5, 2.0, 3.0, 7.0, 20.0}) {
            const auto fit = fit_n3_coefficient(rho);
            CAPTURE(rho);
            CHECK(fit.numerator == 4);
            CHECK(fit.denominator == 1);
            CHECK(fit.residual < 1e-8);
            CHECK(rel(vartheta_closed_n3(rho, 4.0), vartheta_u(3, rho)) < 1e-8);
        }
        CHECK(m_rho(2.0, 0.5) ==
              doctest::Approx(30 * std::sin(1.0) - 24 * std::sin(2.0) + 6 * std::sin(3.0)).epsilon(1e-15));
    }
}

TEST_CASE("comparison report") {
    const auto r = compare(2, 2.0);
    CHECK(r.vartheta_numeric == doctest::Approx(vartheta_u(2, 2.0)).epsilon(1e-14));
    CHECK(r.k_n == doctest::Approx(k_n({2, 2.0})).epsilon(1e-12));
    CHECK(r.dominates_k_n);
    CHECK(r.vartheta_closed_n2.has_value());
    CHECK_FALSE(r.vartheta_closed_n3.has_value());
    CHECK(r.theta_star_approx == doctest::Approx(kPi / 3).epsilon(1e-15));
    for (int n : {2, 3})
        for (double rho : {1.25, 1.5, 2.0, 3.0, 5.0, 10.0}) {
            const auto c = compare(n, rho);
            CAPTURE(n);
            CAPTURE(rho);
            CHECK(c.vartheta_numeric >= c.k_n);
        }
    const auto big = compare(3, 50.0);
    CHECK(big.vartheta_numeric > std::exp(2.0) * p_n(3, 50.0));
    CHECK(big.exceeds_e_pow_p);
}
