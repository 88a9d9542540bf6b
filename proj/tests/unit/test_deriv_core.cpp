#include "doctest.h"

#include "khabi/deriv_core.hpp"
#include "khabi/error.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace khabi;

namespace {

// Taylor coefficients of 1/(1+t^rho) at t0 by series reciprocal; independent of the recurrence.
std::vector<double> taylor_phi(double rho, double t0, int order) {
    std::vector<double> a(order + 1), b(order + 1);
    double binom = 1.0;
    for (int j = 0; j <= order; ++j) {
        a[j] = binom * std::pow(t0, rho - j);
        binom *= (rho - j) / (j + 1.0);
    }
    a[0] += 1.0;
    b[0] = 1.0 / a[0];
    for (int j = 1; j <= order; ++j) {
        double s = 0.0;
        for (int i = 1; i <= j; ++i) s += a[i] * b[j - i];
        b[j] = -s / a[0];
    }
    double fact = 1.0;
    for (int j = 1; j <= order; ++j) {
        fact *= j;
        b[j] *= fact;
    }
    return b;
}

double rising(double x, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x + i;
    return r;
}

double falling(double x, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x - i;
    return r;
}

} // namespace

TEST_CASE("q_1 and q_2 match the hand derivation") {
    const auto s = DerivativeStack::build({2, 2.0});
    // phi' = -rho u / (t (1+u)^2)
    CHECK(s.q(1).degree() == 1);
    CHECK(s.q(1)[0] == doctest::Approx(0.0));
    CHECK(s.q(1)[1] == doctest::Approx(-2.0));
    // rho = 2: phi'' = (6t^2 - 2)/(1+t^2)^3, so q_2 = 6u^2 - 2u.
    CHECK(s.q(2)[1] == doctest::Approx(-2.0));
    CHECK(s.q(2)[2] == doctest::Approx(6.0));
}

TEST_CASE("extreme coefficients follow the falling and rising products") {
    for (int n = 2; n <= 8; ++n) {
        for (double rho : {1.3, 2.0, 3.7, 6.5}) {
            const auto s = DerivativeStack::build({n, rho});
            const auto& q = s.q(n);
            CHECK(q.degree() == n);
            CHECK(q[1] == doctest::Approx(-falling(rho, n)).epsilon(1e-12));
            CHECK(q[n] == doctest::Approx((n % 2 ? -1.0 : 1.0) * rising(rho, n)).epsilon(1e-12));
        }
    }
}

TEST_CASE("derivatives agree with an independent Taylor oracle") {
    std::mt19937 gen(20240531u);
    std::uniform_real_distribution<double> rho_d(1.05, 9.0), t_d(-3.0, 3.0);
    std::uniform_int_distribution<int> n_d(2, 7);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = n_d(gen);
        const double rho = rho_d(gen);
        const double t = std::exp(t_d(gen));
        const auto s = DerivativeStack::build({n, rho});
        const auto ref = taylor_phi(rho, t, n);
        for (int k = 0; k <= n; ++k) {
            const double got = s.phi_deriv<double>(k, t);
            const double scale = std::abs(ref[k]) + 1e-12 * std::abs(ref[0]) / std::pow(t, k);
            CHECK(std::abs(got - ref[k]) <= 1e-9 * scale);
        }
    }
}

TEST_CASE("finite differences of phi^(k) give phi^(k+1)") {
    const auto s = DerivativeStack::build({5, 2.7});
    for (double t : {0.2, 0.9, 1.0, 1.7, 4.0}) {
        for (int k = 0; k < 5; ++k) {
            const double h = 1e-4 * t;
            const double fd = (s.phi_deriv<double>(k, t + h) - s.phi_deriv<double>(k, t - h)) / (2 * h);
            CHECK(fd == doctest::Approx(s.phi_deriv<double>(k + 1, t)).epsilon(1e-6));
        }
    }
}

TEST_CASE("exact integer coefficients reproduce the floating recurrence") {
    const ExactCoefficients exact(6);
    const auto s = DerivativeStack::build({6, 2.5});
    for (int j = 0; j <= 6; ++j)
        CHECK(static_cast<double>(exact.evaluate(6, j, 2.5L)) == doctest::Approx(s.q(6)[j]).epsilon(1e-13));
    const auto e = DerivativeStack::build({6, 2.5}, CoefficientMode::exact);
    for (int j = 0; j <= 6; ++j) CHECK(e.q(6)[j] == doctest::Approx(s.q(6)[j]).epsilon(1e-13));
}

TEST_CASE("large t uses the inverted form") {
    const auto s = DerivativeStack::build({4, 3.0});
    for (double t : {1e3, 1e6, 1e10}) {
        const double v = s.phi_deriv<double>(4, t);
        // phi^{(4)} ~ (-1)^4 rho(rho+1)(rho+2)(rho+3) t^{-rho-4} for t -> inf
        const double lead = rising(3.0, 4) * std::pow(t, -7.0);
        CHECK(std::isfinite(v));
        CHECK(v == doctest::Approx(lead).epsilon(1e-2));
    }
}

TEST_CASE("one-sided limits at t = 0") {
    CHECK(DerivativeStack::build({2, 2.0}).phi_deriv<double>(2, 0.0) == doctest::Approx(-2.0));
    CHECK(DerivativeStack::build({2, 3.0}).phi_deriv<double>(2, 0.0) == doctest::Approx(0.0));
    CHECK_THROWS_AS(DerivativeStack::build({3, 1.5}).phi_deriv<double>(3, 0.0), DomainError);
    CHECK(DerivativeStack::build({3, 1.5}).phi_deriv<double>(1, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("precision variants agree") {
    const auto s = DerivativeStack::build({4, 2.2});
    const double d = s.phi_deriv<double>(4, 1.3);
    const long double e = s.phi_deriv<long double>(4, 1.3L);
    const float f = s.phi_deriv<float>(4, 1.3f);
    CHECK(static_cast<double>(e) == doctest::Approx(d).epsilon(1e-13));
    CHECK(static_cast<double>(f) == doctest::Approx(d).epsilon(1e-4));
}

TEST_CASE("invalid parameters are rejected") {
    CHECK_THROWS_AS(DerivativeStack::build({1, 2.0}), DomainError);
    CHECK_THROWS_AS(DerivativeStack::build({2, -1.0}), DomainError);
    CHECK_THROWS_AS(DerivativeStack::build({2, 2.0}).phi_deriv<double>(3, 1.0), DomainError);
    CHECK_THROWS_AS(DerivativeStack::build({2, 2.0}).phi_deriv<double>(1, -1.0), DomainError);
}
