#include "doctest.h"

#include "khabi/constants.hpp"
#include "khabi/error.hpp"
#include "khabi/functional.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace khabi;

namespace {

constexpr double kPi = std::numbers::pi;

SignPattern pattern_of(const ProblemParams& p) {
    const auto s = DerivativeStack::build(p);
    return sign_pattern(s, positive_roots(s));
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

} // namespace

TEST_CASE("Cauchy kernel on powers and constants") {
    const auto grid = geometric_grid(1e-3, 10.0, 64);
    SUBCASE("Q^2[1] = t^2/2") {
        const auto one = GridFunction::power(1.0, 0.0, grid);
        for (double t : {0.01, 0.5, 3.0}) CHECK(q_power_at(one, 2, t) == doctest::Approx(t * t / 2).epsilon(1e-12));
    }
    SUBCASE("Q^1[x^a] = t^{a+1}/(a+1)") {
        for (double a : {-0.5, 0.0, 1.5}) {
            const auto f = GridFunction::power(1.0, a, grid);
            CHECK(q_power_at(f, 1, 2.0) == doctest::Approx(std::pow(2.0, a + 1) / (a + 1)).epsilon(1e-12));
        }
    }
    SUBCASE("Q^n[s_0/x] equals t^{rho/2+n-1}/(n-1)!") {
        for (int n = 2; n <= 5; ++n)
            for (double rho : {1.5, 2.0, 3.0}) {
                const ProblemParams p{n, rho};
                const double c = s0_coefficient(p);
                const auto f = GridFunction::power(c, rho / 2 - 1, grid);
                const auto q = q_power(f, n);
                const double fact = std::tgamma(n);
                for (double t : {0.1, 1.0, 7.0})
                    CHECK(rel(q(t), std::pow(t, rho / 2 + n - 1) / fact) < 1e-12);
                // the same by quadrature on a sampled copy
                std::vector<double> vals;
                for (double x : grid) vals.push_back(c * std::pow(x, rho / 2 - 1));
                const auto sampled = GridFunction::sampled(grid, vals, rho / 2 - 1);
                // interpolation is linear in log t, so only a few digits survive
                CHECK(rel(q_power_at(sampled, n, 1.0), 1.0 / fact) < 1e-3);
            }
    }
}

TEST_CASE("sampled functions interpolate monotonically in log t") {
    const auto grid = geometric_grid(0.1, 10.0, 9);
    std::vector<double> v;
    for (double t : grid) v.push_back(std::sqrt(t));
    const auto f = GridFunction::sampled(grid, v, 0.5);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(f(grid[i]) == doctest::Approx(v[i]).epsilon(1e-14));
    double prev = 0.0;
    for (double t : geometric_grid(0.1, 10.0, 200)) {
        CHECK(f(t) >= prev);
        CHECK(f(t) == doctest::Approx(std::sqrt(t)).epsilon(2e-2));
        prev = f(t);
    }
    // power on the left, constant on the right
    CHECK(f(0.01) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(f(100.0) == doctest::Approx(std::sqrt(10.0)).epsilon(1e-14));
}

TEST_CASE("check_inc_rho") {
    const ProblemParams p{2, 2.0};
    const auto grid = geometric_grid(1e-3, 1e2, 512);
    SUBCASE("s_0 is admissible and tight") {
        const auto a = check_inc_rho(s0(p, grid), p);
        CHECK(a.admissible());
        CHECK(std::abs(a.growth_margin) < 1e-9);
    }
    SUBCASE("zero is admissible with full margin") {
        const auto a = check_inc_rho(GridFunction::zero(grid), p);
        CHECK(a.admissible());
        CHECK(a.growth_margin == 1.0);
    }
    SUBCASE("scaled s_0 is not") {
        const auto big = GridFunction::power(1.01 * s0_coefficient(p), 1.0, grid);
        const auto a = check_inc_rho(big, p);
        CHECK(a.nonnegative);
        CHECK(a.nondecreasing);
        CHECK_FALSE(a.growth);
        CHECK(a.growth_margin == doctest::Approx(-0.01).epsilon(1e-6));
    }
    SUBCASE("a decreasing sample is flagged") {
        std::vector<double> v;
        for (double t : grid) v.push_back(1.0 / (1.0 + t));
        const auto a = check_inc_rho(GridFunction::sampled(grid, v, 0.0), p);
        CHECK_FALSE(a.nondecreasing);
    }
    SUBCASE("s_0 stays admissible over n and rho") {
        for (int n = 2; n <= 5; ++n)
            for (double rho : {1.25, 1.5, 3.0, 5.0}) {
                const ProblemParams q{n, rho};
                CAPTURE(n);
                CAPTURE(rho);
                CHECK(check_inc_rho(s0(q, grid), q).admissible());
            }
    }
}

TEST_CASE("J of s_0 is P_n/(2 rho)") {
    const auto grid = geometric_grid(1e-3, 1e2, 128);
    for (int n = 2; n <= 5; ++n)
        for (double rho : {1.25, 2.0, 5.0}) {
            const ProblemParams p{n, rho};
            CHECK(rel(j_functional(s0(p, grid), p), p_n(n, rho) / (2 * rho)) < 1e-12);
            // sampled copy through the panel rule
            const auto wide = geometric_grid(1e-3, 1e6, 1024);
            std::vector<double> v;
            for (double t : wide) v.push_back(s0_coefficient(p) * std::pow(t, rho / 2));
            CHECK(rel(j_functional(GridFunction::sampled(wide, v, rho / 2), p), p_n(n, rho) / (2 * rho)) < 2e-3);
        }
    CHECK(j_functional(GridFunction::zero(grid), {2, 2.0}) == 0.0);
}

TEST_CASE("the bump eta") {
    const ProblemParams p{2, 2.0};
    const auto pat = pattern_of(p);
    const double tau = pat.zeros[0].tau;
    CHECK(eta(pat, 2, tau / 2) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(eta(pat, 2, tau) == doctest::Approx(0.0));
    CHECK(eta(pat, 2, 2 * tau) == 0.0);
    for (double t : {0.1, 0.3, 0.5}) {
        CHECK(eta(pat, 2, t) >= 0.0);
        CHECK(eta(pat, 2, t) <= 1.0);
    }
    // derivatives of f_0 eta vanish at the zero from the left up to order n+1
    SUBCASE("vanishing at tau") {
        for (int n = 2; n <= 4; ++n) {
            const ProblemParams q{n, 2.0};
            const auto pq = pattern_of(q);
            for (const auto& z : pq.zeros) {
                const auto j = eta_jet(pq, n, z.tau * (1 - 1e-9), n + 1);
                for (int k = 0; k <= n; ++k) CHECK(std::abs(j.derivative(k)) < 1e-6);
            }
        }
    }
    SUBCASE("jet matches finite differences") {
        const double t = 0.3, h = 1e-4;
        const auto j = eta_jet(pat, 2, t, 2);
        CHECK(j.derivative(0) == doctest::Approx(eta(pat, 2, t)).epsilon(1e-14));
        CHECK(j.derivative(1) ==
              doctest::Approx((eta(pat, 2, t + h) - eta(pat, 2, t - h)) / (2 * h)).epsilon(1e-7));
        CHECK(j.derivative(2) ==
              doctest::Approx((eta(pat, 2, t + h) - 2 * eta(pat, 2, t) + eta(pat, 2, t - h)) / (h * h)).epsilon(1e-5));
    }
}

TEST_CASE("perturbation gain") {
    const auto grid = geometric_grid(1e-3, 1e2, 128);
    for (double rho : {1.5, 2.0}) {
        const ProblemParams p{2, rho};
        const auto s = s0(p, grid);
        const double g = perturbation_gain(s, p, 0.1);
        CAPTURE(rho);
        CHECK(g > 0);
        CHECK(perturbation_gain(s, p, 0.2) == doctest::Approx(2 * g).epsilon(1e-12));
        const MaximizingSequence seq(p, pattern_of(p), {0.1});
        const double diff = j_functional(seq.member(1, grid), p, 1e-12) - j_functional(seq.member(0, grid), p, 1e-12);
        CHECK(rel(diff, g) < 1e-6);
    }
    const ProblemParams p{2, 2.0};
    CHECK(perturbation_gain(GridFunction::zero(grid), p, 0.1) == 0.0);
    CHECK(perturbation_gain(s0(p, grid), p, 0.1) == doctest::Approx(0.000771458529141).epsilon(1e-9));
}

TEST_CASE("maximizing sequence") {
    const ProblemParams p{2, 2.0};
    const auto r = maximize(p, 30);
    REQUIRE(r.iterations.size() == 31);
    CHECK(r.iterations[0].j_value == doctest::Approx(kPi).epsilon(1e-14));
    CHECK(r.j_sup == doctest::Approx(k2_closed(2.0)).epsilon(1e-12));
    for (std::size_t k = 1; k < r.iterations.size(); ++k) {
        CHECK(r.iterations[k].j_value >= r.iterations[k - 1].j_value);
        CHECK(r.iterations[k].j_value <= r.j_sup);
        CHECK(r.iterations[k].epsilon <= r.iterations[k - 1].epsilon + (k == 1 ? 1.0 : 0.0));
        CHECK(r.iterations[k].growth_margin > -1e-9);
        CHECK(r.iterations[k].min_slope >= 0.0);
    }
    SUBCASE("recorded J agrees with direct quadrature and each member is admissible") {
        const auto seq = r.sequence();
        for (int k : {0, 5, 30}) {
            const auto s = seq.member(k, r.grid);
            CHECK(rel(j_functional(s, p, 1e-12), r.iterations[k].j_value) < 1e-9);
            CHECK(check_inc_rho(s, p).admissible());
        }
    }
    SUBCASE("s_k leaves D_+ untouched") {
        const auto seq = r.sequence();
        const double tau = r.pattern.zeros.back().tau;
        for (double t : {1.01 * tau, 2 * tau, 10 * tau})
            CHECK(seq.s(30, t) == doctest::Approx(s0_coefficient(p) * std::pow(t, 1.0)).epsilon(1e-12));
    }
    SUBCASE("gain reaches the next iterate") {
        const auto seq = r.sequence();
        const auto s1 = seq.member(1, r.grid);
        CHECK(rel(r.iterations[1].j_value - r.iterations[0].j_value,
                  perturbation_gain(seq.member(0, r.grid), p, r.iterations[1].epsilon)) < 1e-6);
        (void)s1;
    }
}

TEST_CASE("maximize rejects bad input") {
    CHECK_THROWS_AS(maximize({2, 1.0}, 5), DomainError);
    CHECK_THROWS_AS(maximize({2, 2.0}, -1), DomainError);
}
