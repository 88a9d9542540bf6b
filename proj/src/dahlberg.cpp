#include "khabi/dahlberg.hpp"

#include "khabi/error.hpp"
#include "khabi/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace khabi {
namespace {

constexpr double kPi = std::numbers::pi;

// c * trig(alpha theta) / sin^p theta
struct Term {
    double c;
    bool is_sin;
    double alpha;
    int p;
};

void add_term(std::vector<Term>& out, Term t) {
    if (t.alpha < 0.0) {
        t.alpha = -t.alpha;
        if (t.is_sin) t.c = -t.c;
    }
    if (t.is_sin && t.alpha == 0.0) return;
    for (auto& u : out) {
        if (u.is_sin == t.is_sin && u.p == t.p && u.alpha == t.alpha) {
            u.c += t.c;
            return;
        }
    }
    out.push_back(t);
}

// d/dx with x = cos theta, i.e. -(1/sin theta) d/dtheta.
std::vector<Term> differentiate(const std::vector<Term>& terms) {
    std::vector<Term> out;
    for (const auto& t : terms) {
        const double half = 0.5 * t.c * t.p;
        if (t.is_sin) {
            add_term(out, {-t.c * t.alpha, false, t.alpha, t.p + 1});
            add_term(out, {half, true, t.alpha + 1.0, t.p + 2});
            add_term(out, {half, true, t.alpha - 1.0, t.p + 2});
        } else {
            add_term(out, {t.c * t.alpha, true, t.alpha, t.p + 1});
            add_term(out, {half, false, t.alpha + 1.0, t.p + 2});
            add_term(out, {half, false, t.alpha - 1.0, t.p + 2});
        }
    }
    std::erase_if(out, [](const Term& t) { return t.c == 0.0; });
    return out;
}

// ode-normalized C^{n-1}_rho(cos theta) as a list of terms.
std::vector<Term> gegenbauer_terms(int n, double rho) {
    std::vector<Term> terms{{1.0, true, rho + n - 1, 1}};
    double scale = 1.0;
    for (int k = 1; k <= n - 2; ++k) {
        terms = differentiate(terms);
        scale *= 2.0 * k;
    }
    for (auto& t : terms) t.c /= scale;
    return terms;
}

using Series = std::vector<double>;

Series multiply(const Series& a, const Series& b) {
    Series r(a.size(), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0) continue;
        for (std::size_t j = 0; i + j < r.size(); ++j) r[i + j] += a[i] * b[j];
    }
    return r;
}

Series trig_series(bool is_sin, double alpha, std::size_t len) {
    Series s(len, 0.0);
    double term = 1.0;  // (alpha theta)^k / k!
    for (std::size_t k = 0; k < len; ++k) {
        if (k > 0) term *= alpha / static_cast<double>(k);
        const std::size_t phase = k % 4;
        if (is_sin) {
            if (phase == 1) s[k] = term;
            if (phase == 3) s[k] = -term;
        } else {
            if (phase == 0) s[k] = term;
            if (phase == 2) s[k] = -term;
        }
    }
    return s;
}

Series power(const Series& base, int e) {
    Series r(base.size(), 0.0);
    r[0] = 1.0;
    for (int i = 0; i < e; ++i) r = multiply(r, base);
    return r;
}

double horner(const Series& s, double x) {
    double v = 0.0;
    for (auto it = s.rbegin(); it != s.rend(); ++it) v = v * x + *it;
    return v;
}

// sum c trig(alpha theta) / sin^p theta for small theta: the numerator over the
// common denominator sin^P theta is expanded in theta and its first P
// coefficients (which cancel) are dropped.
double evaluate_series(const std::vector<Term>& terms, double theta) {
    int big_p = 0;
    for (const auto& t : terms) big_p = std::max(big_p, t.p);
    const std::size_t len = static_cast<std::size_t>(big_p) + 40;
    const Series sine = trig_series(true, 1.0, len);
    std::vector<Series> sine_pow(static_cast<std::size_t>(big_p) + 1);
    for (int q = 0; q <= big_p; ++q) sine_pow[static_cast<std::size_t>(q)] = power(sine, q);

    Series numer(len, 0.0);
    for (const auto& t : terms) {
        const Series part = multiply(trig_series(t.is_sin, t.alpha, len), sine_pow[static_cast<std::size_t>(big_p - t.p)]);
        for (std::size_t k = 0; k < len; ++k) numer[k] += t.c * part[k];
    }
    Series shifted(numer.begin() + big_p, numer.end());
    Series sinc(len - static_cast<std::size_t>(big_p), 0.0);
    for (std::size_t k = 0; k < sinc.size(); ++k) sinc[k] = sine[k + 1];
    const Series denom = power(sinc, big_p);
    return horner(shifted, theta) / horner(denom, theta);
}

double evaluate_direct(const std::vector<Term>& terms, double theta) {
    const double s = std::sin(theta);
    double sum = 0.0;
    for (const auto& t : terms) {
        const double trig = t.is_sin ? std::sin(t.alpha * theta) : std::cos(t.alpha * theta);
        sum += t.c * trig / std::pow(s, t.p);
    }
    return sum;
}

double evaluate(const std::vector<Term>& terms, double theta) {
    double alpha_max = 1.0;
    for (const auto& t : terms) alpha_max = std::max(alpha_max, t.alpha);
    if (theta * alpha_max < 1.0) return evaluate_series(terms, theta);
    return evaluate_direct(terms, theta);
}

void require(int n, double rho) {
    if (n < 2) throw DomainError("Gegenbauer index needs n >= 2");
    if (!(rho > 0.0) || !std::isfinite(rho)) throw DomainError("Gegenbauer order needs finite rho > 0");
}

} // namespace

double gegenbauer_c1(double nu, double theta) {
    if (!(theta >= 0.0 && theta < kPi)) throw DomainError("theta must lie in [0, pi)");
    if (theta == 0.0) return 1.0;
    const std::vector<Term> u{{1.0 / (nu + 1.0), true, nu + 1.0, 1}};
    return evaluate(u, theta);
}

double gegenbauer_at_one(int n, double rho, Normalization mode) {
    require(n, rho);
    if (mode == Normalization::solution) return 1.0;
    const double g = n - 1;
    return std::exp(std::lgamma(rho + 2 * g) - std::lgamma(2 * g) - std::lgamma(rho + 1));
}

double gegenbauer(int n, double rho, double theta, Normalization mode) {
    require(n, rho);
    if (!(theta >= 0.0 && theta < kPi)) throw DomainError("theta must lie in [0, pi)");
    if (theta == 0.0) return gegenbauer_at_one(n, rho, mode);
    const double v = evaluate(gegenbauer_terms(n, rho), theta);
    return mode == Normalization::ode ? v : v / gegenbauer_at_one(n, rho, Normalization::ode);
}

double theta_star(int n, double rho) {
    require(n, rho);
    const auto terms = gegenbauer_terms(n, rho);
    const double step = kPi / (8.0 * (rho + 2.0 * n));
    double lo = 0.0;
    for (double hi = step; hi < kPi; lo = hi, hi += step) {
        if (evaluate(terms, hi) > 0.0) continue;
        double a = lo, b = hi;
        while (true) {
            const double mid = 0.5 * (a + b);
            if (!(mid > a && mid < b)) break;
            if (evaluate(terms, mid) > 0.0)
                a = mid;
            else
                b = mid;
        }
        return 0.5 * (a + b);
    }
    throw DomainError("no zero of the Gegenbauer function in (0, pi) for n = " + std::to_string(n) +
                      ", rho = " + std::to_string(rho));
}

double sphere_area(int k) {
    if (k < 1) throw DomainError("sphere dimension must be >= 1");
    const double h = 0.5 * (k + 1);
    return 2.0 * std::pow(kPi, h) / std::tgamma(h);
}

double vartheta_u(int n, double rho, Normalization mode, double rel_tol) {
    require(n, rho);
    if (!(rho > 1.0)) throw DomainError("the Dahlberg comparison needs rho > 1");
    const auto terms = gegenbauer_terms(n, rho);
    const double scale = mode == Normalization::ode ? 1.0 : 1.0 / gegenbauer_at_one(n, rho, Normalization::ode);
    const double ts = theta_star(n, rho);
    quad::IntegrationSpec spec;
    spec.integrand = [&](double t) { return scale * evaluate(terms, t) * std::pow(std::sin(t), 2 * n - 2); };
    spec.lower = 0.0;
    spec.upper = ts;
    spec.rel_tol = rel_tol;
    const double integral = quad::integrate(spec).value;
    return gegenbauer_at_one(n, rho, mode) * sphere_area(2 * n - 1) / sphere_area(2 * n - 2) / integral;
}

double vartheta_closed_n2(double rho) {
    if (!(rho > 1.0)) throw DomainError("the Dahlberg comparison needs rho > 1");
    return p_n(2, rho) / std::sin(kPi / (rho + 1.0));
}

double vartheta_closed_n2_mixed(double rho) { return (rho + 1.0) * vartheta_closed_n2(rho); }

double m_rho(double rho, double theta) {
    return (rho + 3) * (rho + 4) * std::sin(rho * theta) - 2 * rho * (rho + 4) * std::sin((rho + 2) * theta) +
           rho * (rho + 1) * std::sin((rho + 4) * theta);
}

double vartheta_closed_n3(double rho, double coefficient) {
    if (!(rho > 1.0)) throw DomainError("the Dahlberg comparison needs rho > 1");
    return coefficient * p_n(3, rho) * (rho + 1) * (rho + 3) / m_rho(rho, theta_star(3, rho));
}

RationalFit fit_n3_coefficient(double rho, long max_denominator) {
    if (max_denominator < 1) throw DomainError("denominator bound must be positive");
    RationalFit fit;
    fit.raw = vartheta_u(3, rho) / vartheta_closed_n3(rho, 1.0);
    fit.residual = std::numeric_limits<double>::infinity();
    for (long q = 1; q <= max_denominator; ++q) {
        const long p = std::lround(fit.raw * static_cast<double>(q));
        const double r = std::abs(fit.raw - static_cast<double>(p) / static_cast<double>(q)) / std::abs(fit.raw);
        if (r < fit.residual * (1.0 - 1e-6)) {
            fit.numerator = p;
            fit.denominator = q;
            fit.residual = r;
        }
    }
    return fit;
}

DahlbergReport compare(int n, double rho, const ConstantsReport& constants) {
    require(n, rho);
    if (constants.params.n != n || constants.params.rho != rho)
        throw DomainError("constants report does not match (n, rho)");
    DahlbergReport rep;
    rep.n = n;
    rep.rho = rho;
    rep.theta_star = theta_star(n, rho);
    rep.theta_star_approx = kPi / (rho + (n == 2 ? 1.0 : 2.0));
    rep.vartheta_numeric = vartheta_u(n, rho, Normalization::ode);
    rep.vartheta_solution_mode = vartheta_u(n, rho, Normalization::solution);
    if (n == 2) {
        rep.vartheta_closed_n2 = vartheta_closed_n2(rho);
        rep.vartheta_closed_n2_mixed = vartheta_closed_n2_mixed(rho);
    }
    if (n == 3) {
        rep.n3_fit = fit_n3_coefficient(rho);
        rep.vartheta_closed_n3 = vartheta_closed_n3(
            rho, static_cast<double>(rep.n3_fit->numerator) / static_cast<double>(rep.n3_fit->denominator));
        rep.vartheta_closed_n3_coef3 = vartheta_closed_n3(rho, 3.0);
    }
    rep.e_pow_p = std::exp(static_cast<double>(n - 1)) * p_n(n, rho);
    rep.k_n = constants.k_n;
    rep.exceeds_e_pow_p = rep.vartheta_numeric > rep.e_pow_p;
    rep.dominates_k_n = rep.vartheta_numeric >= rep.k_n;
    return rep;
}

DahlbergReport compare(int n, double rho) { return compare(n, rho, compute_constants({n, rho})); }

} // namespace khabi
