#include "khabi/constants.hpp"

#include "khabi/error.hpp"
#include "khabi/quadrature.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace khabi {
namespace {

constexpr double kZeroExponent = 1e-13;

// Limit at t = 0 of t^p * phi^{(d)}(t).
template <class Real>
Real limit_at_zero(const DerivativeStack& stack, Real p, int d) {
    Real exponent = p;
    Real value = 1;
    if (d > 0) {
        const int j0 = stack.lowest_power(d);
        exponent = p + static_cast<Real>(stack.rho()) * j0 - d;
        value = static_cast<Real>(stack.q_extended(d)[static_cast<std::size_t>(j0)]);
    }
    if (exponent > Real(kZeroExponent)) return 0;
    if (exponent >= Real(-kZeroExponent)) return value;
    throw DomainError("antiderivative term is singular at t = 0");
}

template <class Real>
Real phi_cap_impl(const DerivativeStack& stack, int k, Real t, PhiForm form) {
    const int n = stack.order();
    if (k < 0 || k > n) throw DomainError("antiderivative index out of range");
    if (!(t >= Real(0))) throw DomainError("antiderivative is defined for t >= 0");
    const Real rho = static_cast<Real>(stack.rho());
    const Real a = rho / 2;
    const Real lg = std::lgamma(a + n) - std::lgamma(static_cast<Real>(n));

    if (k == n) {
        const Real scale = std::exp(lg - std::lgamma(a + 1));
        const Real arg = form == PhiForm::integrated ? std::pow(t, a) : std::pow(t, rho);
        return scale * std::atan(arg);
    }
    const int d = form == PhiForm::integrated ? n - k - 1 : n - k;
    const Real sign = (n + k) % 2 == 0 ? Real(1) : Real(-1);
    const Real scale = sign * std::exp(lg - std::lgamma(a + n - k));
    const Real p = a + n - k - 1;
    if (t == Real(0)) return scale * limit_at_zero<Real>(stack, p, d);
    return scale * std::pow(t, p) * stack.phi_deriv<Real>(d, t);
}

template <class Real>
Real phi_cap_sum_impl(const DerivativeStack& stack, Real t, PhiForm form) {
    Real sum = 0;
    for (int k = 0; k <= stack.order(); ++k) sum += phi_cap_impl<Real>(stack, k, t, form);
    return sum;
}

double factorial(int m) { return std::tgamma(m + 1.0); }

double weighted_psi(const DerivativeStack& stack, double t) {
    const int n = stack.order();
    if (t == 0.0) return 0.0;
    return std::pow(t, stack.params().half_rho() + n - 1) * stack.psi<double>(t) / factorial(n - 1);
}

double weighted_psi_left_exponent(const DerivativeStack& stack) {
    const int n = stack.order();
    return stack.params().half_rho() + stack.rho() * stack.lowest_power(n) - 1.0;
}

double integrate_piece(const DerivativeStack& stack, double lo, double hi, double rel_tol) {
    quad::IntegrationSpec spec;
    spec.integrand = [&stack](double t) { return weighted_psi(stack, t); };
    spec.lower = lo;
    spec.upper = hi;
    spec.rel_tol = rel_tol;
    if (lo == 0.0) spec.left_exponent = weighted_psi_left_exponent(stack);
    if (std::isinf(hi)) spec.tail_decay = stack.params().half_rho();
    return quad::integrate(spec).value;
}

OracleResidual residual(std::string name, double value, double tolerance) {
    return OracleResidual{std::move(name), value, tolerance, std::isfinite(value) && value <= tolerance};
}

} // namespace

double p_n(int n, double rho) {
    if (n < 1) throw DomainError("P_n needs n >= 1");
    if (!(rho > 0.0) || !std::isfinite(rho)) throw DomainError("P_n needs finite rho > 0");
    double prod = 1.0;
    for (int k = 1; k < n; ++k) prod *= 1.0 + rho / (2.0 * k);
    const double pi = std::numbers::pi;
    if (rho <= 0.5) return pi * rho / std::sin(pi * rho) * prod;
    return pi * rho * prod;
}

double p_n_zero_limit(int n) {
    if (n < 1) throw DomainError("P_n needs n >= 1");
    return 1.0;
}

double phi_cap(const DerivativeStack& stack, int k, double t, PhiForm form) {
    return phi_cap_impl<double>(stack, k, t, form);
}

long double phi_cap_extended(const DerivativeStack& stack, int k, long double t, PhiForm form) {
    return phi_cap_impl<long double>(stack, k, t, form);
}

double phi_cap_sum(const DerivativeStack& stack, double t, PhiForm form) {
    return phi_cap_sum_impl<double>(stack, t, form);
}

double antiderivative_residual_at(const DerivativeStack& stack, double t, PhiForm form) {
    if (!(t > 0.0)) throw DomainError("antiderivative residual needs t > 0");
    using Ext = long double;
    auto central = [&](Ext h) {
        return (phi_cap_sum_impl<Ext>(stack, t + h, form) - phi_cap_sum_impl<Ext>(stack, t - h, form)) / (2 * h);
    };
    const Ext h = Ext(1e-2) * t;
    const Ext d1 = central(h), d2 = central(h / 2), d3 = central(h / 4);
    const Ext r1 = (4 * d2 - d1) / 3;
    const Ext r2 = (4 * d3 - d2) / 3;
    const double derivative = static_cast<double>((16 * r2 - r1) / 15);
    const double expected = weighted_psi(stack, t);
    const double scale = std::max(std::abs(expected), std::numeric_limits<double>::min());
    return std::abs(derivative - expected) / scale;
}

AntiderivativeReport antiderivative_check(const DerivativeStack& stack, const SignPattern& pattern, PhiForm form) {
    double lo = 0.1, hi = 10.0;
    if (!pattern.zeros.empty()) {
        lo = pattern.zeros.front().tau / 4.0;
        hi = pattern.zeros.back().tau * 4.0;
    }
    constexpr int kSamples = 40;
    AntiderivativeReport report;
    for (int i = 0; i < kSamples; ++i) {
        const double t = lo * std::pow(hi / lo, static_cast<double>(i) / (kSamples - 1));
        bool near_zero = false;
        for (const auto& z : pattern.zeros) near_zero = near_zero || std::abs(t - z.tau) < 0.03 * z.tau;
        if (near_zero) continue;
        const double r = antiderivative_residual_at(stack, t, form);
        ++report.samples;
        if (!(r <= report.max_rel_residual)) {
            report.max_rel_residual = r;
            report.worst_t = t;
        }
    }
    return report;
}

double deficiency(const DerivativeStack& stack, const SignPattern& pattern, bool extended) {
    if (extended) {
        long double sum = 0;
        for (int i : pattern.index_set) {
            sum += phi_cap_sum_impl<long double>(stack, pattern.tau(i - 1), PhiForm::integrated) -
                   phi_cap_sum_impl<long double>(stack, pattern.tau(i), PhiForm::integrated);
        }
        return static_cast<double>(sum);
    }
    double sum = 0.0;
    for (int i : pattern.index_set) {
        sum += phi_cap_sum(stack, pattern.tau(i - 1)) - phi_cap_sum(stack, pattern.tau(i));
    }
    return sum;
}

double oracle_dminus_integral(const DerivativeStack& stack, const SignPattern& pattern, double rel_tol) {
    double sum = 0.0;
    for (const auto& piece : pattern.d_minus) sum += integrate_piece(stack, piece.lo, piece.hi, rel_tol);
    return sum;
}

double oracle_full_integral(const DerivativeStack& stack, double rel_tol) {
    const auto roots = positive_roots(stack);
    std::vector<double> cuts{0.0};
    for (const auto& z : roots) cuts.push_back(z.tau);
    const double last = roots.empty() ? 1.0 : 2.0 * roots.back().tau;
    cuts.push_back(last);
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) sum += integrate_piece(stack, cuts[i], cuts[i + 1], rel_tol);
    sum += integrate_piece(stack, last, std::numeric_limits<double>::infinity(), rel_tol);
    return sum;
}

double j_sup(const ProblemParams& params, const ConstantsOptions& options) {
    params.validate_pipeline();
    const auto stack = DerivativeStack::build(params);
    const auto pattern = sign_pattern(stack, positive_roots(stack, options.roots));
    return p_n(params.n, params.rho) / (2.0 * params.rho) + deficiency(stack, pattern, options.extended);
}

double k_n(const ProblemParams& params, const ConstantsOptions& options) {
    return 2.0 * params.rho * j_sup(params, options);
}

namespace {

double k2_three_terms(double rho, double arctan_term) {
    const double r = (rho - 1.0) / (rho + 1.0);
    const double a1 = rho / 2.0 + 1.0;
    return a1 * std::numbers::pi / 2.0 + (rho + 1.0) * (rho + 1.0) / (4.0 * rho) * std::pow(r, 1.5) +
           a1 * ((rho + 1.0) / (2.0 * rho) * std::sqrt(r) - arctan_term);
}

} // namespace

double k2_closed(double rho) {
    if (!(rho > 1.0) || !std::isfinite(rho)) throw DomainError("closed form needs finite rho > 1");
    return k2_three_terms(rho, std::atan(std::sqrt((rho - 1.0) / (rho + 1.0))));
}

double k2_closed_arctan_r(double rho) {
    if (!(rho > 1.0) || !std::isfinite(rho)) throw DomainError("closed form needs finite rho > 1");
    return k2_three_terms(rho, std::atan((rho - 1.0) / (rho + 1.0)));
}

double type_multiplier(const ProblemParams& params, const ConstantsOptions& options) {
    params.validate();
    if (params.rho <= 1.0) return p_n(params.n, params.rho);
    return k_n(params, options);
}

bool ConstantsReport::all_pass() const {
    if (!lower_bound_ok || !upper_bound_ok) return false;
    for (const auto& r : residuals)
        if (!r.pass) return false;
    return true;
}

ConstantsReport compute_constants(const ProblemParams& params, const ConstantsOptions& options) {
    params.validate_pipeline();
    ConstantsReport rep;
    rep.params = params;
    const auto stack = DerivativeStack::build(params);
    rep.pattern = sign_pattern(stack, positive_roots(stack, options.roots));
    rep.p_n = p_n(params.n, params.rho);
    rep.deficiency = deficiency(stack, rep.pattern, options.extended);
    rep.j_sup = rep.p_n / (2.0 * params.rho) + rep.deficiency;
    rep.k_n = 2.0 * params.rho * rep.j_sup;
    rep.k_n_without_scaling = rep.p_n + rep.deficiency;
    rep.upper_bound = 2.0 * rep.p_n;
    rep.lower_bound_ok = rep.k_n >= rep.p_n;
    rep.upper_bound_ok = rep.k_n <= rep.upper_bound;

    const double half_p = rep.p_n / (2.0 * params.rho);
    const double full = oracle_full_integral(stack, options.quad_tol);
    rep.residuals.push_back(residual("full_integral", std::abs(full - half_p) / half_p, 1e-8));

    if (!rep.pattern.d_minus.empty()) {
        const double dm = oracle_dminus_integral(stack, rep.pattern, options.quad_tol);
        const double scale = std::max(std::abs(rep.deficiency), 1e-300);
        rep.residuals.push_back(residual("dminus_integral", std::abs(dm + rep.deficiency) / scale, 1e-8));
    }
    const auto anti = antiderivative_check(stack, rep.pattern);
    rep.residuals.push_back(residual("antiderivative", anti.max_rel_residual, 1e-6));
    if (params.n == 2) {
        const double closed = k2_closed(params.rho);
        rep.residuals.push_back(residual("closed_form_n2", std::abs(rep.j_sup - closed) / closed, 1e-9));
    }
    return rep;
}

} // namespace khabi
