#include "khabi/deriv_core.hpp"

#include "khabi/error.hpp"

#include <cmath>
#include <string>

namespace khabi {
namespace {

using RhoPoly = std::vector<std::int64_t>;

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    std::int64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r)) throw DomainError("exact coefficient overflow");
    return r;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
    std::int64_t r = 0;
    if (__builtin_add_overflow(a, b, &r)) throw DomainError("exact coefficient overflow");
    return r;
}

// out += (alpha * rho + beta) * p
void axpy_linear(RhoPoly& out, std::int64_t alpha, std::int64_t beta, const RhoPoly& p) {
    if (out.size() < p.size() + 1) out.resize(p.size() + 1, 0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        out[i + 1] = checked_add(out[i + 1], checked_mul(alpha, p[i]));
        out[i] = checked_add(out[i], checked_mul(beta, p[i]));
    }
}

} // namespace

ExactCoefficients::ExactCoefficients(int n) {
    if (n < 0) throw DomainError("order must be nonnegative");
    table_.resize(static_cast<std::size_t>(n) + 1);
    table_[0] = {RhoPoly{1}};
    for (int k = 0; k < n; ++k) {
        const auto& cur = table_[static_cast<std::size_t>(k)];
        auto& next = table_[static_cast<std::size_t>(k) + 1];
        next.assign(cur.size() + 1, RhoPoly{});
        // new c_m = (rho m - k) c_m + (rho (m-k-2) - k) c_{m-1}
        for (std::size_t m = 0; m < next.size(); ++m) {
            const auto mi = static_cast<std::int64_t>(m);
            if (m < cur.size()) axpy_linear(next[m], mi, -k, cur[m]);
            if (m >= 1) axpy_linear(next[m], mi - k - 2, -k, cur[m - 1]);
        }
    }
}

std::int64_t ExactCoefficients::coefficient(int k, int j, int p) const {
    if (k < 0 || k > order()) throw DomainError("derivative order out of range");
    const auto& row = table_[static_cast<std::size_t>(k)];
    if (j < 0 || static_cast<std::size_t>(j) >= row.size()) return 0;
    const auto& poly = row[static_cast<std::size_t>(j)];
    if (p < 0 || static_cast<std::size_t>(p) >= poly.size()) return 0;
    return poly[static_cast<std::size_t>(p)];
}

long double ExactCoefficients::evaluate(int k, int j, long double rho) const {
    if (k < 0 || k > order()) throw DomainError("derivative order out of range");
    const auto& row = table_[static_cast<std::size_t>(k)];
    if (j < 0 || static_cast<std::size_t>(j) >= row.size()) return 0.0L;
    const auto& poly = row[static_cast<std::size_t>(j)];
    long double acc = 0.0L;
    for (auto it = poly.rbegin(); it != poly.rend(); ++it) acc = acc * rho + static_cast<long double>(*it);
    return acc;
}

DerivativeStack DerivativeStack::build(const ProblemParams& params, CoefficientMode mode) {
    params.validate();
    DerivativeStack s;
    s.params_ = params;
    const int n = params.n;
    const long double rho = params.rho;

    std::vector<std::vector<long double>> coeffs(static_cast<std::size_t>(n) + 1);
    if (mode == CoefficientMode::exact) {
        const ExactCoefficients exact(n);
        for (int k = 0; k <= n; ++k) {
            auto& c = coeffs[static_cast<std::size_t>(k)];
            c.resize(static_cast<std::size_t>(k) + 1);
            for (int j = 0; j <= k; ++j) c[static_cast<std::size_t>(j)] = exact.evaluate(k, j, rho);
        }
    } else {
        coeffs[0] = {1.0L};
        for (int k = 0; k < n; ++k) {
            const auto& cur = coeffs[static_cast<std::size_t>(k)];
            auto& next = coeffs[static_cast<std::size_t>(k) + 1];
            next.assign(cur.size() + 1, 0.0L);
            for (std::size_t m = 0; m < next.size(); ++m) {
                const long double mm = static_cast<long double>(m);
                if (m < cur.size()) next[m] += (rho * mm - k) * cur[m];
                if (m >= 1) next[m] += (rho * (mm - k - 2) - k) * cur[m - 1];
            }
        }
    }

    for (auto& c : coeffs) {
        s.q_ext_.emplace_back(c);
        s.q_.push_back(s.q_ext_.back().cast<double>());
    }
    return s;
}

const Polynomial& DerivativeStack::q(int k) const {
    if (k < 0 || k > params_.n) throw DomainError("derivative order out of range");
    return q_[static_cast<std::size_t>(k)];
}

const BasicPolynomial<long double>& DerivativeStack::q_extended(int k) const {
    if (k < 0 || k > params_.n) throw DomainError("derivative order out of range");
    return q_ext_[static_cast<std::size_t>(k)];
}

template <>
const BasicPolynomial<double>& DerivativeStack::coefficients<double>(int k) const {
    return q_[static_cast<std::size_t>(k)];
}

template <>
const BasicPolynomial<long double>& DerivativeStack::coefficients<long double>(int k) const {
    return q_ext_[static_cast<std::size_t>(k)];
}

double DerivativeStack::phi(double t) const {
    if (t < 0.0) throw DomainError("phi is defined for t >= 0");
    return 1.0 / (1.0 + std::pow(t, params_.rho));
}

int DerivativeStack::lowest_power(int k) const {
    const auto& c = q(k);
    for (int j = 0; j <= c.degree(); ++j)
        if (c[static_cast<std::size_t>(j)] != 0.0) return j;
    return -1;
}

template <std::floating_point Real>
Real DerivativeStack::phi_deriv(int k, Real t) const {
    if (k < 0 || k > params_.n) throw DomainError("derivative order out of range");
    if (!(t >= Real(0))) throw DomainError("phi derivatives are defined for t >= 0");
    using Eval = std::conditional_t<std::is_same_v<Real, long double>, long double, double>;
    const auto& c = coefficients<Eval>(k);
    const Real rho = static_cast<Real>(params_.rho);

    if (t == Real(0)) {
        if (k == 0) return Real(1);
        const int j0 = lowest_power(k);
        if (j0 < 0) return Real(0);
        const Real exponent = rho * static_cast<Real>(j0) - static_cast<Real>(k);
        if (exponent > Real(0)) return Real(0);
        if (exponent == Real(0)) return static_cast<Real>(c[static_cast<std::size_t>(j0)]);
        throw DomainError("phi^(" + std::to_string(k) + ") is singular at t = 0 for rho = " +
                          std::to_string(params_.rho));
    }

    const Real logt = std::log(t);
    const Real u = std::exp(rho * logt);
    Real body;
    if (u <= Real(1)) {
        Real acc = 0;
        for (int j = k; j >= 0; --j) acc = acc * u + static_cast<Real>(c[static_cast<std::size_t>(j)]);
        body = acc * std::pow(Real(1) / (Real(1) + u), k + 1);
    } else {
        // q(u)/(1+u)^{k+1} = v * sum_j c_j v^{k-j} / (1+v)^{k+1},  v = 1/u
        const Real v = Real(1) / u;
        Real acc = 0;
        for (int j = 0; j <= k; ++j) acc = acc * v + static_cast<Real>(c[static_cast<std::size_t>(j)]);
        body = v * acc * std::pow(Real(1) / (Real(1) + v), k + 1);
    }
    return body * std::exp(-static_cast<Real>(k) * logt);
}

template float DerivativeStack::phi_deriv<float>(int, float) const;
template double DerivativeStack::phi_deriv<double>(int, double) const;
template long double DerivativeStack::phi_deriv<long double>(int, long double) const;

} // namespace khabi
