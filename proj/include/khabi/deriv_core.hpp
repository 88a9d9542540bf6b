#pragma once

#include "khabi/params.hpp"
#include "khabi/polynomial.hpp"

#include <concepts>
#include <cstdint>
#include <vector>

namespace khabi {

/// Integer coefficient table of q_k(u) as polynomials in rho:
/// q_k(u) = sum_j (sum_p c[k][j][p] rho^p) u^j.
class ExactCoefficients {
public:
    /// Runs the recurrence symbolically in rho up to order n. Throws DomainError
    /// if a coefficient would overflow 64 bits.
    explicit ExactCoefficients(int n);

    int order() const noexcept { return static_cast<int>(table_.size()) - 1; }
    std::int64_t coefficient(int k, int j, int p) const;
    /// Coefficient of u^j in q_k evaluated at the given rho.
    long double evaluate(int k, int j, long double rho) const;

private:
    // table_[k][j][p]
    std::vector<std::vector<std::vector<std::int64_t>>> table_;
};

enum class CoefficientMode { floating, exact };

/// Numerators q_0..q_n of the derivatives of phi(t) = 1/(1+t^rho):
///   phi^{(k)}(t) = q_k(t^rho) / (t^k (1+t^rho)^{k+1}),
///   q_{k+1}(u) = rho u (1+u) q_k'(u) - k (1+u) q_k(u) - (k+1) rho u q_k(u),  q_0 = 1.
class DerivativeStack {
public:
    static DerivativeStack build(const ProblemParams& params,
                                 CoefficientMode mode = CoefficientMode::floating);

    const ProblemParams& params() const noexcept { return params_; }
    int order() const noexcept { return params_.n; }
    double rho() const noexcept { return params_.rho; }

    const Polynomial& q(int k) const;
    const BasicPolynomial<long double>& q_extended(int k) const;

    double phi(double t) const;

    /// k-th derivative of phi at t >= 0. At t = 0 the one-sided limit is returned
    /// when finite; a non-removable singularity throws DomainError.
    template <std::floating_point Real>
    Real phi_deriv(int k, Real t) const;

    /// (-1)^n phi^{(n)}(t).
    template <std::floating_point Real>
    Real psi(Real t) const {
        const Real d = phi_deriv<Real>(params_.n, t);
        return (params_.n % 2 == 0) ? d : -d;
    }

    /// Index of the lowest nonzero coefficient of q_k (k >= 1); the small-t
    /// behaviour of phi^{(k)} is t^{rho*j0 - k}.
    int lowest_power(int k) const;

private:
    DerivativeStack() = default;

    template <class Real>
    const BasicPolynomial<Real>& coefficients(int k) const;

    ProblemParams params_{};
    std::vector<Polynomial> q_;
    std::vector<BasicPolynomial<long double>> q_ext_;
};

extern template float DerivativeStack::phi_deriv<float>(int, float) const;
extern template double DerivativeStack::phi_deriv<double>(int, double) const;
extern template long double DerivativeStack::phi_deriv<long double>(int, long double) const;

} // namespace khabi
