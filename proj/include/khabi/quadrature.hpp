#pragma once

#include <functional>
#include <optional>
#include <vector>

namespace khabi::quad {

/// One-dimensional integral of `integrand` over (lower, upper); `upper` may be +inf.
struct IntegrationSpec {
    std::function<double(double)> integrand;
    double lower = 0.0;
    double upper = 1.0;
    /// Integrand behaves like (x - lower)^beta near the lower limit, beta > -1.
    std::optional<double> left_exponent;
    /// Integrand decays like x^{-1-delta} at infinity, delta > 0.
    std::optional<double> tail_decay;
    /// Interior points where the integrand is not smooth, strictly increasing.
    std::vector<double> breakpoints;
    double rel_tol = 1e-10;
    double abs_tol = 0.0;
    int max_subdivisions = 4000;

    void validate() const;
};

struct IntegrationResult {
    double value = 0.0;
    double error = 0.0;
    int evaluations = 0;
    int subdivisions = 0;
};

/// Global adaptive Gauss-Kronrod (7/15) integration. Endpoint hints are consumed
/// through power substitutions that remove the leading singular behaviour.
/// Throws NonConvergence (carrying the partial value) when the subdivision
/// budget runs out.
IntegrationResult integrate(const IntegrationSpec& spec);

/// Rewrites an integral over [lower, inf) with lower > 0 as one over (0, 1]
/// through x = lower * w^{-1/delta}. The decay exponent is taken from the hint
/// or estimated by sampling; a non-decaying integrand throws DomainError.
IntegrationSpec map_to_finite(const IntegrationSpec& spec);

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

const GaussRule& gauss_legendre(int points);

} // namespace khabi::quad
