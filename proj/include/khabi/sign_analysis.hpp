#pragma once

#include "khabi/deriv_core.hpp"

#include <limits>
#include <vector>

namespace khabi {

/// A positive zero of psi: tau = x^{1/rho} where x is a root of q_n.
struct PsiZero {
    double tau = 0.0;
    double x = 0.0;
    /// Even-multiplicity (touching) zero; psi keeps its sign across it.
    bool tangential = false;
};

struct SignInterval {
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    int sign = 0;
};

/// Zeros tau_1 < ... < tau_m of psi with the convention tau_0 = 0, the indices
/// I of the intervals (tau_{i-1}, tau_i) where psi < 0, and the set D_- as a
/// merged list of open intervals. D_+ is its complement in [0, inf).
struct SignPattern {
    std::vector<PsiZero> zeros;
    /// intervals[i-1] = (tau_{i-1}, tau_i); the last one is (tau_m, inf).
    std::vector<SignInterval> intervals;
    std::vector<int> index_set;
    std::vector<SignInterval> d_minus;

    double tau(int i) const { return i == 0 ? 0.0 : zeros.at(static_cast<std::size_t>(i - 1)).tau; }
    bool in_d_minus(double t) const;
    double d_minus_sup() const { return d_minus.empty() ? 0.0 : d_minus.back().hi; }
};

struct RootOptions {
    /// Relative width to which each root in x is bisected.
    double rel_tol = 1e-13;
    /// Refine roots with long double evaluation.
    bool extended = false;
};

/// Certified positive zeros of psi. Roots of q_n(x)/x^m on (0, B] are isolated
/// through the critical points of the polynomial (recursively) and bisected;
/// the count is checked against Descartes' rule of signs. Throws OracleFailure
/// if the census is inconsistent.
std::vector<PsiZero> positive_roots(const DerivativeStack& stack, const RootOptions& options = {});

/// Assigns signs to the intervals between zeros by evaluating psi at interior
/// points. Throws OracleFailure if the signs contradict the zero list.
SignPattern sign_pattern(const DerivativeStack& stack, const std::vector<PsiZero>& roots);

/// Number of sign variations of the coefficient sequence.
int descartes_variations(const Polynomial& p);

/// Cauchy upper bound on the moduli of the roots.
double cauchy_root_bound(const Polynomial& p);

} // namespace khabi
