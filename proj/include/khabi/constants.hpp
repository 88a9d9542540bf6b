#pragma once

#include "khabi/deriv_core.hpp"
#include "khabi/params.hpp"
#include "khabi/sign_analysis.hpp"

#include <string>
#include <vector>

namespace khabi {

/// P_n(rho): pi rho / sin(pi rho) * prod_{k<n}(1 + rho/2k) for rho <= 1/2,
/// pi rho * prod_{k<n}(1 + rho/2k) for rho > 1/2.
double p_n(int n, double rho);

/// The rho -> 0 limit of the small-order branch, which equals 1 for every n.
double p_n_zero_limit(int n);

/// Which form of the antiderivative family to use.
///
/// `integrated` is the family obtained by n integrations by parts of
/// t^{rho/2+n-1} psi(t): the k-th term carries phi^{(n-k-1)} and the closing
/// term arctan(t^{rho/2}). `shifted` uses phi^{(n-k)} and arctan(t^rho);
/// it is kept only to show that it does not differentiate back to the integrand.
enum class PhiForm { integrated, shifted };

/// Phi_{rho,k}(t), k = 0..n. Phi(0) is the one-sided limit.
double phi_cap(const DerivativeStack& stack, int k, double t, PhiForm form = PhiForm::integrated);
long double phi_cap_extended(const DerivativeStack& stack, int k, long double t,
                             PhiForm form = PhiForm::integrated);

/// Sum_k Phi_{rho,k}(t); its derivative should equal t^{rho/2+n-1} psi(t) / (n-1)!.
double phi_cap_sum(const DerivativeStack& stack, double t, PhiForm form = PhiForm::integrated);

struct AntiderivativeReport {
    double max_rel_residual = 0.0;
    double worst_t = 0.0;
    int samples = 0;
};

/// Relative residual of d/dt sum_k Phi_k(t) against t^{rho/2+n-1} psi(t)/(n-1)!
/// at one point (Richardson-extrapolated central differences).
double antiderivative_residual_at(const DerivativeStack& stack, double t, PhiForm form = PhiForm::integrated);

/// The same residual over log-spaced samples covering the zeros of psi.
AntiderivativeReport antiderivative_check(const DerivativeStack& stack, const SignPattern& pattern,
                                          PhiForm form = PhiForm::integrated);

/// sum_{i in I} sum_k (Phi_k(tau_{i-1}) - Phi_k(tau_i)).
double deficiency(const DerivativeStack& stack, const SignPattern& pattern, bool extended = false);

/// (1/(n-1)!) * integral over D_- of t^{rho/2+n-1} psi(t) by adaptive quadrature.
double oracle_dminus_integral(const DerivativeStack& stack, const SignPattern& pattern, double rel_tol = 1e-10);

/// (1/(n-1)!) * integral over (0, inf) of t^{rho/2+n-1} psi(t) by adaptive quadrature.
double oracle_full_integral(const DerivativeStack& stack, double rel_tol = 1e-10);

struct ConstantsOptions {
    double quad_tol = 1e-10;
    RootOptions roots{};
    bool extended = false;
};

/// J(rho) = P_n(rho)/(2 rho) + deficiency.
double j_sup(const ProblemParams& params, const ConstantsOptions& options = {});

/// K_n(rho) = 2 rho J(rho).
double k_n(const ProblemParams& params, const ConstantsOptions& options = {});

/// Closed form of J(rho) for n = 2, obtained from the integrated antiderivative:
/// (rho/2+1) pi/2 + (rho+1)^2/(4 rho) r^{3/2} + (rho/2+1) [ (rho+1)/(2 rho) r^{1/2} - arctan r^{1/2} ],
/// r = (rho-1)/(rho+1).
double k2_closed(double rho);

/// The same three-term expression with arctan r in place of arctan r^{1/2}.
double k2_closed_arctan_r(double rho);

/// Multiplier between the types of T(r,u) and M(r,u): P_n for rho <= 1, K_n otherwise.
double type_multiplier(const ProblemParams& params, const ConstantsOptions& options = {});

struct OracleResidual {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct ConstantsReport {
    ProblemParams params;
    SignPattern pattern;
    double p_n = 0.0;
    double deficiency = 0.0;
    double j_sup = 0.0;
    double k_n = 0.0;
    /// P_n + deficiency, the form without the 2 rho factor on the sum.
    double k_n_without_scaling = 0.0;
    double upper_bound = 0.0;
    bool lower_bound_ok = false;
    bool upper_bound_ok = false;
    std::vector<OracleResidual> residuals;

    bool all_pass() const;
};

/// Assembles every constant together with its oracle residuals.
ConstantsReport compute_constants(const ProblemParams& params, const ConstantsOptions& options = {});

} // namespace khabi
