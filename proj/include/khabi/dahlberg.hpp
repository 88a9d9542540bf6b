#pragma once

#include "khabi/constants.hpp"

#include <optional>

namespace khabi {

/// ode: the value at x = 1 is Gamma(rho+2g)/(Gamma(2g)Gamma(rho+1)).
/// solution: the value at x = 1 is 1.
enum class Normalization { ode, solution };

/// sin((nu+1) theta) / ((nu+1) sin theta); equals 1 at theta = 0.
double gegenbauer_c1(double nu, double theta);

/// C^{n-1}_rho(1) in the given normalization.
double gegenbauer_at_one(int n, double rho, Normalization mode = Normalization::ode);

/// C^{n-1}_rho(cos theta) for theta in [0, pi), from
/// C^{n-1}_rho(x) = d^{n-2}/dx^{n-2} U_{rho+n-2}(x) / (2^{n-2} (n-2)!), U_nu(cos theta) = sin((nu+1)theta)/sin theta.
/// The derivative is taken symbolically as a sum of trig(a theta)/sin^p theta terms; small angles use a series.
double gegenbauer(int n, double rho, double theta, Normalization mode = Normalization::ode);

/// Smallest theta in (0, pi) with C^{n-1}_rho(cos theta) = 0.
double theta_star(int n, double rho);

/// Area of the unit sphere S_k in R^{k+1}.
double sphere_area(int k);

/// theta(u_rho) = C(1) A(S_{2n-1}) / A(S_{2n-2}) / int_0^{theta*} C(cos t) sin^{2n-2} t dt.
double vartheta_u(int n, double rho, Normalization mode = Normalization::ode, double rel_tol = 1e-13);

/// n = 2 closed form P_2(rho) / sin(pi/(rho+1)).
double vartheta_closed_n2(double rho);
/// The n = 2 value with C(1) = rho + 1 taken against the unit-normalized integrand: (rho+1) times the above.
double vartheta_closed_n2_mixed(double rho);

/// (rho+3)(rho+4) sin(rho t) - 2 rho (rho+4) sin((rho+2) t) + rho (rho+1) sin((rho+4) t).
double m_rho(double rho, double theta);
/// coefficient * P_3(rho) (rho+1)(rho+3) / m(rho, theta*), theta* computed numerically.
double vartheta_closed_n3(double rho, double coefficient);

struct RationalFit {
    long numerator = 0;
    long denominator = 1;
    double raw = 0.0;
    /// |raw - numerator/denominator| / |raw|.
    double residual = 0.0;
};

/// Best rational c = p/q (q <= max_denominator) with vartheta_u(3, rho) = c P_3 (rho+1)(rho+3)/m.
RationalFit fit_n3_coefficient(double rho, long max_denominator = 12);

struct DahlbergReport {
    int n = 2;
    double rho = 0.0;
    double theta_star = 0.0;
    /// pi/(rho+1) for n = 2, pi/(rho+2) otherwise.
    double theta_star_approx = 0.0;
    double vartheta_numeric = 0.0;
    /// The same ratio with the solution normalization; should match vartheta_numeric.
    double vartheta_solution_mode = 0.0;
    std::optional<double> vartheta_closed_n2;
    std::optional<double> vartheta_closed_n2_mixed;
    std::optional<double> vartheta_closed_n3;
    std::optional<double> vartheta_closed_n3_coef3;
    std::optional<RationalFit> n3_fit;
    double e_pow_p = 0.0;
    double k_n = 0.0;
    bool exceeds_e_pow_p = false;
    bool dominates_k_n = false;
};

DahlbergReport compare(int n, double rho, const ConstantsReport& constants);
DahlbergReport compare(int n, double rho);

} // namespace khabi
