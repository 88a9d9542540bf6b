#pragma once

#include "khabi/jet.hpp"
#include "khabi/params.hpp"
#include "khabi/sign_analysis.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace khabi {

/// c * t^p.
struct PowerTag {
    double coefficient = 0.0;
    double exponent = 0.0;

    double operator()(double t) const { return coefficient * std::pow(t, exponent); }
};

/// A function of t > 0 sampled on a geometric grid. Functions with a closed form
/// (pure powers, or an analytic evaluator) are evaluated exactly; sampled ones are
/// interpolated linearly in log t, which preserves monotonicity.
class GridFunction {
public:
    static GridFunction power(double coefficient, double exponent, std::vector<double> grid);
    static GridFunction sampled(std::vector<double> grid, std::vector<double> values, double left_exponent);
    /// `tail`, when given, is a power that the function equals from the last grid point on.
    static GridFunction analytic(std::function<double(double)> f, std::vector<double> grid, double left_exponent,
                                 std::optional<PowerTag> tail = std::nullopt);
    static GridFunction zero(std::vector<double> grid);

    double operator()(double t) const;

    const std::vector<double>& grid() const noexcept { return grid_; }
    const std::vector<double>& values() const noexcept { return values_; }
    /// Behaviour t^p near 0.
    double left_exponent() const noexcept { return left_exponent_; }
    const std::optional<PowerTag>& power_tag() const noexcept { return power_; }
    const std::optional<PowerTag>& tail() const noexcept { return tail_; }
    bool is_zero() const noexcept { return zero_; }
    bool is_sampled() const noexcept { return !power_ && !exact_ && !zero_; }

    /// Points where the function is known to be less smooth; used by quadrature.
    const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
    GridFunction& with_breakpoints(std::vector<double> points);

private:
    std::vector<double> grid_;
    std::vector<double> values_;
    double left_exponent_ = 0.0;
    std::optional<PowerTag> power_;
    std::optional<PowerTag> tail_;
    std::vector<double> breakpoints_;
    std::function<double(double)> exact_;
    bool zero_ = false;
};

/// `points` geometrically spaced values from lo to hi inclusive.
std::vector<double> geometric_grid(double lo, double hi, int points);

/// Q^m[f](t) = (1/(m-1)!) int_0^t (t-x)^{m-1} f(x) dx.
double q_power_at(const GridFunction& f, int m, double t, double rel_tol = 1e-10);

/// Q^m[f] on the grid of f; exact for pure powers.
GridFunction q_power(const GridFunction& f, int m, double rel_tol = 1e-10);

struct CheckOptions {
    int growth_points = 64;
    double monotone_tol = 1e-10;
    double growth_tol = 1e-9;
};

/// Admissibility of s for the class of nonnegative nondecreasing functions with
/// Q^n[s(x)/x](t) <= t^{rho/2+n-1}/(n-1)!.
struct Admissibility {
    bool nonnegative = true;
    bool nondecreasing = true;
    bool growth = true;
    double min_value = 0.0;
    /// Smallest step s(t_{i+1}) - s(t_i) on the grid.
    double min_step = 0.0;
    /// min over the test points of 1 - Q^n[s/x](t) / (t^{rho/2+n-1}/(n-1)!); 1 for s = 0.
    double growth_margin = 1.0;
    double worst_t = 0.0;

    bool admissible() const noexcept { return nonnegative && nondecreasing && growth; }
};

Admissibility check_inc_rho(const GridFunction& s, const ProblemParams& params, const CheckOptions& options = {});

/// J(s) = int_0^inf s(t)/t / (1 + t^rho) dt.
double j_functional(const GridFunction& s, const ProblemParams& params, double rel_tol = 1e-10);

/// Coefficient of s_0(t) = c t^{rho/2}: (rho/2) prod_{k<n} (1 + rho/2k).
double s0_coefficient(const ProblemParams& params);

/// s_0 and f_0(t) = t^{rho/2+n-1}/(n-1)! as closed-form grid functions.
GridFunction s0(const ProblemParams& params, std::vector<double> grid);
GridFunction f0(const ProblemParams& params, std::vector<double> grid);

/// Sum over i in I of the cosine bumps supported on (tau_{i-1}, tau_i].
double eta(const SignPattern& pattern, int n, double t);
Jet eta_jet(const SignPattern& pattern, int n, double t, int order);

/// eps * int_{D_-} f(t) eta(t) (-psi(t)) dt with f = Q^n[s(x)/x].
double perturbation_gain(const GridFunction& s, const ProblemParams& params, double eps, double rel_tol = 1e-10);

/// s_k = t (Q^{-1})^n [f_k], f_k = prod_{i<=k} (1 - eps_i eta) f_0, evaluated by
/// Leibniz differentiation of the product.
class MaximizingSequence {
public:
    MaximizingSequence(const ProblemParams& params, SignPattern pattern, std::vector<double> epsilons);

    int size() const noexcept { return static_cast<int>(epsilons_.size()); }
    const SignPattern& pattern() const noexcept { return pattern_; }
    const std::vector<double>& epsilons() const noexcept { return epsilons_; }

    Jet g_jet(int k, double t, int order) const;
    double f(int k, double t) const;
    double s(int k, double t) const;
    /// s_k as an analytic grid function; it coincides with s_0 beyond sup D_-.
    GridFunction member(int k, std::vector<double> grid) const;

private:
    ProblemParams params_;
    SignPattern pattern_;
    std::vector<double> epsilons_;
};

struct EpsilonSchedule {
    double alpha = 0.5;
    /// The alpha in force after restarts.
    double alpha_used = 0.5;
    std::vector<double> epsilons;
    std::vector<int> halvings;
    int restarts = 0;
};

struct IterationRecord {
    int k = 0;
    double epsilon = 0.0;
    double j_value = 0.0;
    /// (J(rho) - J(s_k)) / J(rho).
    double gap = 0.0;
    double growth_margin = 0.0;
    double min_slope = 0.0;
    int halvings = 0;
};

struct MaximizeOptions {
    double alpha = 0.5;
    int max_halvings = 40;
    int max_restarts = 6;
    int grid_points = 512;
    CheckOptions check{};
};

struct MaximizeResult {
    ProblemParams params;
    SignPattern pattern;
    std::vector<double> grid;
    double j_sup = 0.0;
    std::vector<IterationRecord> iterations;
    EpsilonSchedule schedule;

    MaximizingSequence sequence() const { return {params, pattern, schedule.epsilons}; }
};

/// Builds s_0..s_K. Throws DomainError if D_- is empty and NonConvergence if no
/// admissible step exists after all restarts.
MaximizeResult maximize(const ProblemParams& params, int iterations, const MaximizeOptions& options = {});

} // namespace khabi
