#include "khabi/functional.hpp"

#include "khabi/constants.hpp"
#include "khabi/deriv_core.hpp"
#include "khabi/error.hpp"
#include "khabi/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace khabi {
namespace {

double factorial(int m) { return std::tgamma(m + 1.0); }

struct NodeSet {
    std::vector<double> x;
    std::vector<double> w;
};

void append_panel(NodeSet& set, double lo, double hi, int points) {
    const auto& rule = quad::gauss_legendre(points);
    const double h = 0.5 * (hi - lo), m = 0.5 * (hi + lo);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        set.x.push_back(m + h * rule.nodes[i]);
        set.w.push_back(h * rule.weights[i]);
    }
}

// Nodes on (0, hi] for an integrand behaving like x^beta: x = hi * v^{1/(beta+1)}.
void append_power_panel(NodeSet& set, double hi, double beta, int points) {
    const auto& rule = quad::gauss_legendre(points);
    const double q = 1.0 / (beta + 1.0);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double v = 0.5 * (1.0 + rule.nodes[i]);
        set.x.push_back(hi * std::pow(v, q));
        set.w.push_back(0.5 * rule.weights[i] * hi * q * std::pow(v, q - 1.0));
    }
}

// Nodes on (0, h] for int_0^h (t-x)^{m-1}/(m-1)! F(x) dx with F ~ x^beta. The kernel
// is expanded in powers x^j, each integrated with its own power substitution, so
// the weights depend on t only through kernel_weights().
struct MomentPanel {
    std::vector<double> x;
    std::vector<double> w;
    std::vector<int> power;

    MomentPanel(double h, double beta, int m, int points) {
        for (int j = 0; j < m; ++j) {
            NodeSet set;
            append_power_panel(set, h, beta + j, points);
            for (std::size_t i = 0; i < set.x.size(); ++i) {
                x.push_back(set.x[i]);
                w.push_back(set.w[i] * std::pow(set.x[i], j));
                power.push_back(j);
            }
        }
    }

    std::vector<double> kernel_weights(double t, int m) const {
        std::vector<double> coef(static_cast<std::size_t>(m));
        double binom = 1.0;
        for (int j = 0; j < m; ++j) {
            coef[static_cast<std::size_t>(j)] = binom * std::pow(t, m - 1 - j) * (j % 2 ? -1.0 : 1.0);
            binom *= static_cast<double>(m - 1 - j) / (j + 1);
        }
        const double inv_fact = 1.0 / std::tgamma(m);
        std::vector<double> out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            out[i] = w[i] * coef[static_cast<std::size_t>(power[i])] * inv_fact;
        return out;
    }
};

void require_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw DomainError("grid must not be empty");
    if (!(grid.front() > 0.0)) throw DomainError("grid must be positive");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw DomainError("grid must be strictly increasing");
}

Jet f0_jet(int n, double a, double t, int order) {
    Jet j = power_jet(a + n - 1, t, order);
    j *= 1.0 / factorial(n - 1);
    return j;
}

// Q^n[s(x)/x](t) at a subset of the grid points, as fixed weighted sums over
// panel Gauss nodes; the first panel (0, grid[0]] uses a power substitution.
class GrowthChecker {
public:
    GrowthChecker(const std::vector<double>& grid, int n, double a, double left_exponent, int targets)
        : n_(n), a_(a) {
        constexpr int kPanelPoints = 8;
        constexpr int kFirstPoints = 16;
        const MomentPanel first(grid.front(), left_exponent - 1.0, n, kFirstPoints);
        const std::size_t head = first.x.size();
        NodeSet set;
        set.x = first.x;
        set.w.assign(head, 0.0);
        std::vector<std::size_t> panel_end{set.x.size()};
        for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
            append_panel(set, grid[i], grid[i + 1], kPanelPoints);
            panel_end.push_back(set.x.size());
        }
        nodes_ = std::move(set.x);

        const int count = std::min<int>(targets, static_cast<int>(grid.size()));
        const double inv_fact = 1.0 / factorial(n - 1);
        for (int j = 0; j < count; ++j) {
            const std::size_t idx =
                count == 1 ? grid.size() - 1
                           : static_cast<std::size_t>(std::llround(static_cast<double>(j + 1) * (grid.size() - 1) / count));
            const double t = grid[idx];
            std::vector<double> w(panel_end[idx]);
            const auto head_w = first.kernel_weights(t, n);
            for (std::size_t m = 0; m < head; ++m) w[m] = head_w[m] / nodes_[m];
            for (std::size_t m = head; m < w.size(); ++m)
                w[m] = set.w[m] * std::pow(t - nodes_[m], n - 1) * inv_fact / nodes_[m];
            targets_.push_back(t);
            bound_.push_back(std::pow(t, a + n - 1) * inv_fact);
            weights_.push_back(std::move(w));
        }
    }

    const std::vector<double>& nodes() const noexcept { return nodes_; }

    // min over targets of 1 - Q / f_0.
    std::pair<double, double> margin(const std::vector<double>& s_at_nodes) const {
        double worst = std::numeric_limits<double>::infinity(), worst_t = 0.0;
        for (std::size_t j = 0; j < targets_.size(); ++j) {
            double q = 0.0;
            const auto& w = weights_[j];
            for (std::size_t m = 0; m < w.size(); ++m) q += w[m] * s_at_nodes[m];
            const double r = 1.0 - q / bound_[j];
            if (r < worst) {
                worst = r;
                worst_t = targets_[j];
            }
        }
        return {worst, worst_t};
    }

private:
    int n_;
    double a_;
    std::vector<double> nodes_;
    std::vector<double> targets_;
    std::vector<double> bound_;
    std::vector<std::vector<double>> weights_;
};

double power_moment(double coefficient, double p, double rho) {
    if (!(p > 0.0 && p < rho)) throw DomainError("J diverges for this power");
    return coefficient * std::numbers::pi / (rho * std::sin(std::numbers::pi * p / rho));
}

// int_G^inf c t^{p-1} / (1 + t^rho) dt.
double power_tail(const PowerTag& tag, double from, double rho, double rel_tol) {
    if (!(tag.exponent < rho)) throw DomainError("J diverges for this tail");
    if (std::abs(tag.exponent - rho / 2) <= 1e-15 * rho)
        return tag.coefficient * (2.0 / rho) * std::atan(std::pow(from, -rho / 2));
    quad::IntegrationSpec spec;
    spec.integrand = [&](double t) { return tag(t) / t / (1.0 + std::pow(t, rho)); };
    spec.lower = from;
    spec.upper = std::numeric_limits<double>::infinity();
    spec.tail_decay = rho - tag.exponent;
    spec.rel_tol = rel_tol;
    return quad::integrate(spec).value;
}

std::vector<double> breakpoints_within(const std::vector<double>& points, double lo, double hi) {
    std::vector<double> out;
    for (double b : points)
        if (b > lo && b < hi) out.push_back(b);
    return out;
}

} // namespace

// GridFunction ---------------------------------------------------------------

GridFunction GridFunction::power(double coefficient, double exponent, std::vector<double> grid) {
    require_grid(grid);
    GridFunction g;
    g.grid_ = std::move(grid);
    g.power_ = PowerTag{coefficient, exponent};
    g.tail_ = g.power_;
    g.left_exponent_ = exponent;
    for (double t : g.grid_) g.values_.push_back((*g.power_)(t));
    g.zero_ = coefficient == 0.0;
    return g;
}

GridFunction GridFunction::sampled(std::vector<double> grid, std::vector<double> values, double left_exponent) {
    require_grid(grid);
    if (grid.size() != values.size()) throw DomainError("grid and values differ in length");
    GridFunction g;
    g.grid_ = std::move(grid);
    g.values_ = std::move(values);
    g.left_exponent_ = left_exponent;
    return g;
}

GridFunction GridFunction::analytic(std::function<double(double)> f, std::vector<double> grid, double left_exponent,
                                    std::optional<PowerTag> tail) {
    require_grid(grid);
    GridFunction g;
    g.grid_ = std::move(grid);
    g.exact_ = std::move(f);
    g.left_exponent_ = left_exponent;
    g.tail_ = tail;
    for (double t : g.grid_) g.values_.push_back(g.exact_(t));
    return g;
}

GridFunction GridFunction::zero(std::vector<double> grid) {
    require_grid(grid);
    GridFunction g;
    g.values_.assign(grid.size(), 0.0);
    g.grid_ = std::move(grid);
    g.zero_ = true;
    return g;
}

GridFunction& GridFunction::with_breakpoints(std::vector<double> points) {
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    breakpoints_ = std::move(points);
    return *this;
}

double GridFunction::operator()(double t) const {
    if (zero_) return 0.0;
    if (power_) return (*power_)(t);
    if (exact_) return (tail_ && t >= grid_.back()) ? (*tail_)(t) : exact_(t);
    if (t <= grid_.front()) return values_.front() * std::pow(t / grid_.front(), left_exponent_);
    if (t >= grid_.back()) return values_.back();
    const auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - grid_.begin()) - 1;
    const double u = std::log(t / grid_[i]) / std::log(grid_[i + 1] / grid_[i]);
    return values_[i] + u * (values_[i + 1] - values_[i]);
}

std::vector<double> geometric_grid(double lo, double hi, int points) {
    if (!(lo > 0.0) || !(hi > lo) || points < 2) throw DomainError("geometric grid needs 0 < lo < hi and 2+ points");
    std::vector<double> g(static_cast<std::size_t>(points));
    const double ratio = std::log(hi / lo);
    for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = lo * std::exp(ratio * i / (points - 1));
    g.back() = hi;
    return g;
}

// Q^m -----------------------------------------------------------------------

double q_power_at(const GridFunction& f, int m, double t, double rel_tol) {
    if (m < 1) throw DomainError("Q^m needs m >= 1");
    if (!(t >= 0.0)) throw DomainError("Q^m is evaluated at t >= 0");
    if (f.is_zero() || t == 0.0) return 0.0;
    if (f.power_tag()) {
        const auto& tag = *f.power_tag();
        if (!(tag.exponent > -1.0)) throw DomainError("Q^m diverges: f is not integrable at 0");
        return tag.coefficient * std::exp(std::lgamma(tag.exponent + 1) - std::lgamma(tag.exponent + m + 1)) *
               std::pow(t, tag.exponent + m);
    }
    if (!(f.left_exponent() > -1.0)) throw DomainError("Q^m diverges: f is not integrable at 0");
    const double inv_fact = 1.0 / factorial(m - 1);
    auto kernel = [&](double x) { return std::pow(t - x, m - 1) * inv_fact * f(x); };

    if (f.is_sampled()) {
        // Piecewise smooth: integrate panel by panel.
        const auto& grid = f.grid();
        const MomentPanel first(std::min(t, grid.front()), f.left_exponent(), m, 16);
        const auto head_w = first.kernel_weights(t, m);
        double sum = 0.0;
        for (std::size_t i = 0; i < first.x.size(); ++i) sum += head_w[i] * f(first.x[i]);
        NodeSet set;
        for (std::size_t i = 0; i + 1 < grid.size() && grid[i] < t; ++i)
            append_panel(set, grid[i], std::min(grid[i + 1], t), 8);
        if (t > grid.back()) append_panel(set, grid.back(), t, 16);
        for (std::size_t i = 0; i < set.x.size(); ++i) sum += set.w[i] * kernel(set.x[i]);
        return sum;
    }
    quad::IntegrationSpec spec;
    spec.integrand = kernel;
    spec.lower = 0.0;
    spec.upper = t;
    spec.left_exponent = f.left_exponent();
    spec.breakpoints = breakpoints_within(f.breakpoints(), 0.0, t);
    spec.rel_tol = rel_tol;
    return quad::integrate(spec).value;
}

GridFunction q_power(const GridFunction& f, int m, double rel_tol) {
    if (f.is_zero()) return GridFunction::zero(f.grid());
    if (f.power_tag()) {
        const auto& tag = *f.power_tag();
        if (!(tag.exponent > -1.0)) throw DomainError("Q^m diverges: f is not integrable at 0");
        const double c =
            tag.coefficient * std::exp(std::lgamma(tag.exponent + 1) - std::lgamma(tag.exponent + m + 1));
        return GridFunction::power(c, tag.exponent + m, f.grid());
    }
    std::vector<double> values;
    values.reserve(f.grid().size());
    for (double t : f.grid()) values.push_back(q_power_at(f, m, t, rel_tol));
    return GridFunction::sampled(f.grid(), std::move(values), f.left_exponent() + m);
}

// Admissibility and J ---------------------------------------------------------

Admissibility check_inc_rho(const GridFunction& s, const ProblemParams& params, const CheckOptions& options) {
    params.validate();
    Admissibility v;
    const auto& values = s.values();
    v.min_value = *std::min_element(values.begin(), values.end());
    v.nonnegative = v.min_value >= -options.monotone_tol;
    v.min_step = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < values.size(); ++i) v.min_step = std::min(v.min_step, values[i + 1] - values[i]);
    if (values.size() < 2) v.min_step = 0.0;
    v.nondecreasing = v.min_step >= -options.monotone_tol;

    if (s.is_zero()) {
        v.growth_margin = 1.0;
        v.worst_t = s.grid().back();
        return v;
    }
    if (!(s.left_exponent() > 0.0)) {
        // s(x)/x is not integrable at 0, so Q^n[s/x] is infinite.
        v.growth = false;
        v.growth_margin = -std::numeric_limits<double>::infinity();
        v.worst_t = s.grid().front();
        return v;
    }
    const GrowthChecker checker(s.grid(), params.n, params.half_rho(), s.left_exponent(), options.growth_points);
    std::vector<double> at_nodes;
    at_nodes.reserve(checker.nodes().size());
    for (double x : checker.nodes()) at_nodes.push_back(s(x));
    const auto [margin, worst_t] = checker.margin(at_nodes);
    v.growth_margin = margin;
    v.worst_t = worst_t;
    v.growth = margin >= -options.growth_tol;
    return v;
}

double j_functional(const GridFunction& s, const ProblemParams& params, double rel_tol) {
    params.validate();
    const double rho = params.rho;
    if (s.is_zero()) return 0.0;
    if (s.power_tag()) return power_moment(s.power_tag()->coefficient, s.power_tag()->exponent, rho);
    if (!(s.left_exponent() > 0.0)) throw DomainError("J diverges at 0");

    auto integrand = [&](double t) { return s(t) / t / (1.0 + std::pow(t, rho)); };
    const auto& grid = s.grid();
    const double last = grid.back();

    if (s.is_sampled()) {
        NodeSet set;
        append_power_panel(set, grid.front(), s.left_exponent() - 1.0, 16);
        for (std::size_t i = 0; i + 1 < grid.size(); ++i) append_panel(set, grid[i], grid[i + 1], 8);
        double sum = 0.0;
        for (std::size_t i = 0; i < set.x.size(); ++i) sum += set.w[i] * integrand(set.x[i]);
        return sum + s.values().back() * std::log1p(std::pow(last, -rho)) / rho;
    }

    quad::IntegrationSpec spec;
    spec.integrand = integrand;
    spec.lower = 0.0;
    spec.upper = last;
    spec.left_exponent = s.left_exponent() - 1.0;
    spec.breakpoints = breakpoints_within(s.breakpoints(), 0.0, last);
    spec.rel_tol = rel_tol;
    double sum = quad::integrate(spec).value;
    if (s.tail()) return sum + power_tail(*s.tail(), last, rho, rel_tol);
    spec.lower = last;
    spec.upper = std::numeric_limits<double>::infinity();
    spec.left_exponent.reset();
    spec.breakpoints.clear();
    return sum + quad::integrate(spec).value;
}

double s0_coefficient(const ProblemParams& params) {
    params.validate();
    const double a = params.half_rho();
    double c = a;
    for (int k = 1; k < params.n; ++k) c *= 1.0 + a / k;
    return c;
}

GridFunction s0(const ProblemParams& params, std::vector<double> grid) {
    return GridFunction::power(s0_coefficient(params), params.half_rho(), std::move(grid));
}

GridFunction f0(const ProblemParams& params, std::vector<double> grid) {
    params.validate();
    return GridFunction::power(1.0 / factorial(params.n - 1), params.half_rho() + params.n - 1, std::move(grid));
}

// Bumps ---------------------------------------------------------------------

Jet eta_jet(const SignPattern& pattern, int n, double t, int order) {
    Jet sum(order);
    const double pi = std::numbers::pi;
    for (int i : pattern.index_set) {
        const double lo = pattern.tau(i - 1), hi = pattern.tau(i);
        const bool inside = (lo == 0.0 ? t >= 0.0 : t > lo) && t < hi;
        if (!inside) continue;
        Jet bump = cos_jet(pi / (2.0 * hi), t, order);
        if (i > 1) bump *= cos_jet(pi / (2.0 * lo), t, order);
        sum += bump.pow(2 * n);
    }
    return sum;
}

double eta(const SignPattern& pattern, int n, double t) { return eta_jet(pattern, n, t, 0)[0]; }

double perturbation_gain(const GridFunction& s, const ProblemParams& params, double eps, double rel_tol) {
    params.validate_pipeline();
    if (s.is_zero() || eps == 0.0) return 0.0;
    const int n = params.n;
    const auto stack = DerivativeStack::build(params);
    const auto pattern = sign_pattern(stack, positive_roots(stack));

    std::function<double(double)> f;
    const double p = s.left_exponent();
    if (s.power_tag()) {
        const auto& tag = *s.power_tag();
        const auto q = q_power(GridFunction::power(tag.coefficient, tag.exponent - 1.0, s.grid()), n);
        f = [tag = *q.power_tag()](double t) { return tag(t); };
    } else {
        if (!(p > 0.0)) throw DomainError("s(x)/x is not integrable at 0");
        auto ratio = GridFunction::analytic([&s](double x) { return s(x) / x; }, s.grid(), p - 1.0);
        ratio.with_breakpoints(s.breakpoints());
        f = [ratio, n, rel_tol](double t) { return q_power_at(ratio, n, t, rel_tol); };
    }

    double sum = 0.0;
    for (const auto& piece : pattern.d_minus) {
        quad::IntegrationSpec spec;
        spec.integrand = [&](double t) {
            if (t == 0.0) return 0.0;
            return -f(t) * eta(pattern, n, t) * stack.psi<double>(t);
        };
        spec.lower = piece.lo;
        spec.upper = piece.hi;
        spec.rel_tol = rel_tol;
        if (piece.lo == 0.0) spec.left_exponent = p - 1.0 + params.rho * stack.lowest_power(n);
        sum += quad::integrate(spec).value;
    }
    return eps * sum;
}

// Maximizing sequence ---------------------------------------------------------

MaximizingSequence::MaximizingSequence(const ProblemParams& params, SignPattern pattern, std::vector<double> epsilons)
    : params_(params), pattern_(std::move(pattern)), epsilons_(std::move(epsilons)) {
    params_.validate_pipeline();
    for (double e : epsilons_)
        if (!(e > 0.0 && e <= 1.0)) throw DomainError("step sizes must lie in (0, 1]");
}

Jet MaximizingSequence::g_jet(int k, double t, int order) const {
    if (k < 0 || k > size()) throw DomainError("sequence index out of range");
    Jet g = Jet::constant(order, 1.0);
    const Jet e = eta_jet(pattern_, params_.n, t, order);
    if (e.is_zero()) return g;
    for (int i = 0; i < k; ++i) {
        Jet factor = e;
        factor *= -epsilons_[static_cast<std::size_t>(i)];
        factor[0] += 1.0;
        g *= factor;
    }
    return g;
}

double MaximizingSequence::f(int k, double t) const {
    if (t == 0.0) return 0.0;
    return g_jet(k, t, 0)[0] * std::pow(t, params_.half_rho() + params_.n - 1) / factorial(params_.n - 1);
}

double MaximizingSequence::s(int k, double t) const {
    if (!(t >= 0.0)) throw DomainError("s_k is defined for t >= 0");
    if (t == 0.0) return 0.0;
    const int n = params_.n;
    const Jet fk = g_jet(k, t, n) * f0_jet(n, params_.half_rho(), t, n);
    return t * fk.derivative(n);
}

GridFunction MaximizingSequence::member(int k, std::vector<double> grid) const {
    if (k < 0 || k > size()) throw DomainError("sequence index out of range");
    std::optional<PowerTag> tail;
    if (!grid.empty() && grid.back() >= pattern_.d_minus_sup())
        tail = PowerTag{s0_coefficient(params_), params_.half_rho()};
    auto self = *this;
    auto g = GridFunction::analytic([self, k](double t) { return self.s(k, t); }, std::move(grid),
                                    params_.half_rho(), tail);
    std::vector<double> kinks;
    for (const auto& z : pattern_.zeros) kinks.push_back(z.tau);
    g.with_breakpoints(std::move(kinks));
    return g;
}

MaximizeResult maximize(const ProblemParams& params, int iterations, const MaximizeOptions& options) {
    params.validate_pipeline();
    if (iterations < 0) throw DomainError("iteration count must be nonnegative");
    if (!(options.alpha > 0.0 && options.alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
    if (options.grid_points < 2) throw DomainError("check grid needs at least 2 points");

    const int n = params.n;
    const double a = params.half_rho(), rho = params.rho;
    const auto stack = DerivativeStack::build(params);

    MaximizeResult res;
    res.params = params;
    res.pattern = sign_pattern(stack, positive_roots(stack));
    if (res.pattern.d_minus.empty()) throw DomainError("psi has no negative set; nothing to maximize");
    const double base = p_n(n, rho) / (2.0 * rho);
    res.j_sup = base + deficiency(stack, res.pattern);
    const double tau_min = res.pattern.zeros.front().tau;
    const double tau_max = res.pattern.d_minus_sup();
    // The zeros of psi are added as breakpoints: s_k is only C^{n-1} there.
    res.grid = geometric_grid(tau_min * 1e-3, 10.0 * tau_max, options.grid_points);
    for (const auto& z : res.pattern.zeros)
        if (z.tau > res.grid.front() && z.tau < res.grid.back()) res.grid.push_back(z.tau);
    std::sort(res.grid.begin(), res.grid.end());
    res.grid.erase(std::unique(res.grid.begin(), res.grid.end()), res.grid.end());
    const auto& pattern = res.pattern;
    const double c0 = s0_coefficient(params);
    const double nf = factorial(n), nf1 = factorial(n + 1);

    // Check grid: s and s' need jets of order n + 1.
    struct Site {
        double t;
        Jet f0;
        Jet eta;
    };
    std::vector<Site> grid_sites, node_sites;
    std::vector<double> grid_s0, grid_ds0;
    for (double t : res.grid) {
        grid_s0.push_back(c0 * std::pow(t, a));
        grid_ds0.push_back(c0 * a * std::pow(t, a - 1.0));
        Jet e = eta_jet(pattern, n, t, n + 1);
        if (!e.is_zero()) grid_sites.push_back({t, f0_jet(n, a, t, n + 1), std::move(e)});
    }
    std::vector<std::size_t> grid_site_index;
    for (std::size_t i = 0, j = 0; i < res.grid.size(); ++i) {
        const bool active = j < grid_sites.size() && grid_sites[j].t == res.grid[i];
        grid_site_index.push_back(active ? j++ : std::numeric_limits<std::size_t>::max());
    }

    const GrowthChecker checker(res.grid, n, a, a, options.check.growth_points);
    const auto& nodes = checker.nodes();
    std::vector<double> node_s0;
    std::vector<std::size_t> node_site_index;
    for (double x : nodes) {
        node_s0.push_back(c0 * std::pow(x, a));
        Jet e = eta_jet(pattern, n, x, n);
        if (e.is_zero()) {
            node_site_index.push_back(std::numeric_limits<std::size_t>::max());
        } else {
            node_site_index.push_back(node_sites.size());
            node_sites.push_back({x, f0_jet(n, a, x, n), std::move(e)});
        }
    }

    // J(s_k) = J(s_0) + int_{D_-} (g_k - 1) f_0 psi on fixed nodes.
    NodeSet jset;
    const double beta = a + rho * stack.lowest_power(n) - 1.0;
    for (const auto& piece : pattern.d_minus) {
        if (piece.lo == 0.0) {
            const double cut = 1e-3 * piece.hi;
            append_power_panel(jset, cut, beta, 16);
            const auto edges = geometric_grid(cut, piece.hi, 97);
            for (std::size_t i = 0; i + 1 < edges.size(); ++i) append_panel(jset, edges[i], edges[i + 1], 10);
        } else {
            const double h = (piece.hi - piece.lo) / 64;
            for (int i = 0; i < 64; ++i) append_panel(jset, piece.lo + i * h, piece.lo + (i + 1) * h, 10);
        }
    }
    std::vector<double> j_weight, j_eta;
    for (std::size_t i = 0; i < jset.x.size(); ++i) {
        const double x = jset.x[i];
        j_weight.push_back(jset.w[i] * std::pow(x, a + n - 1) / factorial(n - 1) * stack.psi<double>(x));
        j_eta.push_back(eta(pattern, n, x));
    }

    auto apply = [](const std::vector<Site>& sites, const std::vector<Jet>& g, std::vector<Jet>& out, double eps) {
        for (std::size_t i = 0; i < sites.size(); ++i) {
            Jet factor = sites[i].eta;
            factor *= -eps;
            factor[0] += 1.0;
            out[i] = g[i] * factor;
        }
    };

    struct Verdict {
        bool ok;
        double margin;
        double min_slope;
    };
    std::vector<double> s_grid(res.grid.size()), s_nodes(nodes.size());
    auto assess = [&](const std::vector<Jet>& g_grid, const std::vector<Jet>& g_node) {
        double min_slope = std::numeric_limits<double>::infinity();
        bool ok = true;
        for (std::size_t i = 0; i < res.grid.size(); ++i) {
            const std::size_t si = grid_site_index[i];
            double s = grid_s0[i], ds = grid_ds0[i];
            if (si != std::numeric_limits<std::size_t>::max()) {
                const double t = res.grid[i];
                const Jet f = g_grid[si] * grid_sites[si].f0;
                s = t * nf * f[n];
                ds = nf * f[n] + t * nf1 * f[n + 1];
            }
            s_grid[i] = s;
            min_slope = std::min(min_slope, ds);
            if (s < -options.check.monotone_tol || ds < -options.check.monotone_tol) ok = false;
            if (i > 0 && s_grid[i] - s_grid[i - 1] < -options.check.monotone_tol) ok = false;
        }
        for (std::size_t m = 0; m < nodes.size(); ++m) {
            const std::size_t si = node_site_index[m];
            if (si == std::numeric_limits<std::size_t>::max()) {
                s_nodes[m] = node_s0[m];
            } else {
                const Jet f = g_node[si] * node_sites[si].f0;
                s_nodes[m] = nodes[m] * nf * f[n];
            }
        }
        const double margin = checker.margin(s_nodes).first;
        if (margin < -options.check.growth_tol) ok = false;
        return Verdict{ok, margin, min_slope};
    };

    double alpha = options.alpha;
    for (int attempt = 0;; ++attempt) {
        std::vector<Jet> g_grid(grid_sites.size(), Jet::constant(n + 1, 1.0));
        std::vector<Jet> g_node(node_sites.size(), Jet::constant(n, 1.0));
        std::vector<Jet> cand_grid(g_grid), cand_node(g_node);
        std::vector<double> g_j(jset.x.size(), 1.0);

        res.iterations.clear();
        res.schedule = EpsilonSchedule{options.alpha, alpha, {}, {}, attempt};
        const Verdict v0 = assess(g_grid, g_node);
        res.iterations.push_back({0, 0.0, base, (res.j_sup - base) / res.j_sup, v0.margin, v0.min_slope, 0});

        bool failed = false;
        double eps_prev = 1.0;
        for (int k = 1; k <= iterations && !failed; ++k) {
            double eps = std::min(alpha / k, eps_prev);
            int halvings = 0;
            Verdict v{false, 0.0, 0.0};
            for (; halvings <= options.max_halvings; ++halvings, eps /= 2) {
                apply(grid_sites, g_grid, cand_grid, eps);
                apply(node_sites, g_node, cand_node, eps);
                v = assess(cand_grid, cand_node);
                if (v.ok) break;
            }
            if (!v.ok) {
                failed = true;
                break;
            }
            std::swap(g_grid, cand_grid);
            std::swap(g_node, cand_node);
            double j = base;
            for (std::size_t i = 0; i < g_j.size(); ++i) {
                g_j[i] *= 1.0 - eps * j_eta[i];
                j += j_weight[i] * (g_j[i] - 1.0);
            }
            eps_prev = eps;
            res.schedule.epsilons.push_back(eps);
            res.schedule.halvings.push_back(halvings);
            res.iterations.push_back({k, eps, j, (res.j_sup - j) / res.j_sup, v.margin, v.min_slope, halvings});
        }
        if (!failed) break;
        if (attempt >= options.max_restarts)
            throw NonConvergence("no admissible step size found", res.iterations.back().j_value);
        alpha /= 2;
    }
    return res;
}

} // namespace khabi
