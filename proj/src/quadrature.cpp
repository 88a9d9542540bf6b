#include "khabi/quadrature.hpp"

#include "khabi/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <queue>

namespace khabi::quad {
namespace {

constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    int piece = 0;
    double a = 0.0;
    double b = 0.0;
    double value = 0.0;
    double error = 0.0;
};

struct ByError {
    bool operator()(const Panel& x, const Panel& y) const {
        if (x.error != y.error) return x.error < y.error;
        return x.a > y.a;
    }
};

// QUADPACK qk15 error model.
Panel gauss_kronrod(const std::function<double(double)>& g, int piece, double a, double b) {
    const double centre = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = g(centre);
    double resg = fc * kWg[3];
    double resk = fc * kWgk[7];
    double resabs = std::abs(resk);
    std::array<double, 7> f1{}, f2{};
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kXgk[static_cast<std::size_t>(j)];
        f1[static_cast<std::size_t>(j)] = g(centre - dx);
        f2[static_cast<std::size_t>(j)] = g(centre + dx);
        const double sum = f1[static_cast<std::size_t>(j)] + f2[static_cast<std::size_t>(j)];
        resk += kWgk[static_cast<std::size_t>(j)] * sum;
        resabs += kWgk[static_cast<std::size_t>(j)] *
                  (std::abs(f1[static_cast<std::size_t>(j)]) + std::abs(f2[static_cast<std::size_t>(j)]));
        if (j % 2 == 1) resg += kWg[static_cast<std::size_t>(j / 2)] * sum;
    }
    const double reskh = 0.5 * resk;
    double resasc = kWgk[7] * std::abs(fc - reskh);
    for (std::size_t j = 0; j < 7; ++j)
        resasc += kWgk[j] * (std::abs(f1[j] - reskh) + std::abs(f2[j] - reskh));

    const double value = resk * half;
    resabs *= std::abs(half);
    resasc *= std::abs(half);
    double err = std::abs((resk - resg) * half);
    if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    constexpr double eps = std::numeric_limits<double>::epsilon();
    if (resabs > std::numeric_limits<double>::min() / (50.0 * eps))
        err = std::max(50.0 * eps * resabs, err);
    return Panel{piece, a, b, value, err};
}

struct Piece {
    std::function<double(double)> g;
    double a;
    double b;
};

// x = lower + length * w^q with q = 1/(beta+1)
Piece left_substitution(const std::function<double(double)>& f, double lower, double length, double beta) {
    const double q = 1.0 / (beta + 1.0);
    return Piece{[f, lower, length, q](double w) {
                     if (w <= 0.0) return 0.0;
                     const double wq = std::pow(w, q);
                     return f(lower + length * wq) * length * q * wq / w;
                 },
                 0.0, 1.0};
}

double estimate_decay(const std::function<double(double)>& f, double start) {
    const double x1 = start * 1e3;
    const double x2 = start * 1e6;
    const double f1 = std::abs(f(x1));
    const double f2 = std::abs(f(x2));
    if (f1 == 0.0 && f2 == 0.0) return 1.0;
    if (f1 == 0.0 || f2 == 0.0 || !std::isfinite(f1) || !std::isfinite(f2))
        throw DomainError("cannot estimate tail decay of integrand");
    const double slope = std::log(f2 / f1) / std::log(x2 / x1);
    const double delta = -1.0 - slope;
    if (!(delta > 1e-3)) throw DomainError("integrand does not decay fast enough for a tail map");
    return std::min(delta, 8.0);
}

} // namespace

void IntegrationSpec::validate() const {
    if (!integrand) throw DomainError("integration spec has no integrand");
    if (!(rel_tol > 1e-14 && rel_tol < 1e-2)) throw DomainError("relative tolerance must lie in (1e-14, 1e-2)");
    if (abs_tol < 0.0) throw DomainError("absolute tolerance must be nonnegative");
    if (left_exponent && !(*left_exponent > -1.0)) throw DomainError("left exponent hint must exceed -1");
    if (tail_decay && !(*tail_decay > 0.0)) throw DomainError("tail decay hint must be positive");
    if (!std::isfinite(lower)) throw DomainError("lower limit must be finite");
    if (!(upper > lower)) throw DomainError("upper limit must exceed lower limit");
    if (max_subdivisions < 1) throw DomainError("subdivision budget must be positive");
    double prev = lower;
    for (double b : breakpoints) {
        if (!(b > prev) || !(b < upper)) throw DomainError("breakpoints must increase strictly inside the interval");
        prev = b;
    }
}

IntegrationSpec map_to_finite(const IntegrationSpec& spec) {
    if (!std::isinf(spec.upper)) throw DomainError("map_to_finite expects an infinite upper limit");
    if (!(spec.lower > 0.0)) throw DomainError("map_to_finite expects a positive lower limit");
    const double delta = spec.tail_decay ? *spec.tail_decay : estimate_decay(spec.integrand, spec.lower);
    IntegrationSpec out = spec;
    const auto f = spec.integrand;
    const double c = spec.lower;
    out.integrand = [f, c, delta](double w) {
        if (w <= 0.0) return 0.0;
        const double x = c * std::pow(w, -1.0 / delta);
        return f(x) * (x / (delta * w));
    };
    out.lower = 0.0;
    out.upper = 1.0;
    out.left_exponent.reset();
    out.tail_decay.reset();
    return out;
}

IntegrationResult integrate(const IntegrationSpec& spec) {
    spec.validate();

    std::vector<Piece> pieces;
    double end = spec.upper;
    if (std::isinf(spec.upper)) {
        const double last = spec.breakpoints.empty() ? spec.lower : spec.breakpoints.back();
        end = last + std::max(1.0, std::abs(last));
    }
    std::vector<double> cuts{spec.lower};
    cuts.insert(cuts.end(), spec.breakpoints.begin(), spec.breakpoints.end());
    cuts.push_back(end);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (i == 0 && spec.left_exponent)
            pieces.push_back(left_substitution(spec.integrand, cuts[0], cuts[1] - cuts[0], *spec.left_exponent));
        else
            pieces.push_back(Piece{spec.integrand, cuts[i], cuts[i + 1]});
    }
    if (std::isinf(spec.upper)) {
        IntegrationSpec tail = spec;
        tail.lower = end;
        tail.breakpoints.clear();
        const IntegrationSpec mapped = map_to_finite(tail);
        pieces.push_back(Piece{mapped.integrand, 0.0, 1.0});
    }

    std::priority_queue<Panel, std::vector<Panel>, ByError> heap;
    IntegrationResult result;
    double total = 0.0;
    double total_err = 0.0;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        Panel p = gauss_kronrod(pieces[i].g, static_cast<int>(i), pieces[i].a, pieces[i].b);
        result.evaluations += 15;
        total += p.value;
        total_err += p.error;
        heap.push(p);
    }

    int subdivisions = 0;
    while (true) {
        const double target = std::max(spec.abs_tol, spec.rel_tol * std::abs(total));
        if (total_err <= target) break;
        if (!std::isfinite(total)) throw NonConvergence("integrand produced a non-finite value", total);
        if (subdivisions >= spec.max_subdivisions)
            throw NonConvergence("quadrature subdivision budget exhausted (error estimate " +
                                     std::to_string(total_err) + ")",
                                 total);
        const Panel worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            // Interval cannot be split further; accept its contribution as is.
            total_err -= worst.error;
            result.error += worst.error;
            continue;
        }
        const auto& g = pieces[static_cast<std::size_t>(worst.piece)].g;
        const Panel left = gauss_kronrod(g, worst.piece, worst.a, mid);
        const Panel right = gauss_kronrod(g, worst.piece, mid, worst.b);
        result.evaluations += 30;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++subdivisions;
    }

    // Re-sum panels in a fixed order for a stable final value.
    std::vector<Panel> panels;
    panels.reserve(heap.size());
    while (!heap.empty()) {
        panels.push_back(heap.top());
        heap.pop();
    }
    std::sort(panels.begin(), panels.end(), [](const Panel& x, const Panel& y) {
        return x.piece != y.piece ? x.piece < y.piece : x.a < y.a;
    });
    double value = 0.0;
    double err = result.error;
    for (const auto& p : panels) {
        value += p.value;
        err += p.error;
    }
    result.value = value;
    result.error = err;
    result.subdivisions = subdivisions;
    return result;
}

const GaussRule& gauss_legendre(int points) {
    if (points < 1 || points > 256) throw DomainError("unsupported Gauss-Legendre order");
    static std::mutex mutex;
    static std::map<int, GaussRule> cache;
    std::lock_guard lock(mutex);
    if (auto it = cache.find(points); it != cache.end()) return it->second;

    GaussRule rule;
    rule.nodes.resize(static_cast<std::size_t>(points));
    rule.weights.resize(static_cast<std::size_t>(points));
    const int m = (points + 1) / 2;
    for (int i = 0; i < m; ++i) {
        long double x = std::cos(M_PI * (i + 0.75) / (points + 0.5));
        long double dp = 0.0L;
        for (int iter = 0; iter < 100; ++iter) {
            long double p0 = 1.0L, p1 = 0.0L;
            for (int j = 1; j <= points; ++j) {
                const long double p2 = p1;
                p1 = p0;
                p0 = ((2.0L * j - 1.0L) * x * p1 - (j - 1.0L) * p2) / j;
            }
            dp = points * (x * p0 - p1) / (x * x - 1.0L);
            const long double dx = p0 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-19L) break;
        }
        const auto iu = static_cast<std::size_t>(i);
        const auto il = static_cast<std::size_t>(points - 1 - i);
        rule.nodes[iu] = static_cast<double>(-x);
        rule.nodes[il] = static_cast<double>(x);
        const auto w = static_cast<double>(2.0L / ((1.0L - x * x) * dp * dp));
        rule.weights[iu] = w;
        rule.weights[il] = w;
    }
    return cache.emplace(points, std::move(rule)).first->second;
}

} // namespace khabi::quad
