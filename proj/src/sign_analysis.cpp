#include "khabi/sign_analysis.hpp"

#include "khabi/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace khabi {
namespace {

template <class Real>
struct Root {
    Real x;
    bool tangential;
};

template <class Real>
int sign_of(Real v) {
    return (v > Real(0)) - (v < Real(0));
}

// Running error bound of Horner evaluation.
template <class Real>
Real horner_error_bound(const BasicPolynomial<Real>& p, Real x) {
    Real acc = 0;
    const auto& c = p.coefficients();
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * std::abs(x) + std::abs(*it);
    return Real(4) * static_cast<Real>(c.size() + 1) * std::numeric_limits<Real>::epsilon() * acc;
}

template <class Real>
Real bisect(const BasicPolynomial<Real>& p, Real a, Real b, int sa, Real rel_tol) {
    for (int iter = 0; iter < 2000; ++iter) {
        const Real m = a + (b - a) / 2;
        if (!(m > a && m < b)) break;
        if (b - a <= rel_tol * std::max(std::abs(a), std::abs(b))) break;
        const int sm = sign_of(p(m));
        if (sm == 0) return m;
        if (sm == sa) {
            a = m;
        } else {
            b = m;
        }
    }
    return a + (b - a) / 2;
}

// All real roots of p in (lo, hi], sorted. Between consecutive critical points
// p is monotone, so each such interval holds at most one simple root.
template <class Real>
std::vector<Root<Real>> isolate(const BasicPolynomial<Real>& p, Real lo, Real hi, Real rel_tol) {
    std::vector<Root<Real>> out;
    const int deg = p.degree();
    if (deg <= 0) return out;
    if (deg == 1) {
        const Real r = -p[0] / p[1];
        if (r > lo && r <= hi) out.push_back({r, false});
        return out;
    }

    const auto crit = isolate(p.derivative(), lo, hi, rel_tol);
    std::vector<Real> pts;
    pts.push_back(lo);
    for (const auto& c : crit)
        if (c.x > pts.back() && c.x < hi) pts.push_back(c.x);
    pts.push_back(hi);

    std::vector<Real> vals(pts.size());
    std::vector<int> signs(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        vals[i] = p(pts[i]);
        signs[i] = sign_of(vals[i]);
    }

    // A critical point where |p| is within evaluation noise and the neighbouring
    // samples share a sign is a touching (even-multiplicity) zero.
    std::vector<int> touching(pts.size(), 0);
    for (std::size_t c = 1; c + 1 < pts.size(); ++c) {
        const bool tiny = signs[c] == 0 || std::abs(vals[c]) <= horner_error_bound(p, pts[c]);
        if (tiny && signs[c - 1] != 0 && signs[c - 1] == signs[c + 1]) {
            touching[c] = 1;
            signs[c] = signs[c - 1];
        }
    }

    auto push_unique = [&](Real x, bool tangential) {
        if (!out.empty() && out.back().x == x) return;
        out.push_back({x, tangential});
    };

    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        if (i > 0 && touching[i]) push_unique(pts[i], true);
        if (i > 0 && signs[i] == 0) push_unique(pts[i], false);
        if (signs[i] != 0 && signs[i + 1] != 0 && signs[i] != signs[i + 1])
            push_unique(bisect(p, pts[i], pts[i + 1], signs[i], rel_tol), false);
    }
    if (signs.back() == 0) push_unique(hi, false);
    std::sort(out.begin(), out.end(), [](const Root<Real>& x, const Root<Real>& y) { return x.x < y.x; });
    return out;
}

template <class Real>
std::vector<PsiZero> roots_impl(const DerivativeStack& stack, const RootOptions& options) {
    const auto& full = stack.q_extended(stack.order());
    const auto strip = full.low_order_zeros();
    const BasicPolynomial<Real> p = full.shift_down(strip).template cast<Real>();

    const Polynomial pd = p.template cast<double>();
    const double bound = cauchy_root_bound(pd);
    const auto found = isolate<Real>(p, Real(0), static_cast<Real>(bound), static_cast<Real>(options.rel_tol));

    int multiplicity = 0;
    for (const auto& r : found) multiplicity += r.tangential ? 2 : 1;
    const int variations = descartes_variations(pd);
    if (multiplicity > variations || (variations - multiplicity) % 2 != 0) {
        std::ostringstream msg;
        msg << "root census inconsistent: found " << multiplicity << " positive roots (with multiplicity), "
            << "Descartes allows " << variations << " minus an even number";
        throw OracleFailure(msg.str());
    }

    std::vector<PsiZero> zeros;
    const Real inv_rho = Real(1) / static_cast<Real>(stack.rho());
    for (const auto& r : found) {
        PsiZero z;
        z.x = static_cast<double>(r.x);
        z.tau = static_cast<double>(std::pow(r.x, inv_rho));
        z.tangential = r.tangential;
        zeros.push_back(z);
    }
    return zeros;
}

} // namespace

bool SignPattern::in_d_minus(double t) const {
    return std::any_of(d_minus.begin(), d_minus.end(), [t](const SignInterval& iv) { return t > iv.lo && t < iv.hi; });
}

int descartes_variations(const Polynomial& p) {
    int count = 0;
    int last = 0;
    for (double c : p.coefficients()) {
        const int s = (c > 0.0) - (c < 0.0);
        if (s == 0) continue;
        if (last != 0 && s != last) ++count;
        last = s;
    }
    return count;
}

double cauchy_root_bound(const Polynomial& p) {
    const int deg = p.degree();
    if (deg < 1) return 0.0;
    const double lead = std::abs(p[static_cast<std::size_t>(deg)]);
    double m = 0.0;
    for (int j = 0; j < deg; ++j) m = std::max(m, std::abs(p[static_cast<std::size_t>(j)]) / lead);
    return 1.0 + m;
}

std::vector<PsiZero> positive_roots(const DerivativeStack& stack, const RootOptions& options) {
    stack.params().validate_pipeline();
    if (!(options.rel_tol > 0.0 && options.rel_tol < 1e-3)) throw DomainError("root tolerance must lie in (0, 1e-3)");
    return options.extended ? roots_impl<long double>(stack, options) : roots_impl<double>(stack, options);
}

SignPattern sign_pattern(const DerivativeStack& stack, const std::vector<PsiZero>& roots) {
    SignPattern pat;
    pat.zeros = roots;
    for (std::size_t i = 1; i < roots.size(); ++i)
        if (!(roots[i].tau > roots[i - 1].tau)) throw DomainError("zeros must be strictly increasing");

    const std::size_t m = roots.size();
    for (std::size_t i = 0; i <= m; ++i) {
        SignInterval iv;
        iv.lo = i == 0 ? 0.0 : roots[i - 1].tau;
        iv.hi = i == m ? std::numeric_limits<double>::infinity() : roots[i].tau;
        double probe;
        if (i == m) {
            probe = m == 0 ? 1.0 : 2.0 * iv.lo;
        } else if (iv.lo == 0.0) {
            probe = 0.5 * iv.hi;
        } else {
            probe = std::sqrt(iv.lo * iv.hi);
        }
        const double v = stack.psi(probe);
        iv.sign = (v > 0.0) - (v < 0.0);
        if (iv.sign == 0) throw OracleFailure("psi vanishes at an interval probe; a zero was missed");
        pat.intervals.push_back(iv);
    }

    for (std::size_t i = 1; i <= m; ++i) {
        const bool flips = pat.intervals[i].sign != pat.intervals[i - 1].sign;
        if (flips == roots[i - 1].tangential) {
            std::ostringstream msg;
            msg << "sign pattern inconsistent at tau_" << i << " = " << roots[i - 1].tau;
            throw OracleFailure(msg.str());
        }
    }
    if (pat.intervals.back().sign < 0) throw OracleFailure("psi is negative beyond the last zero; a zero was missed");

    for (std::size_t i = 0; i < m; ++i) {
        if (pat.intervals[i].sign >= 0) continue;
        pat.index_set.push_back(static_cast<int>(i) + 1);
        if (!pat.d_minus.empty() && pat.d_minus.back().hi == pat.intervals[i].lo)
            pat.d_minus.back().hi = pat.intervals[i].hi;
        else
            pat.d_minus.push_back(pat.intervals[i]);
    }
    return pat;
}

} // namespace khabi
