#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

namespace khabi {

/// Truncated Taylor expansion about a fixed point: c[j] = f^{(j)}(t0) / j!.
class Jet {
public:
    Jet() = default;
    explicit Jet(int order) : c_(static_cast<std::size_t>(order) + 1, 0.0) {}

    static Jet constant(int order, double value) {
        Jet j(order);
        j.c_[0] = value;
        return j;
    }

    int order() const noexcept { return static_cast<int>(c_.size()) - 1; }
    double& operator[](int j) { return c_[static_cast<std::size_t>(j)]; }
    double operator[](int j) const { return c_[static_cast<std::size_t>(j)]; }

    /// f^{(j)}(t0).
    double derivative(int j) const {
        double v = (*this)[j];
        for (int i = 2; i <= j; ++i) v *= i;
        return v;
    }

    bool is_zero() const {
        for (double x : c_)
            if (x != 0.0) return false;
        return true;
    }

    Jet& operator+=(const Jet& o) {
        for (std::size_t j = 0; j < c_.size(); ++j) c_[j] += o.c_[j];
        return *this;
    }
    Jet& operator*=(double s) {
        for (double& x : c_) x *= s;
        return *this;
    }
    friend Jet operator*(const Jet& x, const Jet& y) {
        Jet r(x.order());
        for (int i = 0; i <= x.order(); ++i)
            for (int j = 0; i + j <= x.order(); ++j) r[i + j] += x[i] * y[j];
        return r;
    }
    Jet& operator*=(const Jet& o) { return *this = *this * o; }

    Jet pow(int e) const {
        Jet r = constant(order(), 1.0), b = *this;
        for (; e > 0; e >>= 1) {
            if (e & 1) r *= b;
            if (e > 1) b *= b;
        }
        return r;
    }

private:
    std::vector<double> c_;
};

/// Jet of cos(omega t) at t.
inline Jet cos_jet(double omega, double t, int order) {
    Jet j(order);
    double w = 1.0, fact = 1.0;
    for (int k = 0; k <= order; ++k) {
        if (k > 0) fact *= k;
        j[k] = w * std::cos(omega * t + k * std::numbers::pi / 2) / fact;
        w *= omega;
    }
    return j;
}

/// Jet of t^p at t > 0.
inline Jet power_jet(double p, double t, int order) {
    Jet j(order);
    double c = std::pow(t, p);
    for (int k = 0; k <= order; ++k) {
        j[k] = c;
        c *= (p - k) / ((k + 1) * t);
    }
    return j;
}

} // namespace khabi
