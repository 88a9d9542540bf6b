#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace khabi {

/// Dense univariate polynomial, coefficients stored lowest degree first.
template <class Real>
class BasicPolynomial {
public:
    BasicPolynomial() = default;
    explicit BasicPolynomial(std::vector<Real> coeffs) : c_(std::move(coeffs)) { trim(); }
    BasicPolynomial(std::initializer_list<Real> coeffs) : c_(coeffs) { trim(); }

    /// Degree of the polynomial; -1 for the zero polynomial.
    int degree() const noexcept { return static_cast<int>(c_.size()) - 1; }
    bool is_zero() const noexcept { return c_.empty(); }

    Real operator[](std::size_t j) const noexcept { return j < c_.size() ? c_[j] : Real(0); }
    const std::vector<Real>& coefficients() const noexcept { return c_; }

    template <class T>
    T operator()(T x) const {
        T acc = 0;
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + static_cast<T>(*it);
        return acc;
    }

    BasicPolynomial derivative() const {
        if (c_.size() <= 1) return {};
        std::vector<Real> d(c_.size() - 1);
        for (std::size_t j = 1; j < c_.size(); ++j) d[j - 1] = static_cast<Real>(j) * c_[j];
        return BasicPolynomial(std::move(d));
    }

    /// Divides by x^m, dropping the m lowest coefficients (callers ensure they vanish).
    BasicPolynomial shift_down(std::size_t m) const {
        if (m >= c_.size()) return {};
        return BasicPolynomial(std::vector<Real>(c_.begin() + static_cast<std::ptrdiff_t>(m), c_.end()));
    }

    /// Number of exactly-zero low-order coefficients (the multiplicity of the root at 0).
    std::size_t low_order_zeros() const noexcept {
        std::size_t m = 0;
        while (m < c_.size() && c_[m] == Real(0)) ++m;
        return m;
    }

    template <class Other>
    BasicPolynomial<Other> cast() const {
        std::vector<Other> out(c_.begin(), c_.end());
        return BasicPolynomial<Other>(std::move(out));
    }

private:
    void trim() {
        while (!c_.empty() && c_.back() == Real(0)) c_.pop_back();
    }

    std::vector<Real> c_;
};

using Polynomial = BasicPolynomial<double>;

} // namespace khabi
