#pragma once

namespace khabi {

/// Complex dimension n and lower order rho.
struct ProblemParams {
    int n = 2;
    double rho = 2.0;

    /// Throws DomainError unless n >= 2 and rho > 0.
    void validate() const;

    /// As validate(), and additionally requires rho > 1.
    void validate_pipeline() const;

    /// rho / 2, the exponent of the growth majorant.
    double half_rho() const noexcept { return 0.5 * rho; }
};

} // namespace khabi
