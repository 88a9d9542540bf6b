#include "khabi/params.hpp"

#include "khabi/error.hpp"

#include <cmath>
#include <string>

namespace khabi {

void ProblemParams::validate() const {
    if (n < 2) throw DomainError("dimension n must be >= 2, got " + std::to_string(n));
    if (!(rho > 0.0) || !std::isfinite(rho))
        throw DomainError("order rho must be a positive finite number");
}

void ProblemParams::validate_pipeline() const {
    validate();
    if (!(rho > 1.0)) throw DomainError("this computation requires rho > 1");
}

} // namespace khabi
