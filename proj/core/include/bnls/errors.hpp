#pragma once

#include <stdexcept>
#include <string>

namespace bnls {

/// Raised when a numerical procedure cannot produce a trustworthy result
/// (singular factorization, non-finite values, non-settling series, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised for (sigma, d) outside the L2-supercritical, H2-subcritical range.
class AdmissibilityError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace bnls
