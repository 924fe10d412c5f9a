#pragma once

#include <stdexcept>
#include <string>

namespace vibtomo {

// Base of every error thrown by the library. The category drives the CLI exit
// code: validation -> 2, convergence -> 3, numerical -> 4.
enum class ErrorCategory { Validation, Convergence, Numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what)
        : Error(ErrorCategory::Validation, what) {}
};

/// Input arrays or matrices with incompatible dimensions.
class ShapeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Element with a non-positive Jacobian or area.
class MeshQualityError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Damping model that would produce an overdamped (zeta >= 1) mode.
class UnsupportedDampingError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what)
        : Error(ErrorCategory::Numerical, what) {}
};

/// System with no free degrees of freedom, or a singular factorization.
class DegenerateSystemError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class RankDeficiencyError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class FitQualityError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// The density block has nothing that pins its scale (no usable modes).
class AnchorMissingError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DivergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ConvergenceError : public Error {
public:
    explicit ConvergenceError(const std::string& what)
        : Error(ErrorCategory::Convergence, what) {}
};

inline int exit_code(ErrorCategory c) {
    switch (c) {
    case ErrorCategory::Validation:
        return 2;
    case ErrorCategory::Convergence:
        return 3;
    case ErrorCategory::Numerical:
        return 4;
    }
    return 1;
}

}  // namespace vibtomo
