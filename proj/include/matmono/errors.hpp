#pragma once

#include <stdexcept>
#include <string>

namespace matmono {

/// Base class for all matmono errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Input violates a documented precondition (dimensions, signs, symmetry, ...).
struct InvalidInput : Error {
    explicit InvalidInput(const std::string& what) : Error(what) {}
};

/// A matrix that must be invertible (or strictly positive definite) is not.
struct SingularMatrix : Error {
    explicit SingularMatrix(const std::string& what) : Error(what) {}
};

/// The constraint set admits no solution of the requested form.
struct Infeasible : Error {
    explicit Infeasible(const std::string& what) : Error(what) {}
};

/// The combination of objective/constraint/regime is outside the solvable set.
struct Unsupported : Error {
    explicit Unsupported(const std::string& what) : Error(what) {}
};

/// Dimension guard tripped (Kronecker products, grid searches).
struct TooLarge : Error {
    explicit TooLarge(const std::string& what) : Error(what) {}
};

/// The rescaling denominator 1 - Tr(Psi Fbar Fbar^H) degenerated.
struct DegenerateRescaling : Error {
    explicit DegenerateRescaling(const std::string& what) : Error(what) {}
};

} // namespace matmono
