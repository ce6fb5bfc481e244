#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ldkit {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed arguments: shape mismatch, non-finite entries, odd ambient dimension.
class InputError : public Error {
public:
    using Error::Error;
};

/// Operation called on a value that lacks a required property.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// ker A ∩ ker B ≠ {0} in an (A,B) representation.
class DegenerateRepresentation : public Error {
public:
    using Error::Error;
};

/// A subspace that satisfies neither characteristic equation.
class NotLDStructure : public Error {
public:
    NotLDStructure(const std::string& what, double forward_residual, double backward_residual)
        : Error(what), forward_residual_(forward_residual), backward_residual_(backward_residual) {}

    double forward_residual() const noexcept { return forward_residual_; }
    double backward_residual() const noexcept { return backward_residual_; }

private:
    double forward_residual_;
    double backward_residual_;
};

/// Requested (E,Ω) / (F,Π) orientation is not available for the structure.
class NotRepresentable : public Error {
public:
    using Error::Error;
};

/// Rank drop of a constraint field at a queried point.
class RegularityError : public Error {
public:
    using Error::Error;
};

/// A differential outside the pointwise co-distribution ρ*(L(x)).
class AdmissibilityError : public Error {
public:
    AdmissibilityError(const std::string& what, std::string argument, Eigen::VectorXd violation)
        : Error(what), argument_(std::move(argument)), violation_(std::move(violation)) {}

    /// "f" or "g".
    const std::string& argument() const noexcept { return argument_; }
    /// Component of the differential along Im G(x), in the coordinates of G's columns.
    const Eigen::VectorXd& violation() const noexcept { return violation_; }

private:
    std::string argument_;
    Eigen::VectorXd violation_;
};

/// State outside the consistency set χ_c.
class ConsistencyError : public Error {
public:
    ConsistencyError(const std::string& what, double residual) : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Index-reduced multiplier system without a consistent least-squares solution.
class DegenerateMultiplierError : public Error {
public:
    DegenerateMultiplierError(const std::string& what, double residual) : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace ldkit
