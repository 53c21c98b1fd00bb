#pragma once

#include <stdexcept>
#include <string>

namespace honeycomb {

/// Invalid input: bad configuration values, violated preconditions.
/// The CLI maps these to exit status 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure could not deliver its contract (non-convergence,
/// lost structure, bracketing failure). The CLI maps these to exit status 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what, std::string kind = "numerical")
        : std::runtime_error(what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

/// Rotated beams became (nearly) collinear, the reciprocal cell collapsed.
class DegenerateCell : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// The potential no longer has two distinct minima per primitive cell.
class TwoPointBasisLost : public NumericalError {
public:
    explicit TwoPointBasisLost(const std::string& what, std::string kind = "two_point_basis_lost")
        : NumericalError(what, std::move(kind)) {}
};

/// Beam strengths cannot form a triangle, so the field amplitude has no zeros.
class TriangleInequalityViolated : public TwoPointBasisLost {
public:
    explicit TriangleInequalityViolated(const std::string& what)
        : TwoPointBasisLost(what, "triangle_inequality_violated") {}
};

class NotCritical : public NumericalError {
public:
    explicit NotCritical(const std::string& what) : NumericalError(what, "not_critical") {}
};

/// Dirac points requested for a gapped (massive) hopping model.
class NonzeroMass : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// A vanishing hopping with the other two equal in magnitude: nodal line, not points.
class DegenerateHopping : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class EigensolverFailure : public NumericalError {
public:
    EigensolverFailure(const std::string& what, double kx, double ky)
        : NumericalError(what, "eigensolver_failure"), kx_(kx), ky_(ky) {}

    double kx() const noexcept { return kx_; }
    double ky() const noexcept { return ky_; }

private:
    double kx_, ky_;
};

class BracketingFailure : public NumericalError {
public:
    explicit BracketingFailure(const std::string& what) : NumericalError(what, "bracketing_failure") {}
};

class ConvergenceFailure : public NumericalError {
public:
    ConvergenceFailure(const std::string& what, double drift)
        : NumericalError(what, "convergence_failure"), drift_(drift) {}

    double drift() const noexcept { return drift_; }

private:
    double drift_;
};

class RankDeficient : public NumericalError {
public:
    explicit RankDeficient(const std::string& what) : NumericalError(what, "rank_deficient") {}
};

}  // namespace honeycomb
