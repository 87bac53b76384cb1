#pragma once

#include <stdexcept>
#include <string>

namespace extremal {

// Error taxonomy shared by all modules.  Everything derives from Error so the
// CLI can map "any numeric failure" to one exit code.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- parsing ---------------------------------------------------------------

class SyntaxError : public Error {
public:
    SyntaxError(const std::string& msg, std::size_t position)
        : Error(msg + " (at position " + std::to_string(position) + ")"),
          position_(position) {}
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

class UnknownIdentifier : public Error {
public:
    UnknownIdentifier(const std::string& name, std::size_t position)
        : Error("unknown identifier '" + name + "' (at position " +
                std::to_string(position) + ")"),
          position_(position) {}
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

// --- evaluation ------------------------------------------------------------

// Evaluation left the reals (log of a nonpositive value, division by zero,
// non-finite result, negative argument outside the declared domain t >= 0).
class DomainError : public Error {
public:
    using Error::Error;
};

class QuadratureFailure : public Error {
public:
    using Error::Error;
};

class SecondDerivativeUnavailable : public Error {
public:
    using Error::Error;
};

// --- construction / preconditions ------------------------------------------

class UnknownName : public Error {
public:
    using Error::Error;
};

class BadParameter : public Error {
public:
    using Error::Error;
};

class PreconditionViolated : public Error {
public:
    explicit PreconditionViolated(const std::string& msg) : Error(msg) {}
    PreconditionViolated(const std::string& msg, double witness)
        : Error(msg + " (witness t = " + std::to_string(witness) + ")"),
          witness_(witness), has_witness_(true) {}
    bool has_witness() const noexcept { return has_witness_; }
    double witness() const noexcept { return witness_; }

private:
    double witness_ = 0.0;
    bool has_witness_ = false;
};

// xi' + xi^2 < 0 at some sampled point: g of Prop 2.1 is not constructible
// there.  Carries the witness abscissa.
class NegativeDiscriminant : public Error {
public:
    NegativeDiscriminant(double t, double value)
        : Error("xi' + xi^2 negative at t = " + std::to_string(t) +
                " (value " + std::to_string(value) + ")"),
          t_(t), value_(value) {}
    double t() const noexcept { return t_; }
    double value() const noexcept { return value_; }

private:
    double t_, value_;
};

// --- iterative solvers ------------------------------------------------------

class NoConvergence : public Error {
public:
    using Error::Error;
};

class IterationCap : public Error {
public:
    using Error::Error;
};

}  // namespace extremal
