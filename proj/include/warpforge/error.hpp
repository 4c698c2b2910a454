#pragma once

#include <stdexcept>
#include <string>

namespace warpforge {

/// Base class for every error the library raises. `is_numerical()` separates
/// numerical failures (singular systems, divergence) from bad input.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what, bool numerical = false)
        : std::runtime_error(what), numerical_(numerical) {}

    bool is_numerical() const noexcept { return numerical_; }

private:
    bool numerical_;
};

/// Shapes or sizes of the arguments disagree.
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Malformed file or argument.
class InputError : public Error {
public:
    using Error::Error;
};

/// Linear system could not be solved (degenerate configuration).
class SingularSystem : public Error {
public:
    explicit SingularSystem(const std::string& what) : Error(what, true) {}
};

/// Robust fitting found no model with enough support.
class NoModel : public Error {
public:
    explicit NoModel(const std::string& what) : Error(what, true) {}
};

/// A metric is undefined for the given mask (empty or too thin overlap).
class UndefinedMetric : public Error {
public:
    explicit UndefinedMetric(const std::string& what) : Error(what, true) {}
};

/// Optimizer divergence and similar runtime failures.
class NumericalFailure : public Error {
public:
    explicit NumericalFailure(const std::string& what) : Error(what, true) {}
};

}  // namespace warpforge
