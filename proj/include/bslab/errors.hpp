#ifndef BSLAB_ERRORS_HPP
#define BSLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace bslab {

// Error categories that callers are expected to branch on. Everything else
// uses the plain std exceptions.

/// Operation asked of a geometry kind that cannot support it.
struct UnsupportedGeometryError : std::invalid_argument {
    explicit UnsupportedGeometryError(const std::string& what)
        : std::invalid_argument(what) {}
};

/// log_map target sits on the cut locus of the base point.
struct CutLocusError : std::domain_error {
    explicit CutLocusError(const std::string& what) : std::domain_error(what) {}
};

/// Boundary normal requested at a corner (two or more active faces).
struct CornerPointError : std::domain_error {
    explicit CornerPointError(const std::string& what) : std::domain_error(what) {}
};

/// Two gridded objects that must share a grid do not.
struct GridMismatchError : std::invalid_argument {
    explicit GridMismatchError(const std::string& what)
        : std::invalid_argument(what) {}
};

/// Input violates a hard constraint of the operation (e.g. non-uniform
/// marginals where uniform ones are required).
struct ConstraintViolationError : std::invalid_argument {
    explicit ConstraintViolationError(const std::string& what)
        : std::invalid_argument(what) {}
};

/// A projection target charges mass where the current measure has none.
struct InfeasibleError : std::runtime_error {
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

/// An estimator has no populated cells to report.
struct InsufficientDataError : std::runtime_error {
    explicit InsufficientDataError(const std::string& what)
        : std::runtime_error(what) {}
};

/// A scheme invariant (positivity, normalisability) broke down.
struct NumericalFailureError : std::runtime_error {
    explicit NumericalFailureError(const std::string& what)
        : std::runtime_error(what) {}
};

/// Configuration file failed schema validation.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bslab

#endif  // BSLAB_ERRORS_HPP
