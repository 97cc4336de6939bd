#ifndef MTPS_ERRORS_HPP
#define MTPS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mtps {

    /// Input rejected at an API boundary (dimension mismatch, bad length, ...).
    struct InvalidInput : std::invalid_argument {
        using std::invalid_argument::invalid_argument;
    };

    /// GP hyperparameter training or factorization failed.
    struct ModelFitError : std::runtime_error {
        using std::runtime_error::runtime_error;
    };

    /// A moment computation hit a singular or non-PSD intermediate.
    struct NumericalDegeneracy : std::runtime_error {
        using std::runtime_error::runtime_error;
    };

    struct OptimizerError : std::runtime_error {
        using std::runtime_error::runtime_error;
    };

    /// Persisted state could not be read back; the message names the field.
    struct LoadError : std::runtime_error {
        using std::runtime_error::runtime_error;
    };

    struct ConfigError : std::runtime_error {
        using std::runtime_error::runtime_error;
    };

} // namespace mtps

#endif
