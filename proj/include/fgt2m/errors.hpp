#pragma once

#include <stdexcept>
#include <string>

namespace fgt2m {

// Base class for all errors raised by the library. The CLI maps any
// fgt2m::Error to a single-line diagnostic and a nonzero exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid construction parameters (e.g. schedule bounds out of range).
class ParameterError : public Error { public: using Error::Error; };

// Step or array index out of range.
class IndexError : public Error { public: using Error::Error; };

// Shape or precondition mismatch between arguments.
class ContractError : public Error { public: using Error::Error; };

// Malformed on-disk data; message includes a byte offset where known.
class FormatError : public Error { public: using Error::Error; };

// Dependency parse violating tree invariants (cycles, multiple roots).
class MalformedParseError : public Error { public: using Error::Error; };

// Caption not generated by the toy grammar.
class UnparseableCaptionError : public Error { public: using Error::Error; };

// Non-finite values encountered mid-computation.
class NumericError : public Error { public: using Error::Error; };

// Invalid user-supplied input (empty caption, too-small feature sets, ...).
class InputError : public Error { public: using Error::Error; };

// Bad or unknown configuration keys / inconsistent settings.
class ConfigError : public Error { public: using Error::Error; };

// A training run failed to reach its required criterion.
class TrainingError : public Error { public: using Error::Error; };

} // namespace fgt2m
