#pragma once

#include <stdexcept>
#include <string>

namespace phasescout {

/// Precondition violated by the caller (bad index, out-of-range value, shape mismatch).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// A tensor or state with zero norm was handed to an operation that needs to normalize it.
struct DegenerateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A data-structure invariant does not hold (e.g. unnormalized spectrum).
struct InvariantError : std::logic_error {
    using std::logic_error::logic_error;
};

/// A persisted record is missing fields, truncated or fails its checksum.
struct RecordError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The operation declines to run (problem too large, nothing usable to train on, ...).
struct RefusalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace phasescout
