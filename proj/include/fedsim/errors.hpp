#pragma once

#include <stdexcept>
#include <string>

namespace fedsim {

struct FedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Vector/matrix size disagreement between operands.
struct DimensionError : FedError {
    using FedError::FedError;
};

// Invalid configuration value; message names the offending field.
struct ConfigError : FedError {
    using FedError::FedError;
};

// Empty or malformed dataset input.
struct DataError : FedError {
    using FedError::FedError;
};

// Aggregation protocol misuse (empty upload set, count mismatch).
struct ProtocolError : FedError {
    using FedError::FedError;
};

// Dirichlet split could not satisfy the non-empty-worker rule.
struct PartitionError : FedError {
    using FedError::FedError;
};

struct IoError : FedError {
    using FedError::FedError;
};

}  // namespace fedsim
