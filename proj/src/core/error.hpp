// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace geode {

// Base for everything thrown by the library. The C API maps these to codes.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape or dimension disagreement between operands.
struct ShapeError : Error {
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// Violated call contract (non-scalar backward, context overflow, ...).
struct ContractError : Error {
    explicit ContractError(const std::string& msg) : Error(msg) {}
};

// Non-finite values, index out of vocabulary, divergence.
struct NumericError : Error {
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

// Bad configuration file or override.
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Filesystem problems, always carrying the offending path.
struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace geode
