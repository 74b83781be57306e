// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace proxsampler {

/// A precondition of an operation was violated by the caller.
class ContractViolation : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

/// A body declaration is inconsistent with its geometry.
class InvalidBody : public ContractViolation
{
  public:
    using ContractViolation::ContractViolation;
};

/// Truncating to a ball smaller than the inscribed ball.
class InvalidTruncation : public ContractViolation
{
  public:
    using ContractViolation::ContractViolation;
};

inline void require(bool condition, const char* message)
{
    if (!condition) {
        throw ContractViolation(message);
    }
}

inline void require(bool condition, const std::string& message)
{
    if (!condition) {
        throw ContractViolation(message);
    }
}

}  // namespace proxsampler
