#pragma once

#include <stdexcept>
#include <string>

namespace tamopt {

/// Vector operands whose lengths disagree.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A NaN or Inf reached a public boundary. `field()` names the offending input.
class NumericError : public std::runtime_error {
public:
    NumericError(std::string field, const std::string& what)
        : std::runtime_error(what), m_field(std::move(field)) {}

    const std::string& field() const noexcept { return m_field; }

private:
    std::string m_field;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

} // namespace tamopt
