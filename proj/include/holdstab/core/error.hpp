#pragma once

#include <stdexcept>
#include <string>

namespace holdstab {

/// Malformed dataset content. Carries the offending cycle and field.
class SchemaError : public std::runtime_error {
public:
    SchemaError(std::string cycle_id, std::string field, const std::string& rule)
        : std::runtime_error("cycle '" + cycle_id + "', field '" + field + "': " + rule),
          cycle_id_(std::move(cycle_id)),
          field_(std::move(field)) {}

    const std::string& cycle_id() const noexcept { return cycle_id_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::string cycle_id_;
    std::string field_;
};

/// Invalid user-supplied configuration or arguments.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Inputs that are well-formed but cannot support the requested operation
/// (too few cycles for a split, a stream that does not cover a span, ...).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite values during numerical work.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace holdstab
