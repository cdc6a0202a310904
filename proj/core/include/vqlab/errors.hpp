#pragma once

#include <stdexcept>
#include <string>

namespace vqlab {

// Invalid user-supplied parameters (bad spec, bad config, bad rate).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Broken precondition inside the library (unsorted input, time regression).
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Probability arguments outside their admissible interval.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Base for failures that depend on the data rather than on the parameters.
class StatisticalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InsufficientDataError : public StatisticalError {
public:
    using StatisticalError::StatisticalError;
};

class DegenerateInputError : public StatisticalError {
public:
    using StatisticalError::StatisticalError;
};

class NoDtsError : public StatisticalError {
public:
    using StatisticalError::StatisticalError;
};

}  // namespace vqlab
