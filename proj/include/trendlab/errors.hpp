#pragma once

#include <stdexcept>
#include <string>

namespace trendlab {

// Error taxonomy mirrors the CLI exit-code contract:
//   ParseError / ValidationError -> 2 (bad input)
//   ConfigError / DataError      -> 3 (bad configuration, empty split, leakage)
//   MismatchError                -> 4 (artifact disagrees with request, e.g. wrong T)
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class MismatchError : public Error {
public:
    using Error::Error;
};

// Undefined metric (zero variance, empty denominator).
class MetricError : public Error {
public:
    using Error::Error;
};

} // namespace trendlab
