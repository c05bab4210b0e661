#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace resilnet {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Spec or loss description breaks an invariant (ids, shapes, coupling rules).
class ValidationError : public Error {
public:
    using Error::Error;
};

class DimensionError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class NotHurwitz : public Error {
public:
    explicit NotHurwitz(const std::string& what, double abscissa = 0.0)
        : Error(what), abscissa_(abscissa) {}
    double abscissa() const { return abscissa_; }

private:
    double abscissa_;
};

class NotFullRowRank : public Error {
public:
    using Error::Error;
};

class NotControllable : public Error {
public:
    using Error::Error;
};

class RiccatiFailure : public Error {
public:
    using Error::Error;
};

class TooManyVertices : public Error {
public:
    using Error::Error;
};

class EmptySet : public Error {
public:
    using Error::Error;
};

class PolicyInfeasible : public Error {
public:
    explicit PolicyInfeasible(const std::string& what, double time = 0.0)
        : Error(what), time_(time) {}
    double time() const { return time_; }

private:
    double time_;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, int line = -1, std::string key = {})
        : Error(what), line_(line), key_(std::move(key)) {}
    int line() const { return line_; }
    const std::string& key() const { return key_; }

private:
    int line_;
    std::string key_;
};

}  // namespace resilnet
