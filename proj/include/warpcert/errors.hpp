#pragma once

#include <stdexcept>
#include <string>

namespace warpcert {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

// non-finite value while evaluating something; carries the abscissa
class EvaluationError : public Error {
public:
    EvaluationError(const std::string& what, double where)
        : Error(what + " at " + std::to_string(where)), abscissa(where) {}
    double abscissa;
};

class InfeasibleError : public Error {
public:
    using Error::Error;
};

class InternalError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// a certified inequality came out with a non-positive margin
class VerificationFailure : public Error {
public:
    VerificationFailure(std::string check_, std::string where_, double margin_)
        : Error(check_ + " violated (" + where_ + "), margin " + std::to_string(margin_)),
          check(std::move(check_)), where(std::move(where_)), margin(margin_) {}
    std::string check;
    std::string where;
    double margin;
};

} // namespace warpcert
