#pragma once

#include <stdexcept>
#include <string>

namespace rscdma
{

// Base class for every error raised by the library. Callers that only care
// about "something numerical went wrong" can catch this one.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class NotPositiveDefinite : public Error
{
public:
    using Error::Error;
};

class DimMismatch : public Error
{
public:
    using Error::Error;
};

class InvalidPower : public Error
{
public:
    using Error::Error;
};

class InvalidPrior : public Error
{
public:
    using Error::Error;
};

class EnumerationTooLarge : public Error
{
public:
    using Error::Error;
};

class IntegrationBudgetExceeded : public Error
{
public:
    using Error::Error;
};

class EstimatorUnreliable : public Error
{
public:
    using Error::Error;
};

class MismatchedScenario : public Error
{
public:
    using Error::Error;
};

class EigPoolTooSmall : public Error
{
public:
    using Error::Error;
};

class ConfigError : public Error
{
public:
    using Error::Error;
};

} // namespace rscdma
