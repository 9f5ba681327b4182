#pragma once

#include <stdexcept>
#include <string>

namespace insindy {

/// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values or divergence during a computation (CLI exit code 3).
class NumericalError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

} // namespace insindy
