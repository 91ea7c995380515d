#pragma once

#include <stdexcept>
#include <string>

namespace rdro {

struct Error : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

// Bad argument or precondition violated by the caller.
struct InvalidArgument : Error
{
  using Error::Error;
};

// Inconsistent solver configuration (e.g. iteration count above the cap).
struct ConfigError : Error
{
  using Error::Error;
};

// Internal contract breach; indicates a bug rather than bad input.
struct ContractError : Error
{
  using Error::Error;
};

struct ConvergenceError : Error
{
  using Error::Error;
};

} // namespace rdro
