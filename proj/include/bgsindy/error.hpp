#ifndef BGSINDY_ERROR_HPP
#define BGSINDY_ERROR_HPP

#include <stdexcept>
#include <string>

namespace bgsindy {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: malformed files, unknown names, out-of-range parameters.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// A numerical procedure could not continue (blow-up, degenerate data).
class NumericalError : public Error {
public:
  using Error::Error;
};

} // namespace bgsindy

#endif // BGSINDY_ERROR_HPP
