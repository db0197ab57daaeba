#ifndef VNFP_ERRORS_HPP
#define VNFP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace vnfp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or arguments (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Data/schema disagreement: file widths, versions, formats (CLI exit code 3).
class SchemaError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// No placement satisfying capacity + anti-affinity exists.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Exhaustive search exceeded its candidate budget.
class BudgetError : public Error {
 public:
  using Error::Error;
};

}  // namespace vnfp

#endif
