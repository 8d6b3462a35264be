#ifndef FUNCTREE_ERROR_H_
#define FUNCTREE_ERROR_H_

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace functree {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input data: unreadable files, missing columns, unparseable cells.
class DataError : public Error {
 public:
  using Error::Error;
};

// Model file problems: unknown version, malformed document.
class ModelFormatError : public Error {
 public:
  using Error::Error;
};

// A dataset or model does not conform to the variable schema it is used with.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Violated precondition on an argument.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

using WarningHandler = std::function<void(std::string_view)>;

/// Routes a non-fatal diagnostic. The default handler writes to stderr.
void Warn(std::string_view message);

/// Installs a new handler and returns the previous one. Passing an empty
/// function silences warnings.
WarningHandler SetWarningHandler(WarningHandler handler);

}  // namespace functree

#endif  // FUNCTREE_ERROR_H_
