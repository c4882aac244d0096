#pragma once

#include <stdexcept>
#include <string>

namespace gtvmin {

// Error categories. The CLI and the C API map them onto stable status codes.

/// Invalid arguments, malformed configuration or files with bad content.
class ValidationError : public std::invalid_argument {
public:
  explicit ValidationError(const std::string &what) : std::invalid_argument(what) {}
};

/// Singular linear systems, divergence, non-finite values.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string &what) : std::runtime_error(what) {}
};

/// Missing files, unwritable directories.
class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string &what) : std::runtime_error(what) {}
};

} // namespace gtvmin
