#ifndef SCT_ERRORS_HPP
#define SCT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sct {

// Malformed or truncated file content. Carries enough context to name the
// offending byte offset where that is known.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// A computation that cannot proceed for numerical reasons (rank-deficient
// basis matrix, singular system, ...).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sct

#endif
