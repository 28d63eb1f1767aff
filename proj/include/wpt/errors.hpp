#ifndef WPT_ERRORS_HPP_
#define WPT_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace wpt {

// Bad input: malformed files, out-of-range parameters, unknown labels.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical routine failed to reach its tolerance or produced non-finite values.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wpt

#endif  // WPT_ERRORS_HPP_
