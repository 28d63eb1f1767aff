#ifndef WPT_UNITS_HPP_
#define WPT_UNITS_HPP_

#include <string>
#include <string_view>
#include <vector>

namespace wpt {

// Parses a power such as "3", "3 W", "2.8mW", "0.1 uW" or "0.1 μW" into Watts.
// A bare number is taken to be Watts.
double parse_power(std::string_view text);

// Comma separated list of powers, e.g. "100mW,1W,3W".
std::vector<double> parse_power_list(std::string_view text);

// Formats Watts with the largest suffix that keeps the mantissa >= 1 (W, mW, uW, nW).
std::string format_power(double watts);

}  // namespace wpt

#endif  // WPT_UNITS_HPP_
