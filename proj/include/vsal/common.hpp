#ifndef VSAL_COMMON_HPP
#define VSAL_COMMON_HPP

#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace vsal {

// Dense extents, outermost first. Network tensors are (batch, height, width,
// channels); scalars use shape {1}.
using Shape = std::vector<int>;

inline std::int64_t numel(const Shape& s) {
    std::int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << 'x';
        os << s[i];
    }
    os << ')';
    return os.str();
}

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape/axis mismatches between tensors feeding one op.
struct DimensionError : Error {
    using Error::Error;
};

// Bad values in configuration, out-of-range hyper-parameters.
struct ConfigError : Error {
    using Error::Error;
};

// Wrong API usage (missing gradients, empty sequences, ...).
struct UsageError : Error {
    using Error::Error;
};

// Unreadable or malformed input files.
struct DataError : Error {
    using Error::Error;
};

// Non-finite losses and other numeric breakdowns.
struct NumericError : Error {
    using Error::Error;
};

}  // namespace vsal

#endif
