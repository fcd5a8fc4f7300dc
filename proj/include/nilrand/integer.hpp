#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>
#include <vector>

namespace nilrand {

// Arbitrary-precision integer used for every exact computation in the library.
using Integer = mpz_class;
using IntVector = std::vector<Integer>;

inline std::string to_string(const Integer& x) { return x.get_str(); }

// Narrowing conversion; throws std::overflow_error when x does not fit.
std::int64_t to_int64(const Integer& x);

inline Integer abs_value(const Integer& x) { return x < 0 ? Integer(-x) : x; }

}  // namespace nilrand
