#include "knnmt/rng.hpp"

#include <cmath>
#include <numbers>

namespace knnmt {

double RandomStream::gaussian(std::uint64_t index) const {
    // u1 in (0, 1] so the log is finite
    double u1 = 1.0 - uniform(2 * index);
    double u2 = uniform(2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace knnmt
