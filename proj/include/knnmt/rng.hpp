#pragma once

#include <cstdint>
#include <string_view>

#include "knnmt/hash.hpp"

namespace knnmt {

// Counter-based random stream: every draw is a pure function of
// (seed, purpose tag, stream coordinates, index), so generation order and
// thread scheduling cannot change the values.
class RandomStream {
  public:
    RandomStream(std::uint64_t seed, std::string_view tag, std::uint64_t a = 0,
                 std::uint64_t b = 0, std::uint64_t c = 0) {
        Fnv1a h;
        h.update_value(seed);
        h.update(tag.data(), tag.size());
        h.update_value(a);
        h.update_value(b);
        h.update_value(c);
        key_ = h.digest();
    }

    std::uint64_t bits(std::uint64_t index) const {
        // splitmix64 finalizer over a keyed counter
        std::uint64_t z = key_ + (index + 1) * 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform(std::uint64_t index) const {
        return static_cast<double>(bits(index) >> 11) * 0x1.0p-53;
    }

    // uniform integer in [0, n)
    std::uint64_t uniform_int(std::uint64_t index, std::uint64_t n) const {
        return static_cast<std::uint64_t>(uniform(index) * static_cast<double>(n)) % n;
    }

    // standard normal via Box-Muller; draw i consumes raw indices 2i, 2i+1
    double gaussian(std::uint64_t index) const;

  private:
    std::uint64_t key_;
};

} // namespace knnmt
