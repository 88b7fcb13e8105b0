#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace knnmt {

// FNV-1a, used for content hashes of artifacts and determinism checks.
class Fnv1a {
  public:
    void update(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            state_ ^= p[i];
            state_ *= 0x100000001b3ull;
        }
    }
    template <typename T>
    void update_value(const T& v) {
        update(&v, sizeof(T));
    }
    std::uint64_t digest() const noexcept { return state_; }

  private:
    std::uint64_t state_ = 0xcbf29ce484222325ull;
};

inline std::uint64_t fnv1a(const void* data, std::size_t n) {
    Fnv1a h;
    h.update(data, n);
    return h.digest();
}

inline std::uint64_t fnv1a(std::string_view s) {
    return fnv1a(s.data(), s.size());
}

std::string hash_hex(std::uint64_t h);

// Content hash of a file on disk ("fnv1a:<16 hex digits>").
std::string hash_file(const std::string& path);

} // namespace knnmt
