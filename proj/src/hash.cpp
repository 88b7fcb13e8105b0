#include "knnmt/hash.hpp"

#include <cstdio>
#include <fstream>
#include <vector>

#include "knnmt/error.hpp"

namespace knnmt {

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

std::string hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    KNNMT_REQUIRE(in.good(), format_error, "cannot open file for hashing: " + path);
    Fnv1a h;
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return "fnv1a:" + hash_hex(h.digest());
}

} // namespace knnmt
