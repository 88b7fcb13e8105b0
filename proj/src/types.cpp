#include "knnmt/types.hpp"

#include <cmath>

#include "knnmt/error.hpp"

namespace knnmt {

void validate_language_tag(const LanguageTag& tag) {
    KNNMT_REQUIRE(!tag.code.empty(), invalid_argument, "language code must be non-empty");
    KNNMT_REQUIRE(tag.code.size() <= 8, invalid_argument,
                  "language code too long: " + tag.code);
    for (char c : tag.code) {
        KNNMT_REQUIRE(c >= 'a' && c <= 'z', invalid_argument,
                      "language code must be ASCII lowercase: " + tag.code);
    }
}

Token Distribution::argmax() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i) {
        if (probs[i] > probs[best]) best = i;
    }
    return static_cast<Token>(best);
}

void validate_distribution(const Distribution& p) {
    KNNMT_REQUIRE(!p.probs.empty(), invalid_argument, "empty distribution");
    double sum = 0.0;
    for (double v : p.probs) {
        KNNMT_REQUIRE(std::isfinite(v) && v >= 0.0, invalid_argument,
                      "distribution entries must be finite and non-negative");
        sum += v;
    }
    KNNMT_REQUIRE(std::fabs(sum - 1.0) <= 1e-6, invalid_argument,
                  "distribution does not sum to 1");
}

} // namespace knnmt
