#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace knnmt {

using Token = std::uint32_t;

// Language identity plus the grouping/bridge metadata used for datastore
// composition strategies.
struct LanguageTag {
    std::string code;     // non-empty, <= 8 chars, ASCII lowercase a-z
    std::string grouping; // "" = no grouping
    bool is_bridge = false;
};

void validate_language_tag(const LanguageTag& tag);

inline bool operator==(const LanguageTag& a, const LanguageTag& b) {
    return a.code == b.code && a.grouping == b.grouping && a.is_bridge == b.is_bridge;
}

struct Sentence {
    std::uint32_t id = 0;
    std::vector<Token> tokens;
};

struct Corpus {
    std::string source_lang;
    std::string target_lang;
    bool multiway = false; // equal sentence ids across corpora share token sequences
    std::vector<Sentence> sentences;

    std::size_t total_tokens() const {
        std::size_t n = 0;
        for (const auto& s : sentences) n += s.tokens.size();
        return n;
    }
};

// Probability distribution over the token vocabulary.
struct Distribution {
    std::vector<double> probs;

    std::size_t size() const { return probs.size(); }
    double operator[](std::size_t i) const { return probs[i]; }

    // argmax with ties broken by lower token id
    Token argmax() const;
};

// Throws invalid_argument unless probs are non-negative and sum to 1 within 1e-6.
void validate_distribution(const Distribution& p);

} // namespace knnmt
