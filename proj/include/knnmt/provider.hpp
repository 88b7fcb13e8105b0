#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "knnmt/types.hpp"

namespace knnmt {

// Abstraction over the translation model: produces translation contexts
// f(x, y_<t) and the parametric next-token distribution. The synthetic
// harness supplies the only in-tree implementation; anything that can
// produce contexts of a fixed dimension plugs in here.
class ContextProvider {
  public:
    virtual ~ContextProvider() = default;

    virtual std::size_t dim() const = 0;
    virtual std::size_t vocab_size() const = 0;

    // Translation context for predicting position t = prefix.size().
    virtual std::vector<float> context(const Sentence& source,
                                       std::span<const Token> prefix) const = 0;

    virtual Distribution base_distribution(std::span<const float> ctx) const = 0;

    // End-of-sequence convention. nullopt = fixed-horizon decoding.
    virtual std::optional<Token> eos_token() const { return std::nullopt; }

    // Hard cap on target length for this source, if the model defines one.
    virtual std::optional<std::size_t> max_target_length(const Sentence& source) const {
        (void)source;
        return std::nullopt;
    }
};

} // namespace knnmt
