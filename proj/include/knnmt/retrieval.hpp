#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "knnmt/index.hpp"
#include "knnmt/provider.hpp"
#include "knnmt/xmap.hpp"

namespace knnmt {

struct RetrievalParams {
    std::size_t k = 16;
    double lambda = 0.4;      // weight of the retrieval distribution
    double temperature = 10.0;
};

void validate_retrieval_params(const RetrievalParams& params);

struct DecodeParams {
    std::size_t beam_width = 1;
    std::size_t max_length = 64;
};

// log floor substituted for log(0) during beam accumulation
inline constexpr double kLogFloor = -1e30;

// p_kNN(y) proportional to sum over hits of 1[y = token] * exp(-d / T).
// Tokens absent from the hits get probability exactly 0.
Distribution knn_distribution(const HitList& hits, double temperature, std::size_t vocab_size);

// lambda * p_knn + (1 - lambda) * p_base
Distribution interpolate(const Distribution& p_knn, const Distribution& p_base, double lambda);

// One decoding step: context -> (optional map) -> k-NN search -> interpolated
// distribution. A null index or lambda == 0 yields the base distribution;
// an empty neighborhood falls back to the base distribution.
// When hits_out is non-null the retrieved hits are copied there.
Distribution augmented_step(const ContextProvider& provider, const Index* index,
                            const LinearMap* map, const RetrievalParams& params,
                            const Sentence& source, std::span<const Token> prefix,
                            HitList* hits_out = nullptr);

struct TraceStep {
    std::uint32_t sentence_id = 0;
    std::size_t step = 0;
    std::size_t beam = 0;
    HitList hits;
    Token chosen = 0;
};

struct DecodeTrace {
    RetrievalParams params;
    std::vector<TraceStep> steps;
    std::vector<Token> output;
};

// Beam search over augmented_step log-probabilities; beam_width = 1 is
// greedy argmax. Ties break toward the lower token id and the
// lexicographically smaller sequence.
std::vector<Token> decode(const ContextProvider& provider, const Index* index,
                          const LinearMap* map, const RetrievalParams& rparams,
                          const DecodeParams& dparams, const Sentence& source,
                          DecodeTrace* trace = nullptr);

// JSON-lines trace files consumed by the origin analysis: a params header,
// then one line per step with the retrieved hits, one per decoded sentence
// with the output tokens.
void save_traces_jsonl(const std::vector<DecodeTrace>& traces, const std::string& path);
std::vector<DecodeTrace> load_traces_jsonl(const std::string& path);

} // namespace knnmt
