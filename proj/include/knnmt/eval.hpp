#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "knnmt/retrieval.hpp"

namespace knnmt {

struct TokenMetrics {
    double accuracy = 0.0; // teacher-forced top-1
    double nll = 0.0;      // mean -log p(gold)
    std::size_t positions = 0;
};

// Teacher-forced scoring of augmented_step against the gold tokens.
TokenMetrics token_metrics(const ContextProvider& provider, const Index* index,
                           const LinearMap* map, const RetrievalParams& params,
                           const Corpus& corpus);

// Corpus BLEU-4 over integer token sequences: add-one smoothing on the
// n > 1 precisions, standard brevity penalty, range [0, 100].
double corpus_bleu(const std::vector<std::vector<Token>>& hypotheses,
                   const std::vector<std::vector<Token>>& references);

struct Grids {
    std::vector<std::size_t> k;
    std::vector<double> lambda;
    std::vector<double> temperature;
};

// k in {16,32,64}, lambda in {0.2..0.7}, T in {10,100}: 36 configurations
Grids paper_grids();

enum class TuneMetric { accuracy, bleu };

struct GridRow {
    RetrievalParams params;
    double metric = 0.0;
    double accuracy = 0.0;
    double nll = 0.0;
};

struct GridResult {
    RetrievalParams best;
    std::vector<GridRow> table;

    std::string table_csv() const;
};

// Evaluates every grid combination on the dev corpus. Ties break toward
// smaller k, then smaller lambda, then smaller T, so the result does not
// depend on grid axis ordering.
GridResult grid_search(const ContextProvider& provider, const Index* index,
                       const LinearMap* map, const Corpus& dev, const Grids& grids,
                       TuneMetric metric = TuneMetric::accuracy);

struct OriginReport {
    struct Row {
        std::uint16_t origin = 0;
        std::string label;
        std::size_t store_count = 0;
        double hit_weight = 0.0; // retrieved occurrences (or probability mass)
        double p_obs = 0.0;
        double p_uni = 0.0;
    };
    std::vector<Row> rows; // indexed by origin id
    double total_hits = 0.0;
    std::size_t total_entries = 0;
};

// P_obs from the retrieved hits of a decode run against `store`; P_uni from
// the store's per-origin entry counts. With mass_weighted each hit counts
// its share of the trace's retrieval softmax instead of 1.
OriginReport origin_analysis(const std::vector<DecodeTrace>& traces, const Datastore& store,
                             bool mass_weighted = false);

// Spearman rank correlation with average-rank tie handling; needs >= 3 points.
double size_quality_correlation(const std::vector<std::pair<double, double>>& points);

struct BenchRow {
    std::size_t store_size = 0;
    std::string index_kind;
    double tokens_per_sec = 0.0;
    double wall_seconds = 0.0;
    std::size_t tokens = 0;
};

struct BenchReport {
    std::vector<BenchRow> rows;          // sorted by store size descending
    std::uint64_t outputs_hash = 0;      // decoded outputs, deterministic
    std::string csv() const;
};

// Greedy-decodes the corpus against each index; one warm-up pass excluded,
// median wall time of `repetitions` timed passes. Decoded outputs must be
// identical across repetitions.
BenchReport throughput_bench(const ContextProvider& provider,
                             const std::vector<const Index*>& indexes, const Corpus& corpus,
                             const RetrievalParams& params, std::size_t repetitions = 3);

} // namespace knnmt
