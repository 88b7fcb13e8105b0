#include "knnmt/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "knnmt/error.hpp"
#include "knnmt/hash.hpp"

namespace knnmt {

TokenMetrics token_metrics(const ContextProvider& provider, const Index* index,
                           const LinearMap* map, const RetrievalParams& params,
                           const Corpus& corpus) {
    validate_retrieval_params(params);
    TokenMetrics m;
    double nll_sum = 0.0;
    std::size_t correct = 0;
    for (const Sentence& sentence : corpus.sentences) {
        for (std::size_t t = 0; t < sentence.tokens.size(); ++t) {
            Distribution p = augmented_step(provider, index, map, params, sentence,
                                            {sentence.tokens.data(), t});
            Token gold = sentence.tokens[t];
            if (p.argmax() == gold) correct++;
            // clamp keeps the mean finite when a gold token has zero mass
            nll_sum += -std::log(std::max(p.probs[gold], 1e-300));
            m.positions++;
        }
    }
    if (m.positions > 0) {
        m.accuracy = static_cast<double>(correct) / static_cast<double>(m.positions);
        m.nll = nll_sum / static_cast<double>(m.positions);
    }
    return m;
}

// ------------------------------------------------------------------- bleu

namespace {

using Ngram = std::vector<Token>;

std::map<Ngram, std::size_t> ngram_counts(const std::vector<Token>& tokens, std::size_t n) {
    std::map<Ngram, std::size_t> counts;
    if (tokens.size() < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        counts[Ngram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                     tokens.begin() + static_cast<std::ptrdiff_t>(i + n))]++;
    }
    return counts;
}

} // namespace

double corpus_bleu(const std::vector<std::vector<Token>>& hypotheses,
                   const std::vector<std::vector<Token>>& references) {
    KNNMT_REQUIRE(!hypotheses.empty(), invalid_argument, "corpus_bleu needs >= 1 pair");
    KNNMT_REQUIRE(hypotheses.size() == references.size(), invalid_argument,
                  "hypothesis/reference count mismatch");

    constexpr std::size_t kMaxOrder = 4;
    std::size_t matched[kMaxOrder] = {0, 0, 0, 0};
    std::size_t total[kMaxOrder] = {0, 0, 0, 0};
    std::size_t hyp_len = 0, ref_len = 0;

    for (std::size_t i = 0; i < hypotheses.size(); ++i) {
        hyp_len += hypotheses[i].size();
        ref_len += references[i].size();
        for (std::size_t n = 1; n <= kMaxOrder; ++n) {
            auto hyp = ngram_counts(hypotheses[i], n);
            auto ref = ngram_counts(references[i], n);
            for (const auto& [gram, count] : hyp) {
                total[n - 1] += count;
                auto it = ref.find(gram);
                if (it != ref.end()) matched[n - 1] += std::min(count, it->second);
            }
        }
    }

    if (matched[0] == 0 || hyp_len == 0) return 0.0;

    // unigram precision unsmoothed; add-one smoothing above
    double log_prec = std::log(static_cast<double>(matched[0]) / static_cast<double>(total[0]));
    for (std::size_t n = 2; n <= kMaxOrder; ++n) {
        log_prec += std::log(static_cast<double>(matched[n - 1] + 1) /
                             static_cast<double>(total[n - 1] + 1));
    }
    log_prec /= static_cast<double>(kMaxOrder);

    double bp = 1.0;
    if (hyp_len < ref_len) {
        bp = std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
    }
    return 100.0 * bp * std::exp(log_prec);
}

// ------------------------------------------------------------ grid search

Grids paper_grids() {
    return Grids{{16, 32, 64}, {0.2, 0.3, 0.4, 0.5, 0.6, 0.7}, {10.0, 100.0}};
}

std::string GridResult::table_csv() const {
    std::ostringstream out;
    out << "k,lambda,temperature,metric,accuracy,nll\n";
    char buf[160];
    for (const GridRow& row : table) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", row.params.k,
                      row.params.lambda, row.params.temperature, row.metric, row.accuracy,
                      row.nll);
        out << buf;
    }
    return out.str();
}

GridResult grid_search(const ContextProvider& provider, const Index* index,
                       const LinearMap* map, const Corpus& dev, const Grids& grids,
                       TuneMetric metric) {
    KNNMT_REQUIRE(!grids.k.empty() && !grids.lambda.empty() && !grids.temperature.empty(),
                  invalid_argument, "grid axes must be non-empty");

    GridResult result;
    bool have_best = false;
    double best_score = 0.0;
    auto key = [](const RetrievalParams& p) {
        return std::make_tuple(p.k, p.lambda, p.temperature);
    };
    for (std::size_t k : grids.k) {
        for (double lambda : grids.lambda) {
            for (double temperature : grids.temperature) {
                RetrievalParams params{k, lambda, temperature};
                TokenMetrics tm = token_metrics(provider, index, map, params, dev);
                double score = tm.accuracy;
                if (metric == TuneMetric::bleu) {
                    // greedy decode of the dev corpus against its references
                    std::vector<std::vector<Token>> hyps, refs;
                    DecodeParams dp{1, 65535};
                    for (const Sentence& s : dev.sentences) {
                        hyps.push_back(decode(provider, index, map, params, dp, s));
                        refs.push_back(s.tokens);
                    }
                    score = corpus_bleu(hyps, refs);
                }
                result.table.push_back(GridRow{params, score, tm.accuracy, tm.nll});

                // ties: smaller k, then smaller lambda, then smaller T, so the
                // winner does not depend on grid axis ordering
                bool wins = !have_best || score > best_score ||
                            (score == best_score && key(params) < key(result.best));
                if (wins) {
                    result.best = params;
                    best_score = score;
                    have_best = true;
                }
            }
        }
    }
    return result;
}

// ---------------------------------------------------------------- origins

OriginReport origin_analysis(const std::vector<DecodeTrace>& traces, const Datastore& store,
                             bool mass_weighted) {
    StoreStats stats = store.stats();
    OriginReport report;
    report.total_entries = stats.count;
    report.rows.resize(store.origins().size());
    for (std::size_t o = 0; o < store.origins().size(); ++o) {
        OriginReport::Row& row = report.rows[o];
        row.origin = static_cast<std::uint16_t>(o);
        row.label = store.origins().at(o).label;
        row.store_count = stats.per_origin[o];
        if (stats.count > 0) {
            row.p_uni = static_cast<double>(row.store_count) / static_cast<double>(stats.count);
        }
    }

    for (const DecodeTrace& trace : traces) {
        for (const TraceStep& step : trace.steps) {
            double dmin = HUGE_VAL, total_w = 0.0;
            if (mass_weighted && !step.hits.empty()) {
                for (const SearchHit& h : step.hits) dmin = std::min(dmin, h.distance);
                for (const SearchHit& h : step.hits) {
                    total_w += std::exp(-(h.distance - dmin) / trace.params.temperature);
                }
            }
            for (const SearchHit& h : step.hits) {
                KNNMT_REQUIRE(h.origin < report.rows.size(), invalid_argument,
                              "trace origin id unknown to this store");
                double w = mass_weighted
                        ? std::exp(-(h.distance - dmin) / trace.params.temperature) / total_w
                        : 1.0;
                report.rows[h.origin].hit_weight += w;
                report.total_hits += w;
            }
        }
    }
    if (report.total_hits > 0.0) {
        for (OriginReport::Row& row : report.rows) {
            row.p_obs = row.hit_weight / report.total_hits;
        }
    }
    return report;
}

// --------------------------------------------------------------- spearman

namespace {

std::vector<double> average_ranks(const std::vector<double>& values) {
    std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) j++;
        double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

} // namespace

double size_quality_correlation(const std::vector<std::pair<double, double>>& points) {
    KNNMT_REQUIRE(points.size() >= 3, invalid_argument, "correlation needs >= 3 points");
    std::vector<double> xs, ys;
    xs.reserve(points.size());
    ys.reserve(points.size());
    for (const auto& [x, y] : points) {
        xs.push_back(x);
        ys.push_back(y);
    }
    std::vector<double> rx = average_ranks(xs);
    std::vector<double> ry = average_ranks(ys);

    double n = static_cast<double>(points.size());
    double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double num = 0.0, dx = 0.0, dy = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    KNNMT_REQUIRE(dx > 0.0 && dy > 0.0, invalid_argument,
                  "correlation undefined for a constant series");
    return num / std::sqrt(dx * dy);
}

// ------------------------------------------------------------------ bench

std::string BenchReport::csv() const {
    std::ostringstream out;
    out << "store_size,index_kind,tokens_per_sec,wall_seconds,tokens\n";
    char buf[160];
    for (const BenchRow& row : rows) {
        std::snprintf(buf, sizeof(buf), "%zu,%s,%.6g,%.6g,%zu\n", row.store_size,
                      row.index_kind.c_str(), row.tokens_per_sec, row.wall_seconds, row.tokens);
        out << buf;
    }
    return out.str();
}

BenchReport throughput_bench(const ContextProvider& provider,
                             const std::vector<const Index*>& indexes, const Corpus& corpus,
                             const RetrievalParams& params, std::size_t repetitions) {
    KNNMT_REQUIRE(!corpus.sentences.empty(), invalid_argument, "bench needs a non-empty corpus");
    KNNMT_REQUIRE(!indexes.empty(), invalid_argument, "bench needs >= 1 index");
    KNNMT_REQUIRE(repetitions >= 3, invalid_argument, "bench needs >= 3 repetitions");

    BenchReport report;
    Fnv1a outputs;
    DecodeParams dp{1, 65535};

    for (const Index* index : indexes) {
        auto run_once = [&]() {
            std::vector<std::vector<Token>> out;
            out.reserve(corpus.sentences.size());
            for (const Sentence& s : corpus.sentences) {
                out.push_back(decode(provider, index, nullptr, params, dp, s));
            }
            return out;
        };

        std::vector<std::vector<Token>> reference = run_once(); // warm-up, untimed
        std::size_t tokens = 0;
        for (const auto& s : reference) tokens += s.size();

        std::vector<double> times;
        for (std::size_t rep = 0; rep < repetitions; ++rep) {
            auto start = std::chrono::steady_clock::now();
            std::vector<std::vector<Token>> out = run_once();
            auto stop = std::chrono::steady_clock::now();
            KNNMT_REQUIRE(out == reference, invalid_state,
                          "bench decode outputs differ across repetitions");
            times.push_back(std::chrono::duration<double>(stop - start).count());
        }
        std::sort(times.begin(), times.end());
        double median = times[times.size() / 2];

        for (const auto& s : reference) {
            outputs.update(s.data(), s.size() * sizeof(Token));
        }

        BenchRow row;
        row.store_size = index->size();
        row.index_kind = index->kind() == IndexParams::Kind::flat ? "flat" : "ivf";
        row.wall_seconds = median;
        row.tokens = tokens;
        row.tokens_per_sec = median > 0.0 ? static_cast<double>(tokens) / median : 0.0;
        report.rows.push_back(std::move(row));
    }

    std::stable_sort(report.rows.begin(), report.rows.end(),
                     [](const BenchRow& a, const BenchRow& b) {
                         return a.store_size > b.store_size;
                     });
    report.outputs_hash = outputs.digest();
    return report;
}

} // namespace knnmt
