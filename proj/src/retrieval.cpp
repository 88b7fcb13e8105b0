#include "knnmt/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "knnmt/error.hpp"

namespace knnmt {

void validate_retrieval_params(const RetrievalParams& params) {
    KNNMT_REQUIRE(params.k >= 1, invalid_argument, "k must be >= 1");
    KNNMT_REQUIRE(params.lambda >= 0.0 && params.lambda <= 1.0, invalid_argument,
                  "lambda must be in [0, 1]");
    KNNMT_REQUIRE(params.temperature > 0.0, invalid_argument, "temperature must be > 0");
}

Distribution knn_distribution(const HitList& hits, double temperature, std::size_t vocab_size) {
    KNNMT_REQUIRE(temperature > 0.0, invalid_argument, "temperature must be > 0");
    KNNMT_REQUIRE(vocab_size >= 1, invalid_argument, "vocab_size must be >= 1");
    KNNMT_REQUIRE(!hits.empty(), empty_neighborhood, "no neighbors retrieved");

    // shift by the min distance: exact softmax shift invariance + stability
    double dmin = hits.front().distance;
    for (const SearchHit& h : hits) dmin = std::min(dmin, h.distance);

    Distribution p;
    p.probs.assign(vocab_size, 0.0);
    double total = 0.0;
    for (const SearchHit& h : hits) {
        KNNMT_REQUIRE(h.token < vocab_size, invalid_argument,
                      "hit token outside the vocabulary");
        double w = std::exp(-(h.distance - dmin) / temperature);
        p.probs[h.token] += w;
        total += w;
    }
    for (double& v : p.probs) v /= total;
    return p;
}

Distribution interpolate(const Distribution& p_knn, const Distribution& p_base, double lambda) {
    KNNMT_REQUIRE(p_knn.size() == p_base.size(), invalid_argument,
                  "distribution sizes differ");
    KNNMT_REQUIRE(lambda >= 0.0 && lambda <= 1.0, invalid_argument, "lambda must be in [0, 1]");
    Distribution out;
    out.probs.resize(p_knn.size());
    for (std::size_t i = 0; i < out.probs.size(); ++i) {
        out.probs[i] = lambda * p_knn.probs[i] + (1.0 - lambda) * p_base.probs[i];
    }
    return out;
}

Distribution augmented_step(const ContextProvider& provider, const Index* index,
                            const LinearMap* map, const RetrievalParams& params,
                            const Sentence& source, std::span<const Token> prefix,
                            HitList* hits_out) {
    validate_retrieval_params(params);
    std::vector<float> ctx = provider.context(source, prefix);
    Distribution base = provider.base_distribution(ctx);
    if (index == nullptr || (params.lambda == 0.0 && hits_out == nullptr)) {
        // interpolation with lambda = 0 is exactly the base distribution
        return base;
    }
    std::vector<float> query = map ? apply_map(*map, ctx) : std::move(ctx);
    HitList hits = index->search(query, params.k);
    if (hits_out) *hits_out = hits;
    if (hits.empty()) return base; // empty store: fall back to the base model
    Distribution knn = knn_distribution(hits, params.temperature, provider.vocab_size());
    return interpolate(knn, base, params.lambda);
}

namespace {

double log_prob(double p) {
    return p > 0.0 ? std::log(p) : kLogFloor;
}

struct Hypothesis {
    std::vector<Token> tokens;
    double score = 0.0;
    bool done = false;
};

// (score desc, tokens lex asc): deterministic total order on finished beams
bool better(const Hypothesis& a, const Hypothesis& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.tokens < b.tokens;
}

} // namespace

std::vector<Token> decode(const ContextProvider& provider, const Index* index,
                          const LinearMap* map, const RetrievalParams& rparams,
                          const DecodeParams& dparams, const Sentence& source,
                          DecodeTrace* trace) {
    KNNMT_REQUIRE(dparams.beam_width >= 1, invalid_argument, "beam_width must be >= 1");
    KNNMT_REQUIRE(dparams.max_length >= 1, invalid_argument, "max_length must be >= 1");
    if (trace) trace->params = rparams;

    std::size_t horizon = dparams.max_length;
    if (auto cap = provider.max_target_length(source)) horizon = std::min(horizon, *cap);
    std::optional<Token> eos = provider.eos_token();

    std::vector<Hypothesis> beams{Hypothesis{}};
    std::vector<Hypothesis> finished;

    for (std::size_t t = 0; t < horizon; ++t) {
        struct Extension {
            double score;
            std::size_t beam;
            Token token;
        };
        std::vector<Extension> extensions;
        bool all_done = true;
        for (std::size_t b = 0; b < beams.size(); ++b) {
            if (beams[b].done) continue;
            all_done = false;
            HitList hits;
            Distribution p = augmented_step(provider, index, map, rparams, source,
                                            beams[b].tokens, trace ? &hits : nullptr);
            if (trace) {
                trace->steps.push_back(TraceStep{source.id, t, b, std::move(hits), 0});
                trace->steps.back().chosen = p.argmax();
            }
            for (std::size_t y = 0; y < p.size(); ++y) {
                extensions.push_back(
                        Extension{beams[b].score + log_prob(p.probs[y]), b, static_cast<Token>(y)});
            }
        }
        if (all_done) break;

        std::sort(extensions.begin(), extensions.end(), [](const Extension& a, const Extension& b) {
            if (a.score != b.score) return a.score > b.score;
            if (a.token != b.token) return a.token < b.token;
            return a.beam < b.beam;
        });

        std::vector<Hypothesis> next;
        for (const Hypothesis& h : beams) {
            if (h.done) next.push_back(h); // finished beams keep competing on score
        }
        std::size_t taken = 0;
        for (const Extension& e : extensions) {
            if (taken == dparams.beam_width) break;
            Hypothesis h = beams[e.beam];
            h.tokens.push_back(e.token);
            h.score = e.score;
            if (eos && e.token == *eos) h.done = true;
            next.push_back(std::move(h));
            taken++;
        }
        std::sort(next.begin(), next.end(), better);
        if (next.size() > dparams.beam_width) next.resize(dparams.beam_width);
        beams = std::move(next);
    }

    for (Hypothesis& h : beams) finished.push_back(std::move(h));
    std::sort(finished.begin(), finished.end(), better);
    std::vector<Token> out = finished.front().tokens;
    if (trace) trace->output = out;
    return out;
}

void save_traces_jsonl(const std::vector<DecodeTrace>& traces, const std::string& path) {
    using json = nlohmann::json;
    std::ofstream out(path, std::ios::trunc);
    KNNMT_REQUIRE(out.good(), format_error, "cannot open for writing: " + path);
    for (const DecodeTrace& trace : traces) {
        json header;
        header["trace_params"] = json{{"k", trace.params.k},
                                      {"lambda", trace.params.lambda},
                                      {"temperature", trace.params.temperature}};
        out << header.dump() << "\n";
        for (const TraceStep& step : trace.steps) {
            json hits = json::array();
            for (const SearchHit& h : step.hits) {
                hits.push_back(json::array({h.entry_index, h.distance, h.token, h.origin}));
            }
            json line{{"sentence_id", step.sentence_id},
                      {"step", step.step},
                      {"beam", step.beam},
                      {"token", step.chosen},
                      {"hits", hits}};
            out << line.dump() << "\n";
        }
        json tail;
        tail["output"] = trace.output;
        out << tail.dump() << "\n";
    }
}

std::vector<DecodeTrace> load_traces_jsonl(const std::string& path) {
    using json = nlohmann::json;
    std::ifstream in(path);
    KNNMT_REQUIRE(in.good(), format_error, "cannot open: " + path);
    std::vector<DecodeTrace> traces;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            if (j.contains("trace_params")) {
                DecodeTrace trace;
                trace.params.k = j["trace_params"].value("k", std::size_t{16});
                trace.params.lambda = j["trace_params"].value("lambda", 0.4);
                trace.params.temperature = j["trace_params"].value("temperature", 10.0);
                traces.push_back(std::move(trace));
            } else if (j.contains("output")) {
                KNNMT_REQUIRE(!traces.empty(), format_error, "trace output before header");
                traces.back().output = j["output"].get<std::vector<Token>>();
            } else {
                KNNMT_REQUIRE(!traces.empty(), format_error, "trace step before header");
                TraceStep step;
                step.sentence_id = j.at("sentence_id").get<std::uint32_t>();
                step.step = j.at("step").get<std::size_t>();
                step.beam = j.value("beam", std::size_t{0});
                step.chosen = j.value("token", Token{0});
                for (const json& h : j.at("hits")) {
                    step.hits.push_back(SearchHit{h.at(0).get<std::size_t>(),
                                                  h.at(1).get<double>(),
                                                  h.at(2).get<Token>(),
                                                  h.at(3).get<std::uint16_t>()});
                }
                traces.back().steps.push_back(std::move(step));
            }
        } catch (const nlohmann::json::exception& e) {
            raise(ErrorCode::format_error, std::string("bad trace line: ") + e.what());
        }
    }
    return traces;
}

} // namespace knnmt
