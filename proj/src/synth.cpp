#include "knnmt/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <Eigen/Dense>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include "knnmt/error.hpp"
#include "knnmt/rng.hpp"

namespace knnmt {

using json = nlohmann::json;
using Matrix = Eigen::MatrixXd;

namespace {

// Coordinate scales of the true embeddings decay geometrically, which packs
// the vocabulary onto a low effective dimension. That keeps the corrupted
// base model imperfect at the default sigma_base while same-token retrieval
// stays easy at the default context noise.
constexpr double kEmbedDecay = 0.45;

Matrix gaussian_matrix(const RandomStream& stream, std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    stream.gaussian(r * cols + c);
        }
    }
    return m;
}

// canonical Q factor: column signs fixed by the R diagonal
Matrix random_orthogonal(const RandomStream& stream, std::size_t d) {
    Matrix g = gaussian_matrix(stream, d, d);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (std::size_t j = 0; j < d; ++j) {
        auto jj = static_cast<Eigen::Index>(j);
        if (r(jj, jj) < 0) q.col(jj) = -q.col(jj);
    }
    return q;
}

} // namespace

void validate_world_config(const WorldConfig& config) {
    KNNMT_REQUIRE(config.dim >= 2, invalid_argument, "world dim must be >= 2");
    KNNMT_REQUIRE(config.vocab_size >= 2, invalid_argument, "vocab_size must be >= 2");
    KNNMT_REQUIRE(config.context_sigma >= 0.0, invalid_argument, "context sigma must be >= 0");
    KNNMT_REQUIRE(config.base_sigma >= 0.0, invalid_argument, "base sigma must be >= 0");
    KNNMT_REQUIRE(config.base_temperature > 0.0, invalid_argument,
                  "base temperature must be > 0");
    std::set<std::string> codes;
    for (const LanguageSpec& spec : config.languages) {
        validate_language_tag(spec.tag);
        KNNMT_REQUIRE(spec.alpha >= 0.0, invalid_argument, "alpha must be >= 0");
        KNNMT_REQUIRE(codes.insert(spec.tag.code).second, invalid_argument,
                      "duplicate language code: " + spec.tag.code);
    }
}

const World::LangModel& World::lang(std::string_view code) const {
    for (const LangModel& l : langs) {
        if (l.tag.code == code) return l;
    }
    raise(ErrorCode::invalid_argument, "unknown language: " + std::string(code));
}

bool World::has_lang(std::string_view code) const {
    for (const LangModel& l : langs) {
        if (l.tag.code == code) return true;
    }
    return false;
}

std::uint64_t World::content_hash() const {
    Fnv1a h;
    h.update_value(config.dim);
    h.update_value(config.vocab_size);
    h.update_value(config.seed);
    auto update_vec = [&h](const std::vector<double>& v) {
        h.update(v.data(), v.size() * sizeof(double));
    };
    update_vec(embeddings);
    update_vec(base_embeddings);
    for (const LangModel& l : langs) {
        h.update(l.tag.code.data(), l.tag.code.size());
        update_vec(l.m);
        update_vec(l.lang_embed);
        update_vec(l.base_embed);
    }
    return h.digest();
}

World gen_world(const WorldConfig& config) {
    validate_world_config(config);
    const std::size_t d = config.dim;
    const std::size_t v = config.vocab_size;

    World world;
    world.config = config;

    Matrix embed(d, v); // column y = e(y)
    for (std::size_t y = 0; y < v; ++y) {
        RandomStream stream(config.seed, "embed", y);
        double scale = 1.0;
        for (std::size_t j = 0; j < d; ++j) {
            embed(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(y)) =
                    stream.gaussian(j) * scale;
            scale *= kEmbedDecay;
        }
        embed.col(static_cast<Eigen::Index>(y)).normalize();
    }

    Matrix base = embed;
    if (config.base_sigma > 0.0) {
        double s = config.base_sigma / std::sqrt(static_cast<double>(d));
        for (std::size_t y = 0; y < v; ++y) {
            RandomStream stream(config.seed, "base-noise", y);
            for (std::size_t j = 0; j < d; ++j) {
                base(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(y)) +=
                        stream.gaussian(j) * s;
            }
        }
    }

    world.embeddings.resize(v * d);
    world.base_embeddings.resize(v * d);
    for (std::size_t y = 0; y < v; ++y) {
        for (std::size_t j = 0; j < d; ++j) {
            world.embeddings[y * d + j] =
                    embed(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(y));
            world.base_embeddings[y * d + j] =
                    base(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(y));
        }
    }

    for (const LanguageSpec& spec : config.languages) {
        Matrix rot;
        if (config.identity_rotations) {
            rot = Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        } else {
            RandomStream stream(config.seed, "group-rot", fnv1a(spec.tag.grouping));
            rot = random_orthogonal(stream, d);
        }
        Matrix m = rot;
        if (spec.alpha > 0.0) {
            RandomStream stream(config.seed, "lang-distort", fnv1a(spec.tag.code));
            Matrix g = gaussian_matrix(stream, d, d);
            double spectral = Eigen::JacobiSVD<Matrix>(g).singularValues()(0);
            g /= spectral; // unit spectral norm
            m = rot * (Matrix::Identity(static_cast<Eigen::Index>(d),
                                        static_cast<Eigen::Index>(d)) +
                       spec.alpha * g);
        }

        World::LangModel lang;
        lang.tag = spec.tag;
        lang.alpha = spec.alpha;
        lang.m.resize(d * d);
        for (std::size_t r = 0; r < d; ++r) {
            for (std::size_t c = 0; c < d; ++c) {
                lang.m[r * d + c] =
                        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
            }
        }
        Matrix le = m * embed;  // column y = M e(y)
        Matrix be = m * base;
        lang.lang_embed.resize(v * d);
        lang.base_embed.resize(v * d);
        for (std::size_t y = 0; y < v; ++y) {
            for (std::size_t j = 0; j < d; ++j) {
                lang.lang_embed[y * d + j] =
                        le(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(y));
                lang.base_embed[y * d + j] =
                        be(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(y));
            }
        }
        world.langs.push_back(std::move(lang));
    }
    return world;
}

Corpus gen_corpus(const World& world, std::string_view lang, std::size_t n_sentences,
                  std::size_t mean_length, std::uint64_t seed_offset) {
    const World::LangModel& lm = world.lang(lang); // throws on unknown language
    KNNMT_REQUIRE(mean_length >= 3, invalid_argument, "mean_length must be >= 3");
    KNNMT_REQUIRE(mean_length <= 32767, invalid_argument, "mean_length too large");

    Corpus corpus;
    corpus.source_lang = lm.tag.code;
    corpus.target_lang = "en";
    corpus.multiway = true;
    corpus.sentences.reserve(n_sentences);

    const std::uint64_t v = world.config.vocab_size;
    for (std::size_t i = 0; i < n_sentences; ++i) {
        std::uint64_t sid = seed_offset + i;
        // sequences depend only on (seed, sentence id): multiway parallel
        RandomStream len_stream(world.config.seed, "corpus-len", sid);
        std::size_t lo = 3, hi = 2 * mean_length - 3;
        auto length = static_cast<std::size_t>(lo + len_stream.uniform_int(0, hi - lo + 1));
        RandomStream tok_stream(world.config.seed, "corpus-tok", sid);
        Sentence s;
        s.id = static_cast<std::uint32_t>(sid);
        s.tokens.resize(length);
        for (std::size_t t = 0; t < length; ++t) {
            s.tokens[t] = static_cast<Token>(tok_stream.uniform_int(t, v));
        }
        corpus.sentences.push_back(std::move(s));
    }
    return corpus;
}

std::vector<float> toy_context(const World& world, std::string_view lang,
                               const Sentence& sentence, std::size_t t) {
    const World::LangModel& lm = world.lang(lang);
    KNNMT_REQUIRE(t < sentence.tokens.size(), invalid_argument,
                  "position out of range for sentence");
    const std::size_t d = world.config.dim;
    Token y = sentence.tokens[t];
    KNNMT_REQUIRE(y < world.config.vocab_size, invalid_argument, "token outside vocabulary");

    std::vector<float> out(d);
    const double* my = lm.lang_embed.data() + static_cast<std::size_t>(y) * d;
    if (world.config.context_sigma == 0.0) {
        for (std::size_t j = 0; j < d; ++j) out[j] = static_cast<float>(my[j]);
        return out;
    }
    RandomStream stream(world.config.seed, "ctx-noise", fnv1a(lang), sentence.id, t);
    std::vector<double> eps(d);
    double s = world.config.context_sigma / std::sqrt(static_cast<double>(d));
    for (std::size_t j = 0; j < d; ++j) eps[j] = stream.gaussian(j) * s;
    for (std::size_t r = 0; r < d; ++r) {
        double acc = my[r];
        const double* row = lm.m.data() + r * d;
        for (std::size_t c = 0; c < d; ++c) acc += row[c] * eps[c];
        out[r] = static_cast<float>(acc);
    }
    return out;
}

Distribution toy_base_distribution(const World& world, std::string_view lang,
                                   std::span<const float> context) {
    const World::LangModel& lm = world.lang(lang);
    const std::size_t d = world.config.dim;
    const std::size_t v = world.config.vocab_size;
    KNNMT_REQUIRE(context.size() == d, invalid_argument, "context dimension mismatch");

    std::vector<double> neg(v);
    double best = -HUGE_VAL;
    for (std::size_t y = 0; y < v; ++y) {
        const double* ey = lm.base_embed.data() + y * d;
        double dist = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double diff = static_cast<double>(context[j]) - ey[j];
            dist += diff * diff;
        }
        neg[y] = -dist / world.config.base_temperature;
        best = std::max(best, neg[y]);
    }
    Distribution p;
    p.probs.resize(v);
    double total = 0.0;
    for (std::size_t y = 0; y < v; ++y) {
        p.probs[y] = std::exp(neg[y] - best);
        total += p.probs[y];
    }
    for (double& x : p.probs) x /= total;
    return p;
}

ToyProvider::ToyProvider(const World& world, std::string lang)
        : world_(&world), lang_(std::move(lang)) {
    KNNMT_REQUIRE(world.has_lang(lang_), invalid_argument, "unknown language: " + lang_);
}

std::vector<float> ToyProvider::context(const Sentence& source,
                                        std::span<const Token> prefix) const {
    // toy contexts depend on the source and the position only
    return toy_context(*world_, lang_, source, prefix.size());
}

Distribution ToyProvider::base_distribution(std::span<const float> ctx) const {
    return toy_base_distribution(*world_, lang_, ctx);
}

void save_corpus_jsonl(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    KNNMT_REQUIRE(out.good(), format_error, "cannot open for writing: " + path);
    for (const Sentence& s : corpus.sentences) {
        json line;
        line["sentence_id"] = s.id;
        line["tokens"] = s.tokens;
        out << line.dump() << "\n";
    }
}

Corpus load_corpus_jsonl(const std::string& path, std::string source_lang,
                         std::string target_lang) {
    std::ifstream in(path);
    KNNMT_REQUIRE(in.good(), format_error, "cannot open: " + path);
    Corpus corpus;
    corpus.source_lang = std::move(source_lang);
    corpus.target_lang = std::move(target_lang);
    corpus.multiway = true;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            Sentence s;
            s.id = j.at("sentence_id").get<std::uint32_t>();
            s.tokens = j.at("tokens").get<std::vector<Token>>();
            corpus.sentences.push_back(std::move(s));
        } catch (const json::exception& e) {
            raise(ErrorCode::format_error, std::string("bad corpus line: ") + e.what());
        }
    }
    return corpus;
}

} // namespace knnmt
