#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "knnmt/provider.hpp"
#include "knnmt/types.hpp"

namespace knnmt {

struct LanguageSpec {
    LanguageTag tag;    // grouping carried in the tag
    double alpha = 0.0; // distortion scale, >= 0
};

struct WorldConfig {
    std::size_t dim = 32;
    std::size_t vocab_size = 64;
    std::vector<LanguageSpec> languages;
    double context_sigma = 0.05;    // per-position context noise
    double base_sigma = 0.3;        // base-model embedding corruption
    double base_temperature = 1.0;  // softmax temperature of the toy model
    bool identity_rotations = false; // force every group rotation R_g = I
    std::uint64_t seed = 0;
};

void validate_world_config(const WorldConfig& config);

// Deterministic synthetic multilingual world. Token embeddings e(y) are
// unit-norm with geometrically decaying coordinate scales, so the corrupted
// base model makes a realistic fraction of mistakes that retrieval can fix.
// Languages in one group share an orthogonal factor R_g and differ by a
// small linear distortion: M_l = R_g (I + alpha_l G_l), ||G_l||_2 = 1.
struct World {
    struct LangModel {
        LanguageTag tag;
        double alpha = 0.0;
        std::vector<double> m;          // M_l, d x d row-major
        std::vector<double> lang_embed; // M_l e(y), V x d
        std::vector<double> base_embed; // M_l e_hat(y), V x d
    };

    WorldConfig config;
    std::vector<double> embeddings;      // e(y), V x d, unit rows
    std::vector<double> base_embeddings; // e_hat(y) = e(y) + eta_y
    std::vector<LangModel> langs;

    const LangModel& lang(std::string_view code) const;
    bool has_lang(std::string_view code) const;
    std::uint64_t content_hash() const;
};

World gen_world(const WorldConfig& config);

// Sentences are uniform token sequences keyed only by (world seed,
// sentence_id), so corpora over the same id range are multiway parallel
// across languages. sentence ids are seed_offset .. seed_offset + n - 1.
Corpus gen_corpus(const World& world, std::string_view lang, std::size_t n_sentences,
                  std::size_t mean_length, std::uint64_t seed_offset);

// c = M_l (e(y_t) + eps), eps ~ N(0, sigma^2/d I) keyed by (lang, sentence, t)
std::vector<float> toy_context(const World& world, std::string_view lang,
                               const Sentence& sentence, std::size_t t);

// softmax over y of -||context - M_l e_hat(y)||^2 / tau_base
Distribution toy_base_distribution(const World& world, std::string_view lang,
                                   std::span<const float> context);

class ToyProvider : public ContextProvider {
  public:
    ToyProvider(const World& world, std::string lang);

    std::size_t dim() const override { return world_->config.dim; }
    std::size_t vocab_size() const override { return world_->config.vocab_size; }
    std::vector<float> context(const Sentence& source,
                               std::span<const Token> prefix) const override;
    Distribution base_distribution(std::span<const float> ctx) const override;
    // fixed-horizon convention: the target is as long as the source
    std::optional<std::size_t> max_target_length(const Sentence& source) const override {
        return source.tokens.size();
    }

    const std::string& lang() const { return lang_; }

  private:
    const World* world_;
    std::string lang_;
};

// JSON-lines corpus files: one {"sentence_id": ..., "tokens": [...]} per line.
void save_corpus_jsonl(const Corpus& corpus, const std::string& path);
Corpus load_corpus_jsonl(const std::string& path, std::string source_lang,
                         std::string target_lang);

} // namespace knnmt
