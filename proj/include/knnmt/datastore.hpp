#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "knnmt/provider.hpp"
#include "knnmt/types.hpp"

namespace knnmt {

struct Origin {
    LanguageTag source;
    LanguageTag target;
    std::string label; // human-readable, e.g. "be-en"
};

// Ordered table of bitext origins; entry index is the 16-bit origin id
// stored per datastore entry.
class OriginTable {
  public:
    static constexpr std::size_t kMaxEntries = 65535;

    std::uint16_t add(Origin origin);
    std::optional<std::uint16_t> find(const std::string& source_code,
                                      const std::string& target_code) const;
    std::uint16_t add_or_find(Origin origin);

    std::size_t size() const { return entries_.size(); }
    const Origin& at(std::size_t i) const;
    const std::vector<Origin>& entries() const { return entries_; }

  private:
    std::vector<Origin> entries_;
};

struct Entry {
    std::vector<float> key;    // translation context, length = store dim
    Token value = 0;           // target token
    std::uint16_t origin = 0;  // index into the store's origin table
    std::uint32_t sentence_id = 0;
    std::uint16_t position = 0;
};

struct StoreStats {
    std::size_t count = 0;
    std::size_t dim = 0;
    bool sealed = false;
    std::vector<std::size_t> per_origin; // indexed by origin id
    std::uint64_t bytes_on_disk = 0;     // serialized size of the binary file
};

// Columnar key-value store of (translation context -> target token) plus
// origin tags and (sentence, position) alignment coordinates. Built once,
// sealed, then immutable; sealed stores are safe for concurrent reads.
class Datastore {
  public:
    Datastore(std::size_t dim, LanguageTag target_lang);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return values_.size(); }
    bool sealed() const { return sealed_; }
    const LanguageTag& target_lang() const { return target_lang_; }

    const OriginTable& origins() const { return origins_; }
    std::uint16_t add_origin(Origin origin);             // unsealed only
    std::uint16_t add_or_find_origin(Origin origin);     // unsealed only

    void append(const Entry& entry);
    void seal();

    std::span<const float> key(std::size_t i) const {
        return {keys_.data() + i * dim_, dim_};
    }
    Token value(std::size_t i) const { return values_[i]; }
    std::uint16_t origin_id(std::size_t i) const { return origin_ids_[i]; }
    std::uint32_t sentence_id(std::size_t i) const { return sentence_ids_[i]; }
    std::uint16_t position(std::size_t i) const { return positions_[i]; }

    const std::vector<float>& keys() const { return keys_; }
    const std::vector<Token>& values() const { return values_; }
    const std::vector<std::uint16_t>& origin_ids() const { return origin_ids_; }
    const std::vector<std::uint32_t>& sentence_ids() const { return sentence_ids_; }
    const std::vector<std::uint16_t>& positions() const { return positions_; }

    StoreStats stats() const;

    // free-form provenance recorded in the sidecar metadata
    const std::string& provenance() const { return provenance_; }
    void set_provenance(std::string p) { provenance_ = std::move(p); }

  private:
    friend Datastore merge(const std::vector<const Datastore*>& stores);
    friend Datastore load(const std::string& path);
    friend Datastore remap_store(const Datastore& store, const struct LinearMap& map);

    std::size_t dim_;
    LanguageTag target_lang_;
    OriginTable origins_;
    std::vector<float> keys_;
    std::vector<Token> values_;
    std::vector<std::uint16_t> origin_ids_;
    std::vector<std::uint32_t> sentence_ids_;
    std::vector<std::uint16_t> positions_;
    bool sealed_ = false;
    std::string provenance_;
};

// One entry per target token of the corpus, teacher-forced. The corpus
// origin is added to the store's origin table when absent; source_tag, when
// given, supplies the grouping/bridge metadata for that origin.
void build_from_corpus(const Corpus& corpus, const ContextProvider& provider, Datastore& store,
                       std::optional<LanguageTag> source_tag = std::nullopt);

// Concatenates sealed stores in order; origin tables are deduplicated by
// (source, target) code pair and per-entry origin ids rewritten.
Datastore merge(const std::vector<const Datastore*>& stores);

// Binary "KDS1" file plus <path>.meta.json sidecar. save() requires a sealed
// store; load() verifies magic, version, structure, and content hash.
void save(const Datastore& store, const std::string& path);
Datastore load(const std::string& path);

} // namespace knnmt
