#include "knnmt/datastore.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "knnmt/error.hpp"
#include "knnmt/hash.hpp"

static_assert(std::endian::native == std::endian::little,
              "KDS1 i/o assumes a little-endian host");

namespace knnmt {

using json = nlohmann::json;

// ---------------------------------------------------------------- origins

std::uint16_t OriginTable::add(Origin origin) {
    validate_language_tag(origin.source);
    validate_language_tag(origin.target);
    KNNMT_REQUIRE(!find(origin.source.code, origin.target.code), invalid_argument,
                  "duplicate origin " + origin.source.code + "-" + origin.target.code);
    KNNMT_REQUIRE(entries_.size() < kMaxEntries, capacity_exceeded,
                  "origin table full (65535 entries)");
    entries_.push_back(std::move(origin));
    return static_cast<std::uint16_t>(entries_.size() - 1);
}

std::optional<std::uint16_t> OriginTable::find(const std::string& source_code,
                                               const std::string& target_code) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].source.code == source_code && entries_[i].target.code == target_code) {
            return static_cast<std::uint16_t>(i);
        }
    }
    return std::nullopt;
}

std::uint16_t OriginTable::add_or_find(Origin origin) {
    if (auto id = find(origin.source.code, origin.target.code)) return *id;
    return add(std::move(origin));
}

const Origin& OriginTable::at(std::size_t i) const {
    KNNMT_REQUIRE(i < entries_.size(), invalid_argument, "origin id out of range");
    return entries_[i];
}

// -------------------------------------------------------------- datastore

Datastore::Datastore(std::size_t dim, LanguageTag target_lang)
        : dim_(dim), target_lang_(std::move(target_lang)) {
    KNNMT_REQUIRE(dim_ >= 1, invalid_argument, "datastore dim must be >= 1");
    validate_language_tag(target_lang_);
}

std::uint16_t Datastore::add_origin(Origin origin) {
    KNNMT_REQUIRE(!sealed_, store_sealed, "cannot add origins to a sealed store");
    return origins_.add(std::move(origin));
}

std::uint16_t Datastore::add_or_find_origin(Origin origin) {
    if (auto id = origins_.find(origin.source.code, origin.target.code)) return *id;
    return add_origin(std::move(origin));
}

void Datastore::append(const Entry& entry) {
    KNNMT_REQUIRE(!sealed_, store_sealed, "append on sealed store");
    KNNMT_REQUIRE(entry.key.size() == dim_, invalid_argument,
                  "entry key dimension mismatch");
    KNNMT_REQUIRE(entry.origin < origins_.size(), invalid_argument,
                  "entry origin id not in origin table");
    for (float v : entry.key) {
        KNNMT_REQUIRE(std::isfinite(v), invalid_argument, "entry key must be finite");
    }
    keys_.insert(keys_.end(), entry.key.begin(), entry.key.end());
    values_.push_back(entry.value);
    origin_ids_.push_back(entry.origin);
    sentence_ids_.push_back(entry.sentence_id);
    positions_.push_back(entry.position);
}

void Datastore::seal() {
    sealed_ = true;
}

namespace {
constexpr std::size_t kHeaderBytes = 4 + 1 + 3 + 4 + 8;

std::uint64_t serialized_bytes(std::size_t count, std::size_t dim) {
    return kHeaderBytes + static_cast<std::uint64_t>(count) * (dim * 4 + 4 + 2 + 4 + 2);
}
} // namespace

StoreStats Datastore::stats() const {
    StoreStats s;
    s.count = size();
    s.dim = dim_;
    s.sealed = sealed_;
    s.per_origin.assign(origins_.size(), 0);
    for (std::uint16_t id : origin_ids_) s.per_origin[id]++;
    s.bytes_on_disk = serialized_bytes(s.count, dim_);
    return s;
}

// ------------------------------------------------------------------ build

void build_from_corpus(const Corpus& corpus, const ContextProvider& provider, Datastore& store,
                       std::optional<LanguageTag> source_tag) {
    KNNMT_REQUIRE(provider.dim() == store.dim(), invalid_argument,
                  "provider dimension does not match store");
    KNNMT_REQUIRE(corpus.target_lang == store.target_lang().code, invalid_argument,
                  "corpus target language does not match store");
    KNNMT_REQUIRE(!source_tag || source_tag->code == corpus.source_lang, invalid_argument,
                  "source tag does not match the corpus language");
    Origin origin;
    origin.source = source_tag.value_or(LanguageTag{corpus.source_lang, "", false});
    origin.target = store.target_lang();
    origin.label = corpus.source_lang + "-" + corpus.target_lang;
    std::uint16_t origin_id = store.add_or_find_origin(std::move(origin));

    Entry entry;
    entry.origin = origin_id;
    for (const Sentence& sentence : corpus.sentences) {
        for (std::size_t t = 0; t < sentence.tokens.size(); ++t) {
            entry.key = provider.context(sentence, {sentence.tokens.data(), t});
            entry.value = sentence.tokens[t];
            entry.sentence_id = sentence.id;
            entry.position = static_cast<std::uint16_t>(t);
            store.append(entry);
        }
    }
}

// ------------------------------------------------------------------ merge

Datastore merge(const std::vector<const Datastore*>& stores) {
    KNNMT_REQUIRE(!stores.empty(), invalid_argument, "merge needs at least one store");
    const Datastore& first = *stores.front();
    for (const Datastore* s : stores) {
        KNNMT_REQUIRE(s->sealed(), invalid_state, "merge inputs must be sealed");
        KNNMT_REQUIRE(s->dim() == first.dim(), invalid_argument, "merge inputs mix dims");
        KNNMT_REQUIRE(s->target_lang().code == first.target_lang().code, invalid_argument,
                      "merge inputs mix target languages");
    }

    Datastore out(first.dim(), first.target_lang());
    std::size_t total = 0;
    for (const Datastore* s : stores) total += s->size();
    out.keys_.reserve(total * first.dim());
    out.values_.reserve(total);
    out.origin_ids_.reserve(total);
    out.sentence_ids_.reserve(total);
    out.positions_.reserve(total);

    for (const Datastore* s : stores) {
        // origin ids rewritten against the deduplicated union table
        std::vector<std::uint16_t> remap(s->origins().size());
        for (std::size_t i = 0; i < s->origins().size(); ++i) {
            remap[i] = out.origins_.add_or_find(s->origins().at(i));
        }
        out.keys_.insert(out.keys_.end(), s->keys().begin(), s->keys().end());
        out.values_.insert(out.values_.end(), s->values().begin(), s->values().end());
        out.sentence_ids_.insert(out.sentence_ids_.end(), s->sentence_ids().begin(),
                                 s->sentence_ids().end());
        out.positions_.insert(out.positions_.end(), s->positions().begin(),
                              s->positions().end());
        for (std::uint16_t id : s->origin_ids()) out.origin_ids_.push_back(remap[id]);
    }
    out.seal();
    return out;
}

// ------------------------------------------------------------ persistence

namespace {

json tag_to_json(const LanguageTag& t) {
    return json{{"code", t.code}, {"grouping", t.grouping}, {"bridge", t.is_bridge}};
}

LanguageTag tag_from_json(const json& j) {
    LanguageTag t;
    t.code = j.at("code").get<std::string>();
    t.grouping = j.value("grouping", "");
    t.is_bridge = j.value("bridge", false);
    return t;
}

template <typename T>
void write_block(std::ofstream& out, const std::vector<T>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
void read_block(std::ifstream& in, std::vector<T>& v, std::size_t n) {
    v.resize(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
    KNNMT_REQUIRE(static_cast<std::size_t>(in.gcount()) == n * sizeof(T), format_error,
                  "truncated datastore file");
}

} // namespace

void save(const Datastore& store, const std::string& path) {
    KNNMT_REQUIRE(store.sealed(), invalid_state, "save requires a sealed store");
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        KNNMT_REQUIRE(out.good(), format_error, "cannot open for writing: " + path);
        const char magic[4] = {'K', 'N', 'N', 'D'};
        out.write(magic, 4);
        const unsigned char ver[4] = {1, 0, 0, 0}; // version + 3 reserved
        out.write(reinterpret_cast<const char*>(ver), 4);
        auto dim = static_cast<std::uint32_t>(store.dim());
        auto count = static_cast<std::uint64_t>(store.size());
        out.write(reinterpret_cast<const char*>(&dim), 4);
        out.write(reinterpret_cast<const char*>(&count), 8);
        write_block(out, store.keys());
        write_block(out, store.values());
        write_block(out, store.origin_ids());
        write_block(out, store.sentence_ids());
        write_block(out, store.positions());
        KNNMT_REQUIRE(out.good(), format_error, "write failed: " + path);
    }

    json meta;
    meta["format"] = "KDS1";
    meta["target_lang"] = tag_to_json(store.target_lang());
    json origins = json::array();
    for (const Origin& o : store.origins().entries()) {
        origins.push_back(json{{"source", tag_to_json(o.source)},
                               {"target", tag_to_json(o.target)},
                               {"label", o.label}});
    }
    meta["origins"] = origins;
    meta["provenance"] = store.provenance();
    meta["hash"] = hash_file(path);

    std::ofstream mout(path + ".meta.json", std::ios::trunc);
    KNNMT_REQUIRE(mout.good(), format_error, "cannot open for writing: " + path + ".meta.json");
    mout << meta.dump(2) << "\n";
}

Datastore load(const std::string& path) {
    json meta;
    {
        std::ifstream min(path + ".meta.json");
        KNNMT_REQUIRE(min.good(), format_error, "missing sidecar: " + path + ".meta.json");
        try {
            min >> meta;
        } catch (const json::exception& e) {
            raise(ErrorCode::format_error, std::string("bad sidecar json: ") + e.what());
        }
    }
    KNNMT_REQUIRE(meta.value("format", "") == "KDS1", format_error,
                  "sidecar format is not KDS1");
    KNNMT_REQUIRE(meta.value("hash", "") == hash_file(path), format_error,
                  "content hash mismatch for " + path);

    std::ifstream in(path, std::ios::binary);
    KNNMT_REQUIRE(in.good(), format_error, "cannot open: " + path);
    char magic[4] = {};
    in.read(magic, 4);
    KNNMT_REQUIRE(in.gcount() == 4 && std::memcmp(magic, "KNND", 4) == 0, format_error,
                  "bad magic bytes in " + path);
    unsigned char ver[4] = {};
    in.read(reinterpret_cast<char*>(ver), 4);
    KNNMT_REQUIRE(in.gcount() == 4 && ver[0] == 1, format_error, "unsupported KDS version");
    std::uint32_t dim = 0;
    std::uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&dim), 4);
    in.read(reinterpret_cast<char*>(&count), 8);
    KNNMT_REQUIRE(in.good() && dim >= 1, format_error, "bad KDS header");

    Datastore store(dim, tag_from_json(meta.at("target_lang")));
    try {
        for (const json& o : meta.at("origins")) {
            Origin origin;
            origin.source = tag_from_json(o.at("source"));
            origin.target = tag_from_json(o.at("target"));
            origin.label = o.value("label", "");
            store.origins_.add(std::move(origin));
        }
    } catch (const json::exception& e) {
        raise(ErrorCode::format_error, std::string("bad sidecar origins: ") + e.what());
    }
    store.provenance_ = meta.value("provenance", "");

    auto n = static_cast<std::size_t>(count);
    read_block(in, store.keys_, n * dim);
    read_block(in, store.values_, n);
    read_block(in, store.origin_ids_, n);
    read_block(in, store.sentence_ids_, n);
    read_block(in, store.positions_, n);
    in.peek();
    KNNMT_REQUIRE(in.eof(), format_error, "trailing bytes in " + path);
    for (std::uint16_t id : store.origin_ids_) {
        KNNMT_REQUIRE(id < store.origins_.size(), format_error,
                      "entry origin id outside origin table");
    }
    store.sealed_ = true;
    return store;
}

} // namespace knnmt
