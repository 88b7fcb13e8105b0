#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "knnmt/datastore.hpp"
#include "knnmt/error.hpp"
#include "knnmt/hash.hpp"
#include "knnmt/synth.hpp"
#include "support/oracles.hpp"

using namespace knnmt;

namespace {

Entry make_entry(std::vector<float> key, Token value, std::uint32_t sid = 0,
                 std::uint16_t pos = 0) {
    Entry e;
    e.key = std::move(key);
    e.value = value;
    e.origin = 0;
    e.sentence_id = sid;
    e.position = pos;
    return e;
}

Datastore two_entry_store() {
    Datastore s(2, LanguageTag{"en", "", false});
    s.add_origin(Origin{LanguageTag{"be", "", false}, s.target_lang(), "be-en"});
    s.append(make_entry({1.0f, 0.0f}, 3));
    s.append(make_entry({0.0f, 1.0f}, 4, 0, 1));
    return s;
}

} // namespace

TEST_CASE("create_store basics") {
    Datastore s(32, LanguageTag{"en", "", false});
    CHECK(s.size() == 0);
    CHECK(s.dim() == 32);
    CHECK_FALSE(s.sealed());

    Datastore one(1, LanguageTag{"en", "", false});
    CHECK(one.dim() == 1);

    CHECK_THROWS_AS(Datastore(0, LanguageTag{"en", "", false}), Error);
    try {
        Datastore bad(0, LanguageTag{"en", "", false});
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::invalid_argument);
    }
}

TEST_CASE("language tag validation") {
    CHECK_THROWS_AS(Datastore(4, LanguageTag{"", "", false}), Error);
    CHECK_THROWS_AS(Datastore(4, LanguageTag{"toolonglang", "", false}), Error);
    CHECK_THROWS_AS(Datastore(4, LanguageTag{"EN", "", false}), Error);
    CHECK_THROWS_AS(Datastore(4, LanguageTag{"e1", "", false}), Error);
    CHECK_NOTHROW(Datastore(4, LanguageTag{"en", "", false}));
}

TEST_CASE("append counts, duplicates, and error paths") {
    Datastore s(2, LanguageTag{"en", "", false});
    s.add_origin(Origin{LanguageTag{"be", "", false}, s.target_lang(), "be-en"});

    s.append(make_entry({0.5f, 0.5f}, 7));
    CHECK(s.size() == 1);
    CHECK(s.value(0) == 7);

    // duplicates are kept verbatim
    s.append(make_entry({0.5f, 0.5f}, 7));
    CHECK(s.size() == 2);
    CHECK(s.key(0)[0] == s.key(1)[0]);

    // wrong dimension leaves the store unchanged
    CHECK_THROWS_AS(s.append(make_entry({0.5f}, 7)), Error);
    CHECK(s.size() == 2);

    // unknown origin
    Entry bad = make_entry({0.f, 0.f}, 1);
    bad.origin = 5;
    CHECK_THROWS_AS(s.append(bad), Error);

    // non-finite key
    CHECK_THROWS_AS(s.append(make_entry({HUGE_VALF, 0.f}, 1)), Error);

    s.seal();
    try {
        s.append(make_entry({0.f, 0.f}, 1));
        FAIL("append on sealed store must throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::store_sealed);
    }
    CHECK(s.size() == 2);
}

TEST_CASE("origin table rejects duplicates and enforces capacity semantics") {
    OriginTable table;
    LanguageTag en{"en", "", false};
    table.add(Origin{LanguageTag{"be", "", false}, en, "be-en"});
    CHECK_THROWS_AS(table.add(Origin{LanguageTag{"be", "", false}, en, "again"}), Error);
    CHECK(table.size() == 1);
    CHECK(table.find("be", "en").has_value());
    CHECK_FALSE(table.find("ru", "en").has_value());
}

TEST_CASE("build_from_corpus appends one entry per target token") {
    WorldConfig cfg;
    cfg.dim = 16;
    cfg.vocab_size = 8;
    cfg.seed = 9;
    cfg.languages.push_back(LanguageSpec{LanguageTag{"aa", "g", false}, 0.0});
    World world = gen_world(cfg);
    ToyProvider provider(world, "aa");

    Corpus corpus;
    corpus.source_lang = "aa";
    corpus.target_lang = "en";
    corpus.sentences = {Sentence{0, {1, 2, 3, 4}}, Sentence{1, {5, 6, 0, 1, 2}},
                        Sentence{2, {7, 7, 7, 1, 2, 3}}};

    Datastore store(16, LanguageTag{"en", "", false});
    build_from_corpus(corpus, provider, store);
    CHECK(store.size() == 15); // 4 + 5 + 6

    // empty corpus adds nothing
    Corpus empty;
    empty.source_lang = "aa";
    empty.target_lang = "en";
    Datastore store2(16, LanguageTag{"en", "", false});
    build_from_corpus(empty, provider, store2);
    CHECK(store2.size() == 0);

    // stored key equals the provider context recomputed independently
    Corpus gen = gen_corpus(world, "aa", 10, 5, 0);
    Datastore store3(16, LanguageTag{"en", "", false});
    build_from_corpus(gen, provider, store3);
    std::vector<float> expected = toy_context(world, "aa", gen.sentences[0], 0);
    CHECK(store3.sentence_id(0) == 0);
    CHECK(store3.position(0) == 0);
    for (std::size_t j = 0; j < 16; ++j) CHECK(store3.key(0)[j] == expected[j]);

    // dimension mismatch
    Datastore narrow(8, LanguageTag{"en", "", false});
    CHECK_THROWS_AS(build_from_corpus(gen, provider, narrow), Error);
}

TEST_CASE("merge concatenates, rewrites origins, and checks inputs") {
    Datastore a = oracle::random_store(100, 4, 1, 1);
    Datastore b = oracle::random_store(50, 4, 2, 1);
    // distinct origins: rebuild b with another code
    Datastore b2(4, LanguageTag{"en", "", false});
    b2.add_origin(Origin{LanguageTag{"ru", "", false}, b2.target_lang(), "ru-en"});
    for (std::size_t i = 0; i < b.size(); ++i) {
        Entry e;
        e.key.assign(b.key(i).begin(), b.key(i).end());
        e.value = b.value(i);
        e.origin = 0;
        e.sentence_id = b.sentence_id(i);
        e.position = b.position(i);
        b2.append(e);
    }
    b2.seal();

    Datastore merged = merge({&a, &b2});
    CHECK(merged.size() == 150);
    CHECK(merged.sealed());
    StoreStats stats = merged.stats();
    REQUIRE(stats.per_origin.size() == 2);
    CHECK(stats.per_origin[0] == 100);
    CHECK(stats.per_origin[1] == 50);

    // input order preserved
    CHECK(merged.value(0) == a.value(0));
    CHECK(merged.value(100) == b2.value(0));
    for (std::size_t j = 0; j < 4; ++j) CHECK(merged.key(100)[j] == b2.key(0)[j]);

    // single-input merge: identical content
    Datastore same = merge({&a});
    CHECK(same.size() == a.size());
    CHECK(same.keys() == a.keys());
    CHECK(same.values() == a.values());

    // shared origins are deduplicated
    Datastore c = oracle::random_store(30, 4, 3, 1);
    Datastore ac = merge({&a, &c});
    CHECK(ac.origins().size() == 1);
    CHECK(ac.stats().per_origin[0] == 130);

    // mixed dims / targets / unsealed rejected
    Datastore wrong_dim = oracle::random_store(10, 5, 4, 1);
    CHECK_THROWS_AS(merge({&a, &wrong_dim}), Error);
    Datastore unsealed(4, LanguageTag{"en", "", false});
    unsealed.add_origin(Origin{LanguageTag{"xx", "", false}, unsealed.target_lang(), "xx-en"});
    CHECK_THROWS_AS(merge({&a, &unsealed}), Error);
    CHECK_THROWS_AS(merge({}), Error);

    Datastore other_target(4, LanguageTag{"de", "", false});
    other_target.add_origin(
            Origin{LanguageTag{"xx", "", false}, other_target.target_lang(), "xx-de"});
    other_target.seal();
    CHECK_THROWS_AS(merge({&a, &other_target}), Error);
}

TEST_CASE("merge count is additive and content-associative") {
    Datastore a = oracle::random_store(40, 3, 10, 2);
    Datastore b = oracle::random_store(25, 3, 11, 1);
    Datastore c = oracle::random_store(13, 3, 12, 3);

    Datastore ab = merge({&a, &b});
    Datastore ab_c = merge({&ab, &c});
    Datastore abc = merge({&a, &b, &c});
    CHECK(ab_c.size() == a.size() + b.size() + c.size());
    CHECK(abc.size() == ab_c.size());

    // same multiset of (key, value, origin-language) triples
    auto triples = [](const Datastore& s) {
        std::vector<std::tuple<std::vector<float>, Token, std::string>> out;
        for (std::size_t i = 0; i < s.size(); ++i) {
            out.emplace_back(std::vector<float>(s.key(i).begin(), s.key(i).end()), s.value(i),
                             s.origins().at(s.origin_id(i)).source.code);
        }
        std::sort(out.begin(), out.end());
        return out;
    };
    CHECK(triples(ab_c) == triples(abc));
}

TEST_CASE("save/load round-trip is bit-exact") {
    oracle::TempDir dir("datastore_io");

    Datastore s = two_entry_store();
    s.append(make_entry({0.25f, -0.75f}, 9, 1, 0));
    s.seal();
    std::string path = dir.file("small.kds");
    save(s, path);

    Datastore r = load(path);
    CHECK(r.size() == s.size());
    CHECK(r.dim() == s.dim());
    CHECK(r.sealed());
    CHECK(r.keys() == s.keys());
    CHECK(r.values() == s.values());
    CHECK(r.origin_ids() == s.origin_ids());
    CHECK(r.sentence_ids() == s.sentence_ids());
    CHECK(r.positions() == s.positions());
    CHECK(r.target_lang().code == "en");
    CHECK(r.origins().size() == 1);
    CHECK(r.origins().at(0).source.code == "be");
}

TEST_CASE("save requires a sealed store") {
    oracle::TempDir dir("datastore_unsealed");
    Datastore s = two_entry_store();
    CHECK_THROWS_AS(save(s, dir.file("x.kds")), Error);
}

TEST_CASE("load rejects corrupt files") {
    oracle::TempDir dir("datastore_corrupt");
    Datastore s = oracle::random_store(20, 3, 5);
    std::string path = dir.file("s.kds");
    save(s, path);

    SUBCASE("wrong magic") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("XXXX", 4);
        f.close();
        try {
            load(path);
            FAIL("expected format error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::format_error);
        }
    }
    SUBCASE("truncated") {
        std::filesystem::resize_file(path, std::filesystem::file_size(path) - 7);
        CHECK_THROWS_AS(load(path), Error);
    }
    SUBCASE("hash mismatch after mutation") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(32);
        char z = 0x5a;
        f.write(&z, 1);
        f.close();
        CHECK_THROWS_AS(load(path), Error);
    }
    SUBCASE("missing sidecar") {
        std::filesystem::remove(path + ".meta.json");
        CHECK_THROWS_AS(load(path), Error);
    }
}

TEST_CASE("large round-trip re-save is byte-identical") {
    oracle::TempDir dir("datastore_big");
    Datastore s = oracle::random_store(100000, 8, 99);
    std::string p1 = dir.file("a.kds");
    std::string p2 = dir.file("b.kds");
    save(s, p1);
    Datastore r = load(p1);
    save(r, p2);
    CHECK(hash_file(p1) == hash_file(p2));
}

TEST_CASE("stats") {
    Datastore empty(4, LanguageTag{"en", "", false});
    StoreStats es = empty.stats();
    CHECK(es.count == 0);
    CHECK(es.per_origin.empty());
    CHECK_FALSE(es.sealed);

    Datastore s = oracle::random_store(64, 4, 7, 2);
    StoreStats st = s.stats();
    CHECK(st.count == 64);
    CHECK(st.sealed);
    std::size_t total = 0;
    for (std::size_t c : st.per_origin) total += c;
    CHECK(total == st.count);
    // header + count * (dim*4 + 4 + 2 + 4 + 2)
    CHECK(st.bytes_on_disk == 20 + 64 * (4 * 4 + 12));
}
