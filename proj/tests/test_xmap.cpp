#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "knnmt/error.hpp"
#include "knnmt/index.hpp"
#include "knnmt/synth.hpp"
#include "knnmt/xmap.hpp"
#include "support/oracles.hpp"

using namespace knnmt;

namespace {

AlignedPairSet pairs_from(const std::vector<double>& x, const std::vector<double>& y,
                          std::size_t dim) {
    AlignedPairSet p;
    p.dim = dim;
    p.x = x;
    p.y = y;
    return p;
}

double frobenius_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

std::vector<double> random_matrix(std::size_t rows, std::size_t cols, std::uint32_t seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> m(rows * cols);
    for (double& v : m) v = g(rng);
    return m;
}

std::vector<double> matvec_rows(const std::vector<double>& m, const std::vector<double>& x,
                                std::size_t n, std::size_t d) {
    std::vector<double> y(n * d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t r = 0; r < d; ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) s += m[r * d + c] * x[i * d + c];
            y[i * d + r] = s;
        }
    }
    return y;
}

} // namespace

TEST_CASE("extract_aligned_pairs self-join and intersections") {
    WorldConfig cfg;
    cfg.dim = 8;
    cfg.vocab_size = 8;
    cfg.seed = 5;
    cfg.languages.push_back(LanguageSpec{LanguageTag{"aa", "g", false}, 0.02});
    cfg.languages.push_back(LanguageSpec{LanguageTag{"ab", "g", false}, 0.05});
    World world = gen_world(cfg);

    auto build = [&](const std::string& lang, std::size_t n, std::uint64_t offset) {
        ToyProvider provider(world, lang);
        Corpus corpus = gen_corpus(world, lang, n, 5, offset);
        Datastore store(8, LanguageTag{"en", "", false});
        build_from_corpus(corpus, provider, store);
        store.seal();
        return store;
    };

    Datastore a = build("aa", 10, 0);
    SUBCASE("store paired with itself") {
        AlignedPairSet self = extract_aligned_pairs(a, a);
        CHECK(self.size() == a.size());
        CHECK(self.x == self.y);
    }

    SUBCASE("overlapping sentence ranges keep only shared coordinates") {
        Datastore s1 = build("aa", 2, 1); // ids {1, 2}
        Datastore s2 = build("ab", 2, 2); // ids {2, 3}
        AlignedPairSet pairs = extract_aligned_pairs(s1, s2);
        Corpus shared = gen_corpus(world, "aa", 1, 5, 2);
        CHECK(pairs.size() == shared.sentences[0].tokens.size());
    }

    SUBCASE("multiway corpora align token-for-token, ordered by coordinate") {
        Datastore s1 = build("aa", 10, 0);
        Datastore s2 = build("ab", 10, 0);
        AlignedPairSet pairs = extract_aligned_pairs(s1, s2);
        CHECK(pairs.size() == s1.size()); // same id range, same lengths
        CHECK(pairs.source_lang == "aa");
        CHECK(pairs.dest_lang == "ab");

        // brute-force join count
        std::size_t expected = 0;
        for (std::size_t i = 0; i < s1.size(); ++i) {
            for (std::size_t j = 0; j < s2.size(); ++j) {
                if (s1.sentence_id(i) == s2.sentence_id(j) &&
                    s1.position(i) == s2.position(j)) {
                    expected++;
                }
            }
        }
        CHECK(pairs.size() == expected);
    }

    SUBCASE("swap symmetry") {
        Datastore s1 = build("aa", 6, 0);
        Datastore s2 = build("ab", 9, 0);
        AlignedPairSet ab = extract_aligned_pairs(s1, s2);
        AlignedPairSet ba = extract_aligned_pairs(s2, s1);
        CHECK(ab.size() == ba.size());
        CHECK(ab.x == ba.y);
        CHECK(ab.y == ba.x);
    }

    SUBCASE("dim mismatch") {
        Datastore narrow = oracle::random_store(5, 4, 1);
        CHECK_THROWS_AS(extract_aligned_pairs(a, narrow), Error);
    }
}

TEST_CASE("fit_linear_map recovers the identity on (x, x) pairs") {
    std::size_t d = 6, n = 40;
    std::vector<double> x = random_matrix(n, d, 11);
    LinearMap map = fit_linear_map(pairs_from(x, x, d), 0.0);
    CHECK(frobenius_diff(map.matrix, LinearMap::identity(d).matrix) < 1e-6);
    CHECK(map.residual == doctest::Approx(0.0).epsilon(1e-10));

    // spanning pairs at ridge 1e-8 stay within 1e-4 of the identity
    LinearMap ridged = fit_linear_map(pairs_from(x, x, d), 1e-8);
    CHECK(frobenius_diff(ridged.matrix, LinearMap::identity(d).matrix) <= 1e-4);
}

TEST_CASE("fit_linear_map recovers a planted rotation") {
    // y = R x with R = [[0, -1], [1, 0]]
    std::vector<double> r{0.0, -1.0, 1.0, 0.0};
    std::vector<double> x = random_matrix(100, 2, 12);
    std::vector<double> y = matvec_rows(r, x, 100, 2);
    LinearMap map = fit_linear_map(pairs_from(x, y, 2), 0.0);
    CHECK(frobenius_diff(map.matrix, r) < 1e-6);
}

TEST_CASE("noisy fit matches the independent least-squares oracle") {
    std::mt19937 rng(13);
    std::normal_distribution<double> noise(0.0, 0.05);
    std::size_t d = 8, n = 120;
    std::vector<double> planted = random_matrix(d, d, 14);
    std::vector<double> x = random_matrix(n, d, 15);
    std::vector<double> y = matvec_rows(planted, x, n, d);
    for (double& v : y) v += noise(rng);

    for (double ridge : {0.0, 1e-3, 0.5}) {
        LinearMap map = fit_linear_map(pairs_from(x, y, d), ridge);
        oracle::LeastSquares ls = oracle::least_squares(x, y, n, d, ridge);
        CHECK(frobenius_diff(map.matrix, ls.a) < 1e-8);
        CHECK(std::fabs(map.residual - ls.residual) / ls.residual < 1e-6);
    }
}

TEST_CASE("fit residual never beats the identity map's residual") {
    std::mt19937 rng(16);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t d = 2 + rng() % 6;
        std::size_t n = d + 1 + rng() % 50;
        std::vector<double> x = random_matrix(n, d, static_cast<std::uint32_t>(rng()));
        std::vector<double> y = random_matrix(n, d, static_cast<std::uint32_t>(rng()));
        LinearMap map = fit_linear_map(pairs_from(x, y, d), 0.0);

        double identity_residual = 0.0;
        for (std::size_t i = 0; i < n * d; ++i) {
            identity_residual += (y[i] - x[i]) * (y[i] - x[i]);
        }
        identity_residual /= static_cast<double>(n);
        CHECK(map.residual <= identity_residual + 1e-9);
    }
}

TEST_CASE("singular system without ridge is reported") {
    // n < d makes X^T X rank deficient
    std::vector<double> x = random_matrix(2, 6, 17);
    std::vector<double> y = random_matrix(2, 6, 18);
    try {
        fit_linear_map(pairs_from(x, y, 6), 0.0);
        FAIL("expected singular_system");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::singular_system);
    }
    // the advertised retry with ridge > 0 succeeds
    CHECK_NOTHROW(fit_linear_map(pairs_from(x, y, 6), 1e-6));
    // auto ridge also succeeds
    CHECK_NOTHROW(fit_linear_map(pairs_from(x, y, 6), std::nullopt));

    CHECK_THROWS_AS(fit_linear_map(AlignedPairSet{}, 0.0), Error);
}

TEST_CASE("apply_map") {
    LinearMap eye = LinearMap::identity(3);
    std::vector<float> v{1.5f, -2.0f, 0.25f};
    CHECK(apply_map(eye, v) == v);

    LinearMap zero;
    zero.dim = 3;
    zero.matrix.assign(9, 0.0);
    CHECK(apply_map(zero, v) == std::vector<float>{0.0f, 0.0f, 0.0f});

    LinearMap rot;
    rot.dim = 2;
    rot.matrix = {0.0, -1.0, 1.0, 0.0};
    std::vector<float> e1{1.0f, 0.0f};
    CHECK(apply_map(rot, e1) == std::vector<float>{0.0f, 1.0f});

    CHECK_THROWS_AS(apply_map(rot, v), Error);
}

TEST_CASE("remap_store") {
    Datastore store = oracle::random_store(64, 4, 77, 2);

    SUBCASE("identity map keeps content identical") {
        Datastore same = remap_store(store, LinearMap::identity(4));
        CHECK(same.size() == store.size());
        CHECK(same.values() == store.values());
        CHECK(same.origin_ids() == store.origin_ids());
        CHECK(same.sentence_ids() == store.sentence_ids());
        CHECK(same.positions() == store.positions());
        CHECK(same.keys() == store.keys());
        CHECK(same.sealed());
    }

    SUBCASE("orthogonal remap preserves search rankings") {
        // 4-d rotation built from two 2-d rotations
        double c = std::cos(0.7), s = std::sin(0.7);
        LinearMap rot;
        rot.dim = 4;
        rot.matrix = {c, -s, 0, 0, s, c, 0, 0, 0, 0, c, -s, 0, 0, s, c};
        Datastore remapped = remap_store(store, rot);
        auto original = build_flat(store);
        auto rotated = build_flat(remapped);
        std::mt19937 rng(78);
        std::uniform_real_distribution<float> coord(-1.0f, 1.0f);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<float> q(4);
            for (float& v : q) v = coord(rng);
            HitList plain = original->search(q, 8);
            HitList mapped = rotated->search(apply_map(rot, q), 8);
            REQUIRE(plain.size() == mapped.size());
            for (std::size_t i = 0; i < plain.size(); ++i) {
                CHECK(plain[i].entry_index == mapped[i].entry_index);
            }
        }
    }

    SUBCASE("dim mismatch") {
        CHECK_THROWS_AS(remap_store(store, LinearMap::identity(5)), Error);
    }
}

TEST_CASE("map json round-trip") {
    oracle::TempDir dir("map_io");
    std::vector<double> x = random_matrix(30, 3, 91);
    std::vector<double> y = matvec_rows(random_matrix(3, 3, 92), x, 30, 3);
    AlignedPairSet pairs = pairs_from(x, y, 3);
    pairs.source_lang = "aa";
    pairs.dest_lang = "ab";
    LinearMap map = fit_linear_map(pairs, 1e-8);

    std::string path = dir.file("map.json");
    save_map(map, path);
    LinearMap loaded = load_map(path);
    CHECK(loaded.dim == map.dim);
    CHECK(loaded.matrix == map.matrix);
    CHECK(loaded.source_lang == "aa");
    CHECK(loaded.dest_lang == "ab");
    CHECK(loaded.ridge == map.ridge);
    CHECK(loaded.residual == map.residual);

    CHECK_THROWS_AS(load_map(dir.file("missing.json")), Error);
}

TEST_CASE("fitted map recovers the true inter-language transform of the harness") {
    WorldConfig cfg;
    cfg.dim = 12;
    cfg.vocab_size = 32;
    cfg.seed = 99;
    cfg.context_sigma = 0.0; // noiseless contexts: the exact map is linear
    cfg.languages.push_back(LanguageSpec{LanguageTag{"aa", "g", false}, 0.05});
    cfg.languages.push_back(LanguageSpec{LanguageTag{"ab", "h", false}, 0.08});
    World world = gen_world(cfg);

    auto build = [&](const std::string& lang) {
        ToyProvider provider(world, lang);
        Corpus corpus = gen_corpus(world, lang, 60, 6, 0);
        Datastore store(12, LanguageTag{"en", "", false});
        build_from_corpus(corpus, provider, store);
        store.seal();
        return store;
    };
    Datastore sa = build("aa");
    Datastore sb = build("ab");
    AlignedPairSet pairs = extract_aligned_pairs(sa, sb);
    LinearMap map = fit_linear_map(pairs, 0.0);

    // functional recovery: A maps every aa context onto the ab context
    Corpus probe = gen_corpus(world, "aa", 10, 6, 5000);
    double worst = 0.0;
    for (const Sentence& s : probe.sentences) {
        for (std::size_t t = 0; t < s.tokens.size(); ++t) {
            std::vector<float> x = toy_context(world, "aa", s, t);
            std::vector<float> y = toy_context(world, "ab", s, t);
            std::vector<float> mapped = apply_map(map, x);
            double err = 0.0;
            for (std::size_t j = 0; j < mapped.size(); ++j) {
                err += (mapped[j] - y[j]) * (mapped[j] - y[j]);
            }
            worst = std::max(worst, std::sqrt(err));
        }
    }
    CHECK(worst < 1e-4); // float32 keys bound the achievable precision
    CHECK(map.residual < 1e-9);
}
