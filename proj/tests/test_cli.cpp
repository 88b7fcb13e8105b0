#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "knnmt/cli.hpp"
#include "knnmt/config.hpp"
#include "knnmt/hash.hpp"
#include "support/oracles.hpp"

using namespace knnmt;
namespace fs = std::filesystem;

namespace {

int cli(std::initializer_list<std::string> args, std::string* out_text = nullptr,
        std::string* err_text = nullptr) {
    std::vector<std::string> owned{"knnmt"};
    owned.insert(owned.end(), args);
    std::vector<const char*> argv;
    for (const std::string& a : owned) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return code;
}

// small harness config for fast end-to-end runs
RunConfig small_config() {
    RunConfig cfg = reference_config();
    cfg.world.dim = 16;
    cfg.world.vocab_size = 16;
    std::map<std::string, CorpusSpec> corpora;
    for (auto& [code, spec] : cfg.corpora) {
        CorpusSpec small = spec;
        small.n_train = (spec.n_train <= 12) ? 6 : 40;
        small.n_dev = 6;
        small.n_test = 8;
        corpora[code] = small;
    }
    cfg.corpora = corpora;
    cfg.grids = Grids{{4}, {0.4}, {0.2, 1.0}};
    return cfg;
}

struct Pipeline {
    oracle::TempDir dir;
    std::string config_path;

    explicit Pipeline(const std::string& name) : dir("cli_" + name) {
        RunConfig cfg = small_config();
        cfg.out_dir = dir.file("out");
        config_path = dir.file("config.json");
        save_run_config(cfg, config_path);
    }
};

} // namespace

TEST_CASE("usage errors exit 1, data errors exit 2") {
    std::string err;
    CHECK(cli({"frobnicate"}, nullptr, &err) == 1);
    CHECK(cli({"build"}, nullptr, &err) == 1); // missing required flags
    CHECK(cli({"info",
               "/nonexistent/store.kds"},
              nullptr, &err) == 2);
    CHECK(err.find("error") != std::string::npos);
    std::string out;
    CHECK(cli({"--help"}, &out) == 0);
    CHECK(out.find("Subcommands") != std::string::npos);
}

TEST_CASE("synth-gen, build, info, merge arithmetic") {
    Pipeline p("basic");
    std::string out;

    REQUIRE(cli({"--config", p.config_path, "synth-gen"}, &out) == 0);
    CHECK(out.find("corpora/aa.train.jsonl") != std::string::npos);

    REQUIRE(cli({"--config", p.config_path, "build", "--lang", "aa"}) == 0);
    REQUIRE(cli({"--config", p.config_path, "build", "--lang", "ab"}) == 0);

    RunConfig cfg = load_run_config(p.config_path);
    std::string store_a = cfg.out_dir + "/stores/aa.kds";
    std::string store_b = cfg.out_dir + "/stores/ab.kds";

    std::string info_a, info_b;
    REQUIRE(cli({"info", store_a}, &info_a) == 0);
    REQUIRE(cli({"info", store_b}, &info_b) == 0);
    CHECK(info_a.find("target_lang: en") != std::string::npos);
    CHECK(info_a.find("aa-en") != std::string::npos);

    auto count_of = [](const std::string& text) {
        auto pos = text.find("count: ");
        REQUIRE(pos != std::string::npos);
        return std::stoull(text.substr(pos + 7));
    };
    auto na = count_of(info_a);
    auto nb = count_of(info_b);

    REQUIRE(cli({"--config", p.config_path, "merge", store_a, store_b, "-o",
                 "stores/ab_merged.kds"}) == 0);
    std::string info_m;
    REQUIRE(cli({"info", cfg.out_dir + "/stores/ab_merged.kds"}, &info_m) == 0);
    CHECK(count_of(info_m) == na + nb);
    CHECK(info_m.find("aa-en") != std::string::npos);
    CHECK(info_m.find("ab-en") != std::string::npos);
}

TEST_CASE("fit-map, remap, tune, decode, eval, origins, bench") {
    Pipeline p("full");
    RunConfig cfg = load_run_config(p.config_path);

    REQUIRE(cli({"--config", p.config_path, "synth-gen"}) == 0);
    for (const char* lang : {"aa", "ab", "ba"}) {
        REQUIRE(cli({"--config", p.config_path, "build", "--lang", lang}) == 0);
    }
    std::string sa = cfg.out_dir + "/stores/aa.kds";
    std::string sb = cfg.out_dir + "/stores/ab.kds";
    std::string sc = cfg.out_dir + "/stores/ba.kds";

    std::string out;
    REQUIRE(cli({"--config", p.config_path, "fit-map", "--store1", sa, "--store2", sb,
                 "--ridge", "auto", "-o", "maps/aa_ab.json"},
                &out) == 0);
    CHECK(out.find("maps/aa_ab.json") != std::string::npos);
    std::string map_path = cfg.out_dir + "/maps/aa_ab.json";

    REQUIRE(cli({"--config", p.config_path, "remap", "--store", sb, "--map", map_path, "-o",
                 "stores/ab_remapped.kds"}) == 0);
    CHECK(fs::exists(cfg.out_dir + "/stores/ab_remapped.kds"));

    REQUIRE(cli({"--config", p.config_path, "tune", "--lang", "aa", "--store", sa}, &out) == 0);
    CHECK(out.find("best k=") != std::string::npos);
    CHECK(fs::exists(cfg.out_dir + "/tune/aa_aa.csv"));

    REQUIRE(cli({"--config", p.config_path, "decode", "--lang", "aa", "--store", sa,
                 "--trace", "traces/aa.jsonl"}) == 0);
    CHECK(fs::exists(cfg.out_dir + "/decodes/aa_aa.jsonl"));
    CHECK(fs::exists(cfg.out_dir + "/traces/aa.jsonl"));

    REQUIRE(cli({"--config", p.config_path, "eval", "--lang", "aa", "--store", sa, "--k", "4",
                 "--lambda", "0.5", "--temp", "0.2"},
                &out) == 0);
    CHECK(out.find("accuracy") != std::string::npos);
    CHECK(fs::exists(cfg.out_dir + "/eval/aa_aa.json"));

    REQUIRE(cli({"--config", p.config_path, "origins", "--trace",
                 cfg.out_dir + "/traces/aa.jsonl", "--store", sa, "-o", "origins.json"}) == 0);
    CHECK(fs::exists(cfg.out_dir + "/origins.json"));

    REQUIRE(cli({"--config", p.config_path, "bench", "--lang", "aa", "--stores", sa, sc,
                 "--reps", "3"},
                &out) == 0);
    CHECK(out.find("store_size,index_kind") != std::string::npos);
    CHECK(fs::exists(cfg.out_dir + "/bench/bench.csv"));
    CHECK(fs::exists(cfg.out_dir + "/bench/bench.csv.outputs.json"));
}

TEST_CASE("double runs produce byte-identical artifacts") {
    Pipeline p1("det1");
    Pipeline p2("det2");

    auto run_all = [](const Pipeline& p) {
        REQUIRE(cli({"--config", p.config_path, "synth-gen"}) == 0);
        REQUIRE(cli({"--config", p.config_path, "build", "--lang", "aa"}) == 0);
        REQUIRE(cli({"--config", p.config_path, "build", "--lang", "ab"}) == 0);
        RunConfig cfg = load_run_config(p.config_path);
        std::string sa = cfg.out_dir + "/stores/aa.kds";
        std::string sb = cfg.out_dir + "/stores/ab.kds";
        REQUIRE(cli({"--config", p.config_path, "merge", sa, sb, "-o", "stores/m.kds"}) == 0);
        REQUIRE(cli({"--config", p.config_path, "tune", "--lang", "aa", "--store",
                     cfg.out_dir + "/stores/m.kds"}) == 0);
        REQUIRE(cli({"--config", p.config_path, "decode", "--lang", "aa", "--store", sa}) == 0);
    };
    run_all(p1);
    run_all(p2);

    RunConfig c1 = load_run_config(p1.config_path);
    RunConfig c2 = load_run_config(p2.config_path);
    std::size_t compared = 0;
    for (const auto& entry : fs::recursive_directory_iterator(c1.out_dir)) {
        if (!entry.is_regular_file()) continue;
        std::string rel = fs::relative(entry.path(), c1.out_dir).string();
        fs::path other = fs::path(c2.out_dir) / rel;
        REQUIRE(fs::exists(other));
        CHECK(hash_file(entry.path().string()) == hash_file(other.string()));
        compared++;
    }
    CHECK(compared >= 10);
}

TEST_CASE("run config json round-trip") {
    oracle::TempDir dir("config_io");
    RunConfig cfg = reference_config();
    std::string path = dir.file("ref.json");
    save_run_config(cfg, path);
    RunConfig loaded = load_run_config(path);
    CHECK(loaded.world.dim == cfg.world.dim);
    CHECK(loaded.world.seed == cfg.world.seed);
    CHECK(loaded.world.languages.size() == cfg.world.languages.size());
    CHECK(loaded.corpora.size() == cfg.corpora.size());
    CHECK(loaded.grids.k == cfg.grids.k);
    CHECK(loaded.grids.lambda == cfg.grids.lambda);
    CHECK(loaded.retrieval.k == cfg.retrieval.k);
    CHECK(loaded.corpora.at("aa").n_train == cfg.corpora.at("aa").n_train);
}
