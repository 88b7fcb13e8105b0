#include "knnmt/config.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "knnmt/error.hpp"

namespace knnmt {

using json = nlohmann::json;

namespace {

json world_to_json(const WorldConfig& w) {
    json langs = json::array();
    for (const LanguageSpec& spec : w.languages) {
        langs.push_back(json{{"code", spec.tag.code},
                             {"group", spec.tag.grouping},
                             {"bridge", spec.tag.is_bridge},
                             {"alpha", spec.alpha}});
    }
    return json{{"dim", w.dim},
                {"vocab_size", w.vocab_size},
                {"languages", langs},
                {"context_sigma", w.context_sigma},
                {"base_sigma", w.base_sigma},
                {"base_temperature", w.base_temperature},
                {"identity_rotations", w.identity_rotations},
                {"seed", w.seed}};
}

WorldConfig world_from_json(const json& j) {
    WorldConfig w;
    w.dim = j.value("dim", w.dim);
    w.vocab_size = j.value("vocab_size", w.vocab_size);
    w.context_sigma = j.value("context_sigma", w.context_sigma);
    w.base_sigma = j.value("base_sigma", w.base_sigma);
    w.base_temperature = j.value("base_temperature", w.base_temperature);
    w.identity_rotations = j.value("identity_rotations", w.identity_rotations);
    w.seed = j.value("seed", w.seed);
    const json langs = j.value("languages", json::array());
    for (const json& l : langs) {
        LanguageSpec spec;
        spec.tag.code = l.at("code").get<std::string>();
        spec.tag.grouping = l.value("group", "");
        spec.tag.is_bridge = l.value("bridge", false);
        spec.alpha = l.value("alpha", 0.0);
        w.languages.push_back(std::move(spec));
    }
    return w;
}

} // namespace

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    KNNMT_REQUIRE(in.good(), format_error, "cannot open config: " + path);
    json j;
    try {
        in >> j;
        RunConfig c;
        c.world = world_from_json(j.at("world"));
        c.target_lang = j.value("target_lang", c.target_lang);
        const json corpora = j.value("corpora", json::object());
        for (const auto& [code, spec] : corpora.items()) {
            CorpusSpec cs;
            cs.n_train = spec.value("n_train", cs.n_train);
            cs.n_dev = spec.value("n_dev", cs.n_dev);
            cs.n_test = spec.value("n_test", cs.n_test);
            cs.mean_length = spec.value("mean_length", cs.mean_length);
            c.corpora[code] = cs;
        }
        if (j.contains("splits")) {
            c.train_base = j["splits"].value("train_base", c.train_base);
            c.dev_base = j["splits"].value("dev_base", c.dev_base);
            c.test_base = j["splits"].value("test_base", c.test_base);
        }
        if (j.contains("index")) {
            const json& ix = j["index"];
            std::string kind = ix.value("kind", "flat");
            KNNMT_REQUIRE(kind == "flat" || kind == "ivf", format_error,
                          "index kind must be flat or ivf");
            c.index.kind = kind == "flat" ? IndexParams::Kind::flat : IndexParams::Kind::ivf;
            c.index.nlist = ix.value("nlist", c.index.nlist);
            c.index.nprobe = ix.value("nprobe", c.index.nprobe);
            c.index.seed = ix.value("seed", c.index.seed);
        }
        if (j.contains("grids")) {
            const json& g = j["grids"];
            c.grids.k = g.value("k", std::vector<std::size_t>{});
            c.grids.lambda = g.value("lambda", std::vector<double>{});
            c.grids.temperature = g.value("temperature", std::vector<double>{});
        }
        if (j.contains("retrieval")) {
            const json& r = j["retrieval"];
            c.retrieval.k = r.value("k", c.retrieval.k);
            c.retrieval.lambda = r.value("lambda", c.retrieval.lambda);
            c.retrieval.temperature = r.value("temperature", c.retrieval.temperature);
        }
        c.out_dir = j.value("out_dir", c.out_dir);
        return c;
    } catch (const json::exception& e) {
        raise(ErrorCode::format_error, std::string("bad config json: ") + e.what());
    }
}

void save_run_config(const RunConfig& c, const std::string& path) {
    json corpora = json::object();
    for (const auto& [code, cs] : c.corpora) {
        corpora[code] = json{{"n_train", cs.n_train},
                             {"n_dev", cs.n_dev},
                             {"n_test", cs.n_test},
                             {"mean_length", cs.mean_length}};
    }
    json j{{"world", world_to_json(c.world)},
           {"target_lang", c.target_lang},
           {"corpora", corpora},
           {"splits",
            json{{"train_base", c.train_base},
                 {"dev_base", c.dev_base},
                 {"test_base", c.test_base}}},
           {"index",
            json{{"kind", c.index.kind == IndexParams::Kind::flat ? "flat" : "ivf"},
                 {"nlist", c.index.nlist},
                 {"nprobe", c.index.nprobe},
                 {"seed", c.index.seed}}},
           {"grids",
            json{{"k", c.grids.k},
                 {"lambda", c.grids.lambda},
                 {"temperature", c.grids.temperature}}},
           {"retrieval",
            json{{"k", c.retrieval.k},
                 {"lambda", c.retrieval.lambda},
                 {"temperature", c.retrieval.temperature}}},
           {"out_dir", c.out_dir}};
    std::ofstream out(path, std::ios::trunc);
    KNNMT_REQUIRE(out.good(), format_error, "cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

RunConfig reference_config() {
    RunConfig c;
    c.world.dim = 32;
    c.world.vocab_size = 64;
    c.world.seed = 42;
    c.world.context_sigma = 0.05;
    c.world.base_sigma = 0.3;
    c.world.base_temperature = 1.0;

    // three groups, three languages each; the first of each group is
    // low-resource (tiny train split), the others are high-resource
    struct Row {
        const char* code;
        const char* group;
        double alpha;
        std::size_t n_train;
    };
    const Row rows[] = {
            {"aa", "ga", 0.06, 12}, {"ab", "ga", 0.03, 400}, {"ac", "ga", 0.12, 400},
            {"ba", "gb", 0.06, 12}, {"bb", "gb", 0.03, 400}, {"bc", "gb", 0.12, 400},
            {"ca", "gc", 0.06, 12}, {"cb", "gc", 0.03, 400}, {"cc", "gc", 0.12, 400},
    };
    for (const Row& row : rows) {
        LanguageSpec spec;
        spec.tag = LanguageTag{row.code, row.group, false};
        spec.alpha = row.alpha;
        c.world.languages.push_back(spec);
        CorpusSpec cs;
        cs.n_train = row.n_train;
        cs.n_dev = 30;
        cs.n_test = 150;
        cs.mean_length = 8;
        c.corpora[row.code] = cs;
    }

    c.index.kind = IndexParams::Kind::flat;
    c.grids.k = {8, 16};
    c.grids.lambda = {0.2, 0.4, 0.6};
    c.grids.temperature = {0.05, 0.2, 1.0};
    c.retrieval = RetrievalParams{16, 0.4, 0.2};
    return c;
}

} // namespace knnmt
