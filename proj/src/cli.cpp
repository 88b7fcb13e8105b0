#include "knnmt/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "knnmt/config.hpp"
#include "knnmt/datastore.hpp"
#include "knnmt/error.hpp"
#include "knnmt/eval.hpp"
#include "knnmt/fixtures.hpp"
#include "knnmt/hash.hpp"
#include "knnmt/index.hpp"
#include "knnmt/retrieval.hpp"
#include "knnmt/synth.hpp"
#include "knnmt/xmap.hpp"

namespace knnmt {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct CliContext {
    std::string config_path;
    std::string out_dir; // --out override; else config; else $KNNMT_OUT; else "out"
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::ostream* out = nullptr;
    std::ostream* err = nullptr;

    RunConfig config;
    bool config_loaded = false;

    void load_config() {
        KNNMT_REQUIRE(!config_path.empty(), invalid_argument,
                      "this command needs --config <json>");
        config = load_run_config(config_path);
        if (seed_set) config.world.seed = seed;
        if (!out_dir.empty()) {
            config.out_dir = out_dir;
        } else if (const char* env = std::getenv("KNNMT_OUT")) {
            if (config.out_dir == "out") config.out_dir = env;
        }
        config_loaded = true;
    }

    const RunConfig& cfg() {
        if (!config_loaded) load_config();
        return config;
    }

    fs::path outpath(const std::string& rel) {
        fs::path p = fs::path(cfg().out_dir) / rel;
        fs::create_directories(p.parent_path());
        return p;
    }

    void log_artifact(const fs::path& path) {
        (*out) << "wrote " << path.string() << " " << hash_file(path.string()) << "\n";
    }

    LanguageTag lang_tag(const std::string& code) {
        for (const LanguageSpec& spec : cfg().world.languages) {
            if (spec.tag.code == code) return spec.tag;
        }
        raise(ErrorCode::invalid_argument, "language not in world config: " + code);
    }

    Corpus load_split(const std::string& lang, const std::string& split) {
        fs::path p = fs::path(cfg().out_dir) / "corpora" / (lang + "." + split + ".jsonl");
        KNNMT_REQUIRE(fs::exists(p), invalid_argument,
                      "missing corpus file (run synth-gen first): " + p.string());
        return load_corpus_jsonl(p.string(), lang, cfg().target_lang);
    }
};

std::string stem_of(const std::string& path) {
    return fs::path(path).stem().string();
}

struct RetrievalOverrides {
    std::size_t k = 0;
    double lambda = -1.0;
    double temperature = 0.0;

    RetrievalParams apply(RetrievalParams params) const {
        if (k != 0) params.k = k;
        if (lambda >= 0.0) params.lambda = lambda;
        if (temperature > 0.0) params.temperature = temperature;
        return params;
    }
};

void add_retrieval_flags(CLI::App* cmd, RetrievalOverrides& ov) {
    cmd->add_option("--k", ov.k, "neighbors retrieved per step");
    cmd->add_option("--lambda", ov.lambda, "interpolation weight of the kNN distribution");
    cmd->add_option("--temp", ov.temperature, "retrieval softmax temperature");
}

std::unique_ptr<Index> make_index(const Datastore& store, const RunConfig& cfg,
                                  const std::string& kind_flag) {
    IndexParams params = cfg.index;
    if (kind_flag == "flat") params.kind = IndexParams::Kind::flat;
    if (kind_flag == "ivf") params.kind = IndexParams::Kind::ivf;
    return build_index(store, params);
}

// ----------------------------------------------------------------- commands

void cmd_synth_gen(CliContext& ctx) {
    const RunConfig& cfg = ctx.cfg();
    World world = gen_world(cfg.world);
    for (const auto& [code, spec] : cfg.corpora) {
        struct Split {
            const char* name;
            std::size_t n;
            std::uint64_t base;
        };
        const Split splits[] = {{"train", spec.n_train, cfg.train_base},
                                {"dev", spec.n_dev, cfg.dev_base},
                                {"test", spec.n_test, cfg.test_base}};
        for (const Split& split : splits) {
            if (split.n == 0) continue;
            Corpus corpus = gen_corpus(world, code, split.n, spec.mean_length, split.base);
            fs::path p = ctx.outpath("corpora/" + code + "." + split.name + ".jsonl");
            save_corpus_jsonl(corpus, p.string());
            ctx.log_artifact(p);
        }
    }
}

void cmd_build(CliContext& ctx, const std::string& lang, const std::string& split,
               std::string out_file) {
    const RunConfig& cfg = ctx.cfg();
    World world = gen_world(cfg.world);
    Corpus corpus = ctx.load_split(lang, split);
    ToyProvider provider(world, lang);

    Datastore store(cfg.world.dim, LanguageTag{cfg.target_lang, "", false});
    build_from_corpus(corpus, provider, store, ctx.lang_tag(lang));
    store.set_provenance("build lang=" + lang + " split=" + split +
                         " seed=" + std::to_string(cfg.world.seed));
    store.seal();

    if (out_file.empty()) out_file = "stores/" + lang + ".kds";
    fs::path p = ctx.outpath(out_file);
    save(store, p.string());
    ctx.log_artifact(p);
    (*ctx.out) << "built " << store.size() << " entries, dim " << store.dim() << "\n";
}

void cmd_merge(CliContext& ctx, const std::vector<std::string>& inputs,
               const std::string& out_file) {
    std::vector<Datastore> loaded;
    loaded.reserve(inputs.size());
    for (const std::string& path : inputs) loaded.push_back(load(path));
    std::vector<const Datastore*> ptrs;
    for (const Datastore& s : loaded) ptrs.push_back(&s);
    Datastore merged = merge(ptrs);
    merged.set_provenance("merge of " + std::to_string(inputs.size()) + " stores");

    fs::path p = ctx.outpath(out_file);
    save(merged, p.string());
    ctx.log_artifact(p);
    (*ctx.out) << "merged " << merged.size() << " entries from " << inputs.size()
               << " stores\n";
}

void cmd_fit_map(CliContext& ctx, const std::string& store1, const std::string& store2,
                 const std::string& ridge, const std::string& out_file) {
    Datastore s1 = load(store1);
    Datastore s2 = load(store2);
    AlignedPairSet pairs = extract_aligned_pairs(s1, s2);
    std::optional<double> r;
    if (ridge != "auto") {
        try {
            r = std::stod(ridge);
        } catch (const std::exception&) {
            raise(ErrorCode::invalid_argument, "--ridge must be a number or 'auto'");
        }
    }
    LinearMap map = fit_linear_map(pairs, r);
    fs::path p = ctx.outpath(out_file);
    save_map(map, p.string());
    ctx.log_artifact(p);
    (*ctx.out) << "fit on " << pairs.size() << " pairs, residual " << map.residual << "\n";
}

void cmd_remap(CliContext& ctx, const std::string& store_path, const std::string& map_path,
               const std::string& out_file) {
    Datastore store = load(store_path);
    LinearMap map = load_map(map_path);
    Datastore remapped = remap_store(store, map);
    fs::path p = ctx.outpath(out_file);
    save(remapped, p.string());
    ctx.log_artifact(p);
}

void cmd_tune(CliContext& ctx, const std::string& lang, const std::string& store_path,
              const std::string& map_path, const std::string& metric_name,
              const std::string& index_kind) {
    const RunConfig& cfg = ctx.cfg();
    World world = gen_world(cfg.world);
    ToyProvider provider(world, lang);
    Corpus dev = ctx.load_split(lang, "dev");
    Datastore store = load(store_path);
    std::unique_ptr<Index> index = make_index(store, cfg, index_kind);
    LinearMap map;
    bool have_map = !map_path.empty();
    if (have_map) map = load_map(map_path);

    TuneMetric metric = metric_name == "bleu" ? TuneMetric::bleu : TuneMetric::accuracy;
    GridResult result = grid_search(provider, index.get(), have_map ? &map : nullptr, dev,
                                    cfg.grids, metric);

    std::string base = lang + "_" + stem_of(store_path);
    fs::path table = ctx.outpath("tune/" + base + ".csv");
    {
        std::ofstream out(table, std::ios::trunc);
        out << result.table_csv();
    }
    ctx.log_artifact(table);
    fs::path best = ctx.outpath("tune/" + base + ".best.json");
    {
        json j{{"k", result.best.k},
               {"lambda", result.best.lambda},
               {"temperature", result.best.temperature},
               {"metric", metric_name},
               {"rows", result.table.size()}};
        std::ofstream out(best, std::ios::trunc);
        out << j.dump(2) << "\n";
    }
    ctx.log_artifact(best);
    (*ctx.out) << "best k=" << result.best.k << " lambda=" << result.best.lambda
               << " T=" << result.best.temperature << " over " << result.table.size()
               << " configurations\n";
}

void cmd_decode(CliContext& ctx, const std::string& lang, const std::string& store_path,
                const std::string& map_path, const std::string& split,
                const RetrievalOverrides& ov, std::size_t beam, const std::string& trace_path,
                std::string out_file) {
    const RunConfig& cfg = ctx.cfg();
    World world = gen_world(cfg.world);
    ToyProvider provider(world, lang);
    Corpus corpus = ctx.load_split(lang, split);

    std::optional<Datastore> store;
    std::unique_ptr<Index> index;
    if (!store_path.empty()) {
        store = load(store_path);
        index = make_index(*store, cfg, "");
    }
    LinearMap map;
    bool have_map = !map_path.empty();
    if (have_map) map = load_map(map_path);

    RetrievalParams params = ov.apply(cfg.retrieval);
    DecodeParams dparams{beam, 65535};

    std::vector<DecodeTrace> traces;
    if (out_file.empty()) {
        out_file = "decodes/" + lang + "_" +
                   (store_path.empty() ? std::string("base") : stem_of(store_path)) + ".jsonl";
    }
    fs::path p = ctx.outpath(out_file);
    std::ofstream out(p, std::ios::trunc);
    for (const Sentence& s : corpus.sentences) {
        DecodeTrace trace;
        std::vector<Token> tokens =
                decode(provider, index.get(), have_map ? &map : nullptr, params, dparams, s,
                       trace_path.empty() ? nullptr : &trace);
        json line{{"sentence_id", s.id}, {"tokens", tokens}};
        out << line.dump() << "\n";
        if (!trace_path.empty()) traces.push_back(std::move(trace));
    }
    out.close();
    ctx.log_artifact(p);
    if (!trace_path.empty()) {
        fs::path tp = ctx.outpath(trace_path);
        save_traces_jsonl(traces, tp.string());
        ctx.log_artifact(tp);
    }
}

void cmd_eval(CliContext& ctx, const std::string& lang, const std::string& store_path,
              const std::string& map_path, const std::string& split,
              const RetrievalOverrides& ov, std::string out_file) {
    const RunConfig& cfg = ctx.cfg();
    World world = gen_world(cfg.world);
    ToyProvider provider(world, lang);
    Corpus corpus = ctx.load_split(lang, split);

    std::optional<Datastore> store;
    std::unique_ptr<Index> index;
    if (!store_path.empty()) {
        store = load(store_path);
        index = make_index(*store, cfg, "");
    }
    LinearMap map;
    bool have_map = !map_path.empty();
    if (have_map) map = load_map(map_path);

    RetrievalParams params = ov.apply(cfg.retrieval);
    TokenMetrics tm =
            token_metrics(provider, index.get(), have_map ? &map : nullptr, params, corpus);

    std::vector<std::vector<Token>> hyps, refs;
    DecodeParams dparams{1, 65535};
    for (const Sentence& s : corpus.sentences) {
        hyps.push_back(decode(provider, index.get(), have_map ? &map : nullptr, params,
                              dparams, s));
        refs.push_back(s.tokens);
    }
    double bleu = corpus_bleu(hyps, refs);

    if (out_file.empty()) {
        out_file = "eval/" + lang + "_" +
                   (store_path.empty() ? std::string("base") : stem_of(store_path)) + ".json";
    }
    fs::path p = ctx.outpath(out_file);
    json j{{"lang", lang},
           {"store", store_path.empty() ? "" : stem_of(store_path)},
           {"split", split},
           {"k", params.k},
           {"lambda", params.lambda},
           {"temperature", params.temperature},
           {"accuracy", tm.accuracy},
           {"nll", tm.nll},
           {"bleu", bleu},
           {"positions", tm.positions}};
    std::ofstream out(p, std::ios::trunc);
    out << j.dump(2) << "\n";
    out.close();
    ctx.log_artifact(p);
    (*ctx.out) << "accuracy " << tm.accuracy << " nll " << tm.nll << " bleu " << bleu << "\n";
}

void cmd_origins(CliContext& ctx, const std::string& trace_path, const std::string& store_path,
                 bool weighted, const std::string& out_file) {
    std::vector<DecodeTrace> traces = load_traces_jsonl(trace_path);
    Datastore store = load(store_path);
    OriginReport report = origin_analysis(traces, store, weighted);

    json rows = json::array();
    for (const OriginReport::Row& row : report.rows) {
        rows.push_back(json{{"origin", row.origin},
                            {"label", row.label},
                            {"store_count", row.store_count},
                            {"hit_weight", row.hit_weight},
                            {"p_obs", row.p_obs},
                            {"p_uni", row.p_uni}});
    }
    json j{{"rows", rows},
           {"total_hits", report.total_hits},
           {"total_entries", report.total_entries},
           {"weighted", weighted}};
    fs::path p = ctx.outpath(out_file);
    std::ofstream out(p, std::ios::trunc);
    out << j.dump(2) << "\n";
    out.close();
    ctx.log_artifact(p);
}

void cmd_bench(CliContext& ctx, const std::string& lang,
               const std::vector<std::string>& store_paths, const std::string& split,
               const RetrievalOverrides& ov, std::size_t reps, const std::string& index_kind,
               const std::string& out_file) {
    const RunConfig& cfg = ctx.cfg();
    World world = gen_world(cfg.world);
    ToyProvider provider(world, lang);
    Corpus corpus = ctx.load_split(lang, split);

    std::vector<Datastore> stores;
    stores.reserve(store_paths.size());
    for (const std::string& path : store_paths) stores.push_back(load(path));
    std::vector<std::unique_ptr<Index>> indexes;
    std::vector<const Index*> ptrs;
    for (const Datastore& s : stores) {
        indexes.push_back(make_index(s, cfg, index_kind));
        ptrs.push_back(indexes.back().get());
    }

    RetrievalParams params = ov.apply(cfg.retrieval);
    BenchReport report = throughput_bench(provider, ptrs, corpus, params, reps);

    fs::path p = ctx.outpath(out_file);
    {
        std::ofstream out(p, std::ios::trunc);
        out << report.csv();
    }
    ctx.log_artifact(p);
    // decoded-output hash: the deterministic half of the bench artifacts
    fs::path hp = ctx.outpath(out_file + ".outputs.json");
    {
        json j{{"outputs_hash", hash_hex(report.outputs_hash)}};
        std::ofstream out(hp, std::ios::trunc);
        out << j.dump(2) << "\n";
    }
    ctx.log_artifact(hp);
    (*ctx.out) << report.csv();
}

void cmd_info(CliContext& ctx, const std::string& store_path) {
    Datastore store = load(store_path);
    StoreStats stats = store.stats();
    std::ostream& out = *ctx.out;
    out << "path: " << store_path << "\n";
    out << "count: " << stats.count << "\n";
    out << "dim: " << stats.dim << "\n";
    out << "target_lang: " << store.target_lang().code << "\n";
    out << "sealed: " << (stats.sealed ? "yes" : "no") << "\n";
    out << "bytes: " << stats.bytes_on_disk << "\n";
    if (!store.provenance().empty()) out << "provenance: " << store.provenance() << "\n";
    out << "origins:\n";
    for (std::size_t o = 0; o < stats.per_origin.size(); ++o) {
        out << "  " << store.origins().at(o).label << ": " << stats.per_origin[o] << "\n";
    }
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CliContext ctx;
    ctx.out = &out;
    ctx.err = &err;

    CLI::App app{"multilingual kNN-MT datastore engine"};
    app.require_subcommand(1);
    app.add_option("--config", ctx.config_path, "run configuration (json)");
    app.add_option("--out", ctx.out_dir, "output directory (overrides config and $KNNMT_OUT)");
    app.add_option("--seed", ctx.seed, "world seed override")
            ->each([&ctx](const std::string&) { ctx.seed_set = true; });

    std::function<void()> action;

    auto* synth = app.add_subcommand("synth-gen", "generate the synthetic corpora");
    synth->callback([&] { action = [&] { cmd_synth_gen(ctx); }; });

    auto* build_cmd = app.add_subcommand("build", "build a bilingual datastore from a corpus");
    auto build_lang = std::make_shared<std::string>();
    auto build_split = std::make_shared<std::string>("train");
    auto build_out = std::make_shared<std::string>();
    build_cmd->add_option("--lang", *build_lang, "source language code")->required();
    build_cmd->add_option("--split", *build_split, "corpus split (train/dev/test)");
    build_cmd->add_option("-o,--output", *build_out, "output store path (under --out)");
    build_cmd->callback([&, build_lang, build_split, build_out] {
        action = [&, build_lang, build_split, build_out] {
            cmd_build(ctx, *build_lang, *build_split, *build_out);
        };
    });

    auto* merge_cmd = app.add_subcommand("merge", "merge datastores into one");
    auto merge_in = std::make_shared<std::vector<std::string>>();
    auto merge_out = std::make_shared<std::string>();
    merge_cmd->add_option("inputs", *merge_in, "input .kds files")->required();
    merge_cmd->add_option("-o,--output", *merge_out, "output store path (under --out)")
            ->required();
    merge_cmd->callback([&, merge_in, merge_out] {
        action = [&, merge_in, merge_out] { cmd_merge(ctx, *merge_in, *merge_out); };
    });

    auto* fit_cmd = app.add_subcommand("fit-map", "fit a cross-lingual linear map");
    auto fit_s1 = std::make_shared<std::string>();
    auto fit_s2 = std::make_shared<std::string>();
    auto fit_ridge = std::make_shared<std::string>("auto");
    auto fit_out = std::make_shared<std::string>();
    fit_cmd->add_option("--store1", *fit_s1, "store providing map inputs x")->required();
    fit_cmd->add_option("--store2", *fit_s2, "store providing map targets y")->required();
    fit_cmd->add_option("--ridge", *fit_ridge, "ridge strength or 'auto'");
    fit_cmd->add_option("-o,--output", *fit_out, "output map json (under --out)")->required();
    fit_cmd->callback([&, fit_s1, fit_s2, fit_ridge, fit_out] {
        action = [&, fit_s1, fit_s2, fit_ridge, fit_out] {
            cmd_fit_map(ctx, *fit_s1, *fit_s2, *fit_ridge, *fit_out);
        };
    });

    auto* remap_cmd = app.add_subcommand("remap", "apply a linear map to a datastore's keys");
    auto remap_store_path = std::make_shared<std::string>();
    auto remap_map = std::make_shared<std::string>();
    auto remap_out = std::make_shared<std::string>();
    remap_cmd->add_option("--store", *remap_store_path, "input store")->required();
    remap_cmd->add_option("--map", *remap_map, "map json")->required();
    remap_cmd->add_option("-o,--output", *remap_out, "output store path (under --out)")
            ->required();
    remap_cmd->callback([&, remap_store_path, remap_map, remap_out] {
        action = [&, remap_store_path, remap_map, remap_out] {
            cmd_remap(ctx, *remap_store_path, *remap_map, *remap_out);
        };
    });

    auto* tune_cmd = app.add_subcommand("tune", "grid-search retrieval hyperparameters");
    auto tune_lang = std::make_shared<std::string>();
    auto tune_store = std::make_shared<std::string>();
    auto tune_map = std::make_shared<std::string>();
    auto tune_metric = std::make_shared<std::string>("accuracy");
    auto tune_index = std::make_shared<std::string>();
    tune_cmd->add_option("--lang", *tune_lang, "source language code")->required();
    tune_cmd->add_option("--store", *tune_store, "datastore to tune against")->required();
    tune_cmd->add_option("--map", *tune_map, "query-side map json");
    tune_cmd->add_option("--metric", *tune_metric, "accuracy or bleu")
            ->check(CLI::IsMember({"accuracy", "bleu"}));
    tune_cmd->add_option("--index", *tune_index, "flat or ivf")
            ->check(CLI::IsMember({"flat", "ivf"}));
    tune_cmd->callback([&, tune_lang, tune_store, tune_map, tune_metric, tune_index] {
        action = [&, tune_lang, tune_store, tune_map, tune_metric, tune_index] {
            cmd_tune(ctx, *tune_lang, *tune_store, *tune_map, *tune_metric, *tune_index);
        };
    });

    auto* decode_cmd = app.add_subcommand("decode", "decode a corpus split");
    auto dec_lang = std::make_shared<std::string>();
    auto dec_store = std::make_shared<std::string>();
    auto dec_map = std::make_shared<std::string>();
    auto dec_split = std::make_shared<std::string>("test");
    auto dec_ov = std::make_shared<RetrievalOverrides>();
    auto dec_beam = std::make_shared<std::size_t>(1);
    auto dec_trace = std::make_shared<std::string>();
    auto dec_out = std::make_shared<std::string>();
    decode_cmd->add_option("--lang", *dec_lang, "source language code")->required();
    decode_cmd->add_option("--store", *dec_store, "datastore (omit for the base model)");
    decode_cmd->add_option("--map", *dec_map, "query-side map json");
    decode_cmd->add_option("--split", *dec_split, "corpus split");
    decode_cmd->add_option("--beam", *dec_beam, "beam width");
    decode_cmd->add_option("--trace", *dec_trace, "write a retrieval trace (under --out)");
    decode_cmd->add_option("-o,--output", *dec_out, "output jsonl (under --out)");
    add_retrieval_flags(decode_cmd, *dec_ov);
    decode_cmd->callback([&, dec_lang, dec_store, dec_map, dec_split, dec_ov, dec_beam,
                          dec_trace, dec_out] {
        action = [&, dec_lang, dec_store, dec_map, dec_split, dec_ov, dec_beam, dec_trace,
                  dec_out] {
            cmd_decode(ctx, *dec_lang, *dec_store, *dec_map, *dec_split, *dec_ov, *dec_beam,
                       *dec_trace, *dec_out);
        };
    });

    auto* eval_cmd = app.add_subcommand("eval", "token metrics + BLEU on a split");
    auto ev_lang = std::make_shared<std::string>();
    auto ev_store = std::make_shared<std::string>();
    auto ev_map = std::make_shared<std::string>();
    auto ev_split = std::make_shared<std::string>("test");
    auto ev_ov = std::make_shared<RetrievalOverrides>();
    auto ev_out = std::make_shared<std::string>();
    eval_cmd->add_option("--lang", *ev_lang, "source language code")->required();
    eval_cmd->add_option("--store", *ev_store, "datastore (omit for the base model)");
    eval_cmd->add_option("--map", *ev_map, "query-side map json");
    eval_cmd->add_option("--split", *ev_split, "corpus split");
    eval_cmd->add_option("-o,--output", *ev_out, "output json (under --out)");
    add_retrieval_flags(eval_cmd, *ev_ov);
    eval_cmd->callback([&, ev_lang, ev_store, ev_map, ev_split, ev_ov, ev_out] {
        action = [&, ev_lang, ev_store, ev_map, ev_split, ev_ov, ev_out] {
            cmd_eval(ctx, *ev_lang, *ev_store, *ev_map, *ev_split, *ev_ov, *ev_out);
        };
    });

    auto* orig_cmd = app.add_subcommand("origins", "origin analysis of a decode trace");
    auto or_trace = std::make_shared<std::string>();
    auto or_store = std::make_shared<std::string>();
    auto or_weighted = std::make_shared<bool>(false);
    auto or_out = std::make_shared<std::string>("origins.json");
    orig_cmd->add_option("--trace", *or_trace, "trace jsonl from decode")->required();
    orig_cmd->add_option("--store", *or_store, "store the trace was produced against")
            ->required();
    orig_cmd->add_flag("--weighted", *or_weighted, "weight hits by retrieval mass");
    orig_cmd->add_option("-o,--output", *or_out, "output json (under --out)");
    orig_cmd->callback([&, or_trace, or_store, or_weighted, or_out] {
        action = [&, or_trace, or_store, or_weighted, or_out] {
            cmd_origins(ctx, *or_trace, *or_store, *or_weighted, *or_out);
        };
    });

    auto* bench_cmd = app.add_subcommand("bench", "decoding throughput across stores");
    auto be_lang = std::make_shared<std::string>();
    auto be_stores = std::make_shared<std::vector<std::string>>();
    auto be_split = std::make_shared<std::string>("test");
    auto be_ov = std::make_shared<RetrievalOverrides>();
    auto be_reps = std::make_shared<std::size_t>(3);
    auto be_index = std::make_shared<std::string>();
    auto be_out = std::make_shared<std::string>("bench/bench.csv");
    bench_cmd->add_option("--lang", *be_lang, "source language code")->required();
    bench_cmd->add_option("--stores", *be_stores, "datastores to compare")->required();
    bench_cmd->add_option("--split", *be_split, "corpus split");
    bench_cmd->add_option("--reps", *be_reps, "timed repetitions (median reported)");
    bench_cmd->add_option("--index", *be_index, "flat or ivf")
            ->check(CLI::IsMember({"flat", "ivf"}));
    bench_cmd->add_option("-o,--output", *be_out, "output csv (under --out)");
    add_retrieval_flags(bench_cmd, *be_ov);
    bench_cmd->callback([&, be_lang, be_stores, be_split, be_ov, be_reps, be_index, be_out] {
        action = [&, be_lang, be_stores, be_split, be_ov, be_reps, be_index, be_out] {
            cmd_bench(ctx, *be_lang, *be_stores, *be_split, *be_ov, *be_reps, *be_index,
                      *be_out);
        };
    });

    auto* info_cmd = app.add_subcommand("info", "inspect a datastore");
    auto info_store = std::make_shared<std::string>();
    info_cmd->add_option("store", *info_store, "path to a .kds file")->required();
    info_cmd->callback([&, info_store] {
        action = [&, info_store] { cmd_info(ctx, *info_store); };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << "usage error: " << e.what() << "\n";
        return 1;
    }

    try {
        action();
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

} // namespace knnmt
