#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "knnmt/config.hpp"
#include "knnmt/datastore.hpp"
#include "knnmt/error.hpp"
#include "knnmt/eval.hpp"
#include "knnmt/fixtures.hpp"
#include "knnmt/index.hpp"
#include "knnmt/retrieval.hpp"
#include "knnmt/synth.hpp"
#include "knnmt/xmap.hpp"

namespace py = pybind11;
using namespace knnmt;

namespace {

std::vector<float> to_floats(const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
    std::vector<float> v(static_cast<std::size_t>(a.size()));
    std::copy(a.data(), a.data() + a.size(), v.begin());
    return v;
}

py::array_t<float> keys_array(const Datastore& store) {
    py::array_t<float> out({store.size(), store.dim()});
    std::copy(store.keys().begin(), store.keys().end(), out.mutable_data());
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "multilingual kNN-MT datastores: build, merge, search, map, evaluate";

    py::register_exception<Error>(m, "KnnMtError");

    py::class_<LanguageTag>(m, "LanguageTag")
            .def(py::init([](std::string code, std::string grouping, bool bridge) {
                     LanguageTag t{std::move(code), std::move(grouping), bridge};
                     validate_language_tag(t);
                     return t;
                 }),
                 py::arg("code"), py::arg("grouping") = "", py::arg("bridge") = false)
            .def_readonly("code", &LanguageTag::code)
            .def_readonly("grouping", &LanguageTag::grouping)
            .def_readonly("bridge", &LanguageTag::is_bridge);

    py::class_<Sentence>(m, "Sentence")
            .def(py::init([](std::uint32_t id, std::vector<Token> tokens) {
                     return Sentence{id, std::move(tokens)};
                 }),
                 py::arg("id"), py::arg("tokens"))
            .def_readonly("id", &Sentence::id)
            .def_readonly("tokens", &Sentence::tokens);

    py::class_<Corpus>(m, "Corpus")
            .def_readonly("source_lang", &Corpus::source_lang)
            .def_readonly("target_lang", &Corpus::target_lang)
            .def_readonly("sentences", &Corpus::sentences)
            .def("total_tokens", &Corpus::total_tokens);

    py::class_<StoreStats>(m, "StoreStats")
            .def_readonly("count", &StoreStats::count)
            .def_readonly("dim", &StoreStats::dim)
            .def_readonly("sealed", &StoreStats::sealed)
            .def_readonly("per_origin", &StoreStats::per_origin)
            .def_readonly("bytes_on_disk", &StoreStats::bytes_on_disk);

    py::class_<Datastore>(m, "Datastore")
            .def(py::init([](std::size_t dim, const LanguageTag& target) {
                     return Datastore(dim, target);
                 }),
                 py::arg("dim"), py::arg("target_lang"))
            .def("add_origin",
                 [](Datastore& s, const LanguageTag& source, const std::string& label) {
                     Origin o{source, s.target_lang(),
                              label.empty() ? source.code + "-" + s.target_lang().code : label};
                     return s.add_origin(std::move(o));
                 },
                 py::arg("source"), py::arg("label") = "")
            .def("append",
                 [](Datastore& s, const py::array_t<float>& key, Token value,
                    std::uint16_t origin, std::uint32_t sentence_id, std::uint16_t position) {
                     Entry e;
                     e.key = to_floats(key);
                     e.value = value;
                     e.origin = origin;
                     e.sentence_id = sentence_id;
                     e.position = position;
                     s.append(e);
                 },
                 py::arg("key"), py::arg("value"), py::arg("origin") = 0,
                 py::arg("sentence_id") = 0, py::arg("position") = 0)
            .def("seal", &Datastore::seal)
            .def("stats", &Datastore::stats)
            .def("keys", &keys_array)
            .def("values", [](const Datastore& s) { return s.values(); })
            .def_property_readonly("dim", &Datastore::dim)
            .def_property_readonly("sealed", &Datastore::sealed)
            .def_property_readonly("target_lang", &Datastore::target_lang)
            .def("__len__", &Datastore::size);

    m.def("merge", [](const std::vector<const Datastore*>& stores) { return merge(stores); },
          py::arg("stores"));
    m.def("save", &save, py::arg("store"), py::arg("path"));
    m.def("load", &load, py::arg("path"));
    m.def("build_from_corpus",
          [](const Corpus& corpus, const ContextProvider& provider, Datastore& store,
             std::optional<LanguageTag> tag) {
              build_from_corpus(corpus, provider, store, std::move(tag));
          },
          py::arg("corpus"), py::arg("provider"), py::arg("store"),
          py::arg("source_tag") = std::nullopt);

    py::class_<SearchHit>(m, "SearchHit")
            .def_readonly("entry_index", &SearchHit::entry_index)
            .def_readonly("distance", &SearchHit::distance)
            .def_readonly("token", &SearchHit::token)
            .def_readonly("origin", &SearchHit::origin);

    py::class_<IndexParams> index_params(m, "IndexParams");
    index_params
            .def(py::init([](const std::string& kind, std::size_t nlist, std::size_t nprobe,
                             std::uint64_t seed) {
                     IndexParams p;
                     p.kind = kind == "ivf" ? IndexParams::Kind::ivf : IndexParams::Kind::flat;
                     p.nlist = nlist;
                     p.nprobe = nprobe;
                     p.seed = seed;
                     return p;
                 }),
                 py::arg("kind") = "flat", py::arg("nlist") = 0, py::arg("nprobe") = 8,
                 py::arg("seed") = 0);

    py::class_<Index>(m, "Index")
            .def("search",
                 [](const Index& index, const py::array_t<float>& query, std::size_t k) {
                     std::vector<float> q = to_floats(query);
                     return index.search(q, k);
                 },
                 py::arg("query"), py::arg("k"))
            .def_property_readonly("dim", &Index::dim)
            .def("__len__", &Index::size);
    py::class_<FlatIndex, Index>(m, "FlatIndex");
    py::class_<IvfIndex, Index>(m, "IvfIndex")
            .def_property_readonly("nlist", &IvfIndex::nlist)
            .def_property_readonly("nprobe", &IvfIndex::nprobe);

    m.def("build_flat", &build_flat, py::arg("store"), py::keep_alive<0, 1>());
    m.def("build_ivf", &build_ivf, py::arg("store"), py::arg("params"),
          py::keep_alive<0, 1>());
    m.def("recall_at_k",
          [](const Index& index, const Index& exact,
             const std::vector<std::vector<float>>& queries, std::size_t k) {
              return recall_at_k(index, exact, queries, k);
          },
          py::arg("index"), py::arg("exact"), py::arg("queries"), py::arg("k"));

    py::class_<RetrievalParams>(m, "RetrievalParams")
            .def(py::init([](std::size_t k, double lam, double temperature) {
                     RetrievalParams p{k, lam, temperature};
                     validate_retrieval_params(p);
                     return p;
                 }),
                 py::arg("k") = 16, py::arg("lam") = 0.4, py::arg("temperature") = 10.0)
            .def_readonly("k", &RetrievalParams::k)
            .def_readonly("lam", &RetrievalParams::lambda)
            .def_readonly("temperature", &RetrievalParams::temperature);

    py::class_<DecodeParams>(m, "DecodeParams")
            .def(py::init([](std::size_t beam_width, std::size_t max_length) {
                     return DecodeParams{beam_width, max_length};
                 }),
                 py::arg("beam_width") = 1, py::arg("max_length") = 65535);

    m.def("knn_distribution",
          [](const HitList& hits, double temperature, std::size_t vocab) {
              return knn_distribution(hits, temperature, vocab).probs;
          },
          py::arg("hits"), py::arg("temperature"), py::arg("vocab_size"));
    m.def("interpolate",
          [](const std::vector<double>& knn, const std::vector<double>& base, double lam) {
              return interpolate(Distribution{knn}, Distribution{base}, lam).probs;
          },
          py::arg("p_knn"), py::arg("p_base"), py::arg("lam"));
    m.def("augmented_step",
          [](const ContextProvider& provider, const Index* index, const LinearMap* map,
             const RetrievalParams& params, const Sentence& source,
             const std::vector<Token>& prefix) {
              return augmented_step(provider, index, map, params, source, prefix).probs;
          },
          py::arg("provider"), py::arg("index"), py::arg("map"), py::arg("params"),
          py::arg("source"), py::arg("prefix"));
    m.def("decode",
          [](const ContextProvider& provider, const Index* index, const LinearMap* map,
             const RetrievalParams& rparams, const DecodeParams& dparams,
             const Sentence& source) {
              return decode(provider, index, map, rparams, dparams, source);
          },
          py::arg("provider"), py::arg("index"), py::arg("map"), py::arg("rparams"),
          py::arg("dparams"), py::arg("source"));

    py::class_<AlignedPairSet>(m, "AlignedPairSet")
            .def_readonly("dim", &AlignedPairSet::dim)
            .def_readonly("source_lang", &AlignedPairSet::source_lang)
            .def_readonly("dest_lang", &AlignedPairSet::dest_lang)
            .def("__len__", &AlignedPairSet::size);

    py::class_<LinearMap>(m, "LinearMap")
            .def_static("identity", &LinearMap::identity, py::arg("dim"))
            .def_readonly("dim", &LinearMap::dim)
            .def_readonly("ridge", &LinearMap::ridge)
            .def_readonly("residual", &LinearMap::residual)
            .def_property_readonly("matrix", [](const LinearMap& map) {
                py::array_t<double> out({map.dim, map.dim});
                std::copy(map.matrix.begin(), map.matrix.end(), out.mutable_data());
                return out;
            });

    m.def("extract_aligned_pairs", &extract_aligned_pairs, py::arg("store1"),
          py::arg("store2"));
    m.def("fit_linear_map",
          [](const AlignedPairSet& pairs, std::optional<double> ridge) {
              return fit_linear_map(pairs, ridge);
          },
          py::arg("pairs"), py::arg("ridge") = 0.0);
    m.def("apply_map",
          [](const LinearMap& map, const py::array_t<float>& v) {
              std::vector<float> x = to_floats(v);
              return apply_map(map, x);
          },
          py::arg("map"), py::arg("v"));
    m.def("remap_store", &remap_store, py::arg("store"), py::arg("map"));
    m.def("save_map", &save_map, py::arg("map"), py::arg("path"));
    m.def("load_map", &load_map, py::arg("path"));

    py::class_<LanguageSpec>(m, "LanguageSpec")
            .def(py::init([](const LanguageTag& tag, double alpha) {
                     return LanguageSpec{tag, alpha};
                 }),
                 py::arg("tag"), py::arg("alpha") = 0.0)
            .def_readonly("tag", &LanguageSpec::tag)
            .def_readonly("alpha", &LanguageSpec::alpha);

    py::class_<WorldConfig>(m, "WorldConfig")
            .def(py::init<>())
            .def_readwrite("dim", &WorldConfig::dim)
            .def_readwrite("vocab_size", &WorldConfig::vocab_size)
            .def_readwrite("languages", &WorldConfig::languages)
            .def_readwrite("context_sigma", &WorldConfig::context_sigma)
            .def_readwrite("base_sigma", &WorldConfig::base_sigma)
            .def_readwrite("base_temperature", &WorldConfig::base_temperature)
            .def_readwrite("identity_rotations", &WorldConfig::identity_rotations)
            .def_readwrite("seed", &WorldConfig::seed);

    py::class_<World>(m, "World")
            .def("content_hash", &World::content_hash)
            .def_property_readonly("config", [](const World& w) { return w.config; });

    m.def("gen_world", &gen_world, py::arg("config"));
    m.def("gen_corpus",
          [](const World& world, const std::string& lang, std::size_t n, std::size_t mean_len,
             std::uint64_t seed_offset) {
              return gen_corpus(world, lang, n, mean_len, seed_offset);
          },
          py::arg("world"), py::arg("lang"), py::arg("n_sentences"), py::arg("mean_length"),
          py::arg("seed_offset") = 0);
    m.def("toy_context",
          [](const World& world, const std::string& lang, const Sentence& s, std::size_t t) {
              return toy_context(world, lang, s, t);
          },
          py::arg("world"), py::arg("lang"), py::arg("sentence"), py::arg("t"));
    m.def("toy_base_distribution",
          [](const World& world, const std::string& lang, const std::vector<float>& ctx) {
              return toy_base_distribution(world, lang, ctx).probs;
          },
          py::arg("world"), py::arg("lang"), py::arg("context"));

    py::class_<ContextProvider>(m, "ContextProvider");
    py::class_<ToyProvider, ContextProvider>(m, "ToyProvider")
            .def(py::init<const World&, std::string>(), py::arg("world"), py::arg("lang"),
                 py::keep_alive<1, 2>())
            .def_property_readonly("dim", &ToyProvider::dim)
            .def_property_readonly("vocab_size", &ToyProvider::vocab_size);

    py::class_<TokenMetrics>(m, "TokenMetrics")
            .def_readonly("accuracy", &TokenMetrics::accuracy)
            .def_readonly("nll", &TokenMetrics::nll)
            .def_readonly("positions", &TokenMetrics::positions);

    m.def("token_metrics",
          [](const ContextProvider& provider, const Index* index, const LinearMap* map,
             const RetrievalParams& params, const Corpus& corpus) {
              return token_metrics(provider, index, map, params, corpus);
          },
          py::arg("provider"), py::arg("index"), py::arg("map"), py::arg("params"),
          py::arg("corpus"));
    m.def("corpus_bleu", &corpus_bleu, py::arg("hypotheses"), py::arg("references"));
    m.def("size_quality_correlation", &size_quality_correlation, py::arg("points"));

    m.def("fixture_table", [] {
        py::list rows;
        for (const auto& row : fixtures::appendix_table()) {
            py::dict d;
            d["lang"] = row.lang;
            d["entries"] = row.entries;
            d["family"] = row.family;
            d["grouping"] = row.grouping;
            d["bridge"] = row.bridge;
            rows.append(d);
        }
        return rows;
    });
    m.def("fixture_p_uni", &fixtures::p_uni, py::arg("lang"));
}
