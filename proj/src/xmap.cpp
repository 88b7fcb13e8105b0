#include "knnmt/xmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "knnmt/error.hpp"

namespace knnmt {

using json = nlohmann::json;
using Matrix = Eigen::MatrixXd;

LinearMap LinearMap::identity(std::size_t dim) {
    LinearMap m;
    m.dim = dim;
    m.matrix.assign(dim * dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) m.matrix[i * dim + i] = 1.0;
    return m;
}

namespace {

std::string single_source(const Datastore& store) {
    if (store.origins().size() == 1) return store.origins().at(0).source.code;
    return "";
}

} // namespace

AlignedPairSet extract_aligned_pairs(const Datastore& store1, const Datastore& store2) {
    KNNMT_REQUIRE(store1.dim() == store2.dim(), invalid_argument,
                  "aligned stores must share a dimension");
    KNNMT_REQUIRE(store1.target_lang().code == store2.target_lang().code, invalid_argument,
                  "aligned stores must share the target language");
    KNNMT_REQUIRE(store1.sealed() && store2.sealed(), invalid_state,
                  "aligned stores must be sealed");

    using Coord = std::pair<std::uint32_t, std::uint16_t>;
    // first occurrence wins if a coordinate repeats within one store
    std::map<Coord, std::size_t> where2;
    for (std::size_t i = store2.size(); i-- > 0;) {
        where2[Coord{store2.sentence_id(i), store2.position(i)}] = i;
    }

    std::map<Coord, std::size_t> where1;
    for (std::size_t i = store1.size(); i-- > 0;) {
        where1[Coord{store1.sentence_id(i), store1.position(i)}] = i;
    }

    AlignedPairSet out;
    out.dim = store1.dim();
    out.source_lang = single_source(store1);
    out.dest_lang = single_source(store2);
    for (const auto& [coord, i1] : where1) { // ordered by (sentence_id, position)
        auto it = where2.find(coord);
        if (it == where2.end()) continue;
        for (float v : store1.key(i1)) out.x.push_back(static_cast<double>(v));
        for (float v : store2.key(it->second)) out.y.push_back(static_cast<double>(v));
    }
    return out;
}

LinearMap fit_linear_map(const AlignedPairSet& pairs, std::optional<double> ridge) {
    const std::size_t n = pairs.size();
    const std::size_t d = pairs.dim;
    KNNMT_REQUIRE(n >= 1, invalid_argument, "fit needs at least one pair");
    KNNMT_REQUIRE(!ridge || *ridge >= 0.0, invalid_argument, "ridge must be >= 0");

    Eigen::Map<const Matrix> xt(pairs.x.data(), static_cast<Eigen::Index>(d),
                                static_cast<Eigen::Index>(n)); // column i = x_i
    Eigen::Map<const Matrix> yt(pairs.y.data(), static_cast<Eigen::Index>(d),
                                static_cast<Eigen::Index>(n));

    Matrix gram = xt * xt.transpose();      // X^T X
    Matrix cross = xt * yt.transpose();     // X^T Y
    double lambda = ridge ? *ridge : 1e-6 * gram.trace() / static_cast<double>(d);
    Matrix reg = gram;
    reg.diagonal().array() += lambda;

    // Cholesky, then a pivoted fallback; a singular unregularized system is
    // reported so the caller can retry with ridge > 0
    Matrix at; // A^T
    Eigen::LLT<Matrix> llt(reg);
    if (llt.info() == Eigen::Success) {
        at = llt.solve(cross);
    } else {
        Eigen::FullPivLU<Matrix> lu(reg);
        if (!lu.isInvertible()) {
            KNNMT_REQUIRE(lambda > 0.0, singular_system,
                          "X^T X is singular at ridge = 0; retry with ridge > 0");
        }
        at = lu.solve(cross);
    }

    LinearMap map;
    map.dim = d;
    map.source_lang = pairs.source_lang;
    map.dest_lang = pairs.dest_lang;
    map.ridge = lambda;
    map.matrix.resize(d * d);
    Eigen::Map<Matrix>(map.matrix.data(), static_cast<Eigen::Index>(d),
                       static_cast<Eigen::Index>(d)) = at; // row-major A = (A^T)^T

    Matrix resid = yt - at.transpose() * xt;
    map.residual = resid.squaredNorm() / static_cast<double>(n);
    for (double v : map.matrix) {
        KNNMT_REQUIRE(std::isfinite(v), singular_system, "fit produced non-finite entries");
    }
    return map;
}

std::vector<float> apply_map(const LinearMap& map, std::span<const float> v) {
    KNNMT_REQUIRE(v.size() == map.dim, invalid_argument, "vector dimension mismatch");
    std::vector<float> out(map.dim);
    for (std::size_t r = 0; r < map.dim; ++r) {
        double s = 0.0;
        const double* row = map.matrix.data() + r * map.dim;
        for (std::size_t c = 0; c < map.dim; ++c) s += row[c] * static_cast<double>(v[c]);
        out[r] = static_cast<float>(s);
    }
    return out;
}

Datastore remap_store(const Datastore& store, const LinearMap& map) {
    KNNMT_REQUIRE(store.dim() == map.dim, invalid_argument, "map dimension mismatch");
    KNNMT_REQUIRE(store.sealed(), invalid_state, "remap requires a sealed store");

    Datastore out(store.dim(), store.target_lang());
    for (const Origin& o : store.origins().entries()) out.origins_.add(o);
    out.values_ = store.values();
    out.origin_ids_ = store.origin_ids();
    out.sentence_ids_ = store.sentence_ids();
    out.positions_ = store.positions();
    out.keys_.resize(store.keys().size());
    for (std::size_t i = 0; i < store.size(); ++i) {
        std::vector<float> mapped = apply_map(map, store.key(i));
        std::copy(mapped.begin(), mapped.end(), out.keys_.begin() + i * store.dim());
    }
    out.set_provenance("remapped " + map.source_lang + "->" + map.dest_lang +
                       " ridge=" + std::to_string(map.ridge));
    out.seal();
    return out;
}

void save_map(const LinearMap& map, const std::string& path) {
    json j;
    j["dim"] = map.dim;
    j["matrix"] = map.matrix; // row-major
    j["source_lang"] = map.source_lang;
    j["dest_lang"] = map.dest_lang;
    j["ridge"] = map.ridge;
    j["residual"] = map.residual;
    std::ofstream out(path, std::ios::trunc);
    KNNMT_REQUIRE(out.good(), format_error, "cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

LinearMap load_map(const std::string& path) {
    std::ifstream in(path);
    KNNMT_REQUIRE(in.good(), format_error, "cannot open: " + path);
    json j;
    try {
        in >> j;
        LinearMap map;
        map.dim = j.at("dim").get<std::size_t>();
        map.matrix = j.at("matrix").get<std::vector<double>>();
        map.source_lang = j.value("source_lang", "");
        map.dest_lang = j.value("dest_lang", "");
        map.ridge = j.value("ridge", 0.0);
        map.residual = j.value("residual", 0.0);
        KNNMT_REQUIRE(map.matrix.size() == map.dim * map.dim, format_error,
                      "matrix size does not match dim in " + path);
        return map;
    } catch (const json::exception& e) {
        raise(ErrorCode::format_error, std::string("bad map json: ") + e.what());
    }
}

} // namespace knnmt
