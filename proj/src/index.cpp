#include "knnmt/index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <queue>

#include "knnmt/error.hpp"
#include "knnmt/rng.hpp"

namespace knnmt {

double l2_sq(std::span<const float> a, const float* b, std::size_t dim) {
    double s = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        s += diff * diff;
    }
    return s;
}

namespace {

// bounded candidate set ordered by (distance, entry_index), worst on top
struct Candidate {
    double distance;
    std::size_t index;
    bool operator<(const Candidate& o) const {
        return distance < o.distance || (distance == o.distance && index < o.index);
    }
};

class TopK {
  public:
    explicit TopK(std::size_t k) : k_(k) {}

    void offer(double distance, std::size_t index) {
        Candidate c{distance, index};
        if (heap_.size() < k_) {
            heap_.push(c);
        } else if (c < heap_.top()) {
            heap_.pop();
            heap_.push(c);
        }
    }

    double worst() const { return heap_.size() < k_ ? HUGE_VAL : heap_.top().distance; }

    HitList finish(const Datastore& store) {
        std::vector<Candidate> sorted(heap_.size());
        for (std::size_t i = heap_.size(); i-- > 0;) {
            sorted[i] = heap_.top();
            heap_.pop();
        }
        HitList hits;
        hits.reserve(sorted.size());
        for (const Candidate& c : sorted) {
            hits.push_back(SearchHit{c.index, c.distance, store.value(c.index),
                                     store.origin_id(c.index)});
        }
        return hits;
    }

  private:
    std::size_t k_;
    std::priority_queue<Candidate> heap_;
};

void check_query(const Datastore& store, std::span<const float> query, std::size_t k) {
    KNNMT_REQUIRE(query.size() == store.dim(), invalid_argument,
                  "query dimension does not match index");
    KNNMT_REQUIRE(k >= 1, invalid_argument, "k must be >= 1");
}

} // namespace

// ------------------------------------------------------------------- flat

FlatIndex::FlatIndex(const Datastore& store) : Index(store) {
    KNNMT_REQUIRE(store.sealed(), invalid_state, "index requires a sealed store");
}

HitList FlatIndex::search(std::span<const float> query, std::size_t k) const {
    check_query(*store_, query, k);
    const float* keys = store_->keys().data();
    const std::size_t dim = store_->dim();
    TopK top(k);
    for (std::size_t i = 0, n = store_->size(); i < n; ++i) {
        top.offer(l2_sq(query, keys + i * dim, dim), i);
    }
    return top.finish(*store_);
}

// -------------------------------------------------------------------- ivf

namespace {

std::size_t nearest_centroid(std::span<const float> point, const std::vector<float>& centroids,
                             std::size_t nlist, std::size_t dim) {
    std::size_t best = 0;
    double best_d = l2_sq(point, centroids.data(), dim);
    for (std::size_t c = 1; c < nlist; ++c) {
        double d = l2_sq(point, centroids.data() + c * dim, dim);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

// k-means, fixed 20 iterations, deterministic: seeded init on distinct
// points, ties to the lower centroid index, empty cells keep their centroid.
std::vector<float> kmeans(const Datastore& store, std::size_t nlist, std::uint64_t seed) {
    const std::size_t n = store.size();
    const std::size_t dim = store.dim();
    std::vector<float> centroids(nlist * dim);

    RandomStream init(seed, "ivf-init");
    std::vector<std::size_t> picked;
    picked.reserve(nlist);
    std::vector<bool> used(n, false);
    std::uint64_t draw = 0;
    while (picked.size() < nlist) {
        auto idx = static_cast<std::size_t>(init.uniform_int(draw++, n));
        if (!used[idx]) {
            used[idx] = true;
            picked.push_back(idx);
        }
    }
    std::sort(picked.begin(), picked.end());
    for (std::size_t c = 0; c < nlist; ++c) {
        std::memcpy(centroids.data() + c * dim, store.key(picked[c]).data(), dim * sizeof(float));
    }

    std::vector<std::size_t> assign(n);
    std::vector<double> sums(nlist * dim);
    std::vector<std::size_t> counts(nlist);
    for (int iter = 0; iter < 20; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            assign[i] = nearest_centroid(store.key(i), centroids, nlist, dim);
        }
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const float* key = store.key(i).data();
            double* sum = sums.data() + assign[i] * dim;
            for (std::size_t j = 0; j < dim; ++j) sum[j] += key[j];
            counts[assign[i]]++;
        }
        for (std::size_t c = 0; c < nlist; ++c) {
            if (counts[c] == 0) continue;
            float* centroid = centroids.data() + c * dim;
            for (std::size_t j = 0; j < dim; ++j) {
                centroid[j] = static_cast<float>(sums[c * dim + j] / counts[c]);
            }
        }
    }
    return centroids;
}

} // namespace

IvfIndex::IvfIndex(const Datastore& store, const IndexParams& params) : Index(store) {
    KNNMT_REQUIRE(store.sealed(), invalid_state, "index requires a sealed store");
    nlist_ = params.nlist;
    if (nlist_ == 0) {
        nlist_ = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(store.size()))));
        nlist_ = std::max<std::size_t>(nlist_, 1);
    }
    KNNMT_REQUIRE(store.size() >= nlist_, invalid_argument,
                  "ivf needs count >= nlist");
    nprobe_ = std::min(params.nprobe, nlist_);
    KNNMT_REQUIRE(nprobe_ >= 1, invalid_argument, "nprobe must be >= 1");

    centroids_ = kmeans(store, nlist_, params.seed);
    cells_.assign(nlist_, {});
    for (std::size_t i = 0, n = store.size(); i < n; ++i) {
        std::size_t c = nearest_centroid(store.key(i), centroids_, nlist_, store.dim());
        cells_[c].push_back(static_cast<std::uint32_t>(i));
    }
}

IvfIndex::IvfIndex(const Datastore& store, std::size_t nlist, std::size_t nprobe,
                   std::vector<float> centroids, std::vector<std::vector<std::uint32_t>> cells)
        : Index(store),
          nlist_(nlist),
          nprobe_(nprobe),
          centroids_(std::move(centroids)),
          cells_(std::move(cells)) {}

HitList IvfIndex::search(std::span<const float> query, std::size_t k) const {
    check_query(*store_, query, k);
    const std::size_t dim = store_->dim();

    std::vector<Candidate> order(nlist_);
    for (std::size_t c = 0; c < nlist_; ++c) {
        order[c] = Candidate{l2_sq(query, centroids_.data() + c * dim, dim), c};
    }
    std::size_t probes = std::min(nprobe_, nlist_);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(probes),
                      order.end());

    const float* keys = store_->keys().data();
    TopK top(k);
    for (std::size_t p = 0; p < probes; ++p) {
        for (std::uint32_t i : cells_[order[p].index]) {
            top.offer(l2_sq(query, keys + static_cast<std::size_t>(i) * dim, dim), i);
        }
    }
    return top.finish(*store_);
}

std::unique_ptr<FlatIndex> build_flat(const Datastore& store) {
    return std::make_unique<FlatIndex>(store);
}

std::unique_ptr<IvfIndex> build_ivf(const Datastore& store, const IndexParams& params) {
    return std::make_unique<IvfIndex>(store, params);
}

std::unique_ptr<Index> build_index(const Datastore& store, const IndexParams& params) {
    if (params.kind == IndexParams::Kind::flat) return build_flat(store);
    return build_ivf(store, params);
}

double recall_at_k(const Index& index, const Index& exact,
                   const std::vector<std::vector<float>>& queries, std::size_t k) {
    KNNMT_REQUIRE(&index.store() == &exact.store(), invalid_argument,
                  "recall requires indexes over the same store");
    if (queries.empty()) return 0.0;
    double total = 0.0;
    for (const auto& q : queries) {
        HitList truth = exact.search(q, k);
        if (truth.empty()) continue;
        HitList got = index.search(q, k);
        std::size_t overlap = 0;
        for (const SearchHit& h : got) {
            for (const SearchHit& t : truth) {
                if (t.entry_index == h.entry_index) {
                    overlap++;
                    break;
                }
            }
        }
        total += static_cast<double>(overlap) / static_cast<double>(truth.size());
    }
    return total / static_cast<double>(queries.size());
}

// ---------------------------------------------------------- persistence

void save_index(const IvfIndex& index, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    KNNMT_REQUIRE(out.good(), format_error, "cannot open for writing: " + path);
    const char magic[4] = {'K', 'N', 'N', 'I'};
    out.write(magic, 4);
    const unsigned char ver[4] = {1, 1, 0, 0}; // version, kind=ivf, reserved
    out.write(reinterpret_cast<const char*>(ver), 4);
    auto dim = static_cast<std::uint32_t>(index.dim());
    auto nlist = static_cast<std::uint32_t>(index.nlist());
    auto nprobe = static_cast<std::uint32_t>(index.nprobe());
    auto count = static_cast<std::uint64_t>(index.size());
    out.write(reinterpret_cast<const char*>(&dim), 4);
    out.write(reinterpret_cast<const char*>(&nlist), 4);
    out.write(reinterpret_cast<const char*>(&nprobe), 4);
    out.write(reinterpret_cast<const char*>(&count), 8);
    out.write(reinterpret_cast<const char*>(index.centroids().data()),
              static_cast<std::streamsize>(index.centroids().size() * sizeof(float)));
    // cell offsets then the entry-index permutation, cell by cell
    std::uint64_t offset = 0;
    for (const auto& cell : index.cells()) {
        out.write(reinterpret_cast<const char*>(&offset), 8);
        offset += cell.size();
    }
    out.write(reinterpret_cast<const char*>(&offset), 8);
    for (const auto& cell : index.cells()) {
        out.write(reinterpret_cast<const char*>(cell.data()),
                  static_cast<std::streamsize>(cell.size() * sizeof(std::uint32_t)));
    }
    KNNMT_REQUIRE(out.good(), format_error, "write failed: " + path);
}

std::unique_ptr<IvfIndex> load_index(const Datastore& store, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    KNNMT_REQUIRE(in.good(), format_error, "cannot open: " + path);
    char magic[4] = {};
    in.read(magic, 4);
    KNNMT_REQUIRE(in.gcount() == 4 && std::memcmp(magic, "KNNI", 4) == 0, format_error,
                  "bad magic bytes in " + path);
    unsigned char ver[4] = {};
    in.read(reinterpret_cast<char*>(ver), 4);
    KNNMT_REQUIRE(in.gcount() == 4 && ver[0] == 1 && ver[1] == 1, format_error,
                  "unsupported KIX version/kind");
    std::uint32_t dim = 0, nlist = 0, nprobe = 0;
    std::uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&dim), 4);
    in.read(reinterpret_cast<char*>(&nlist), 4);
    in.read(reinterpret_cast<char*>(&nprobe), 4);
    in.read(reinterpret_cast<char*>(&count), 8);
    KNNMT_REQUIRE(in.good(), format_error, "bad KIX header");
    KNNMT_REQUIRE(dim == store.dim() && count == store.size(), format_error,
                  "index file does not match the datastore");

    std::vector<float> centroids(static_cast<std::size_t>(nlist) * dim);
    in.read(reinterpret_cast<char*>(centroids.data()),
            static_cast<std::streamsize>(centroids.size() * sizeof(float)));
    std::vector<std::uint64_t> offsets(nlist + 1);
    in.read(reinterpret_cast<char*>(offsets.data()),
            static_cast<std::streamsize>(offsets.size() * sizeof(std::uint64_t)));
    KNNMT_REQUIRE(in.good() && offsets.back() == count, format_error, "bad KIX cell table");
    std::vector<std::vector<std::uint32_t>> cells(nlist);
    for (std::size_t c = 0; c < nlist; ++c) {
        std::size_t len = static_cast<std::size_t>(offsets[c + 1] - offsets[c]);
        cells[c].resize(len);
        in.read(reinterpret_cast<char*>(cells[c].data()),
                static_cast<std::streamsize>(len * sizeof(std::uint32_t)));
    }
    KNNMT_REQUIRE(in.good(), format_error, "truncated index file");
    return std::unique_ptr<IvfIndex>(
            new IvfIndex(store, nlist, nprobe, std::move(centroids), std::move(cells)));
}

} // namespace knnmt
