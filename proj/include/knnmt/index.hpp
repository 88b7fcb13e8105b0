#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "knnmt/datastore.hpp"

namespace knnmt {

struct SearchHit {
    std::size_t entry_index = 0;
    double distance = 0.0; // squared Euclidean
    Token token = 0;
    std::uint16_t origin = 0;
};

// Sorted ascending by (distance, entry_index); length = min(k, |D|).
using HitList = std::vector<SearchHit>;

struct IndexParams {
    enum class Kind { flat, ivf };
    Kind kind = Kind::flat;
    std::size_t nlist = 0;  // ivf; 0 = ceil(sqrt(|D|))
    std::size_t nprobe = 8; // ivf
    std::uint64_t seed = 0; // coarse-centroid initialization
};

// squared L2 with double accumulation; shared by every search path so that
// flat, ivf, and persisted indexes rank identically
double l2_sq(std::span<const float> a, const float* b, std::size_t dim);

class Index {
  public:
    virtual ~Index() = default;

    virtual HitList search(std::span<const float> query, std::size_t k) const = 0;
    virtual IndexParams::Kind kind() const = 0;

    const Datastore& store() const { return *store_; }
    std::size_t dim() const { return store_->dim(); }
    std::size_t size() const { return store_->size(); }

  protected:
    explicit Index(const Datastore& store) : store_(&store) {}
    const Datastore* store_;
};

// Exhaustive scan; results match the brute-force oracle exactly.
class FlatIndex : public Index {
  public:
    explicit FlatIndex(const Datastore& store);
    HitList search(std::span<const float> query, std::size_t k) const override;
    IndexParams::Kind kind() const override { return IndexParams::Kind::flat; }
};

// Inverted-file index: keys partitioned by nearest coarse centroid
// (k-means, 20 iterations, seeded); search scans the nprobe nearest cells.
class IvfIndex : public Index {
  public:
    IvfIndex(const Datastore& store, const IndexParams& params);
    HitList search(std::span<const float> query, std::size_t k) const override;
    IndexParams::Kind kind() const override { return IndexParams::Kind::ivf; }

    std::size_t nlist() const { return nlist_; }
    std::size_t nprobe() const { return nprobe_; }
    const std::vector<float>& centroids() const { return centroids_; }
    const std::vector<std::vector<std::uint32_t>>& cells() const { return cells_; }

  private:
    friend std::unique_ptr<IvfIndex> load_index(const Datastore&, const std::string&);
    IvfIndex(const Datastore& store, std::size_t nlist, std::size_t nprobe,
             std::vector<float> centroids, std::vector<std::vector<std::uint32_t>> cells);

    std::size_t nlist_;
    std::size_t nprobe_;
    std::vector<float> centroids_; // nlist x dim
    std::vector<std::vector<std::uint32_t>> cells_;
};

std::unique_ptr<FlatIndex> build_flat(const Datastore& store);
std::unique_ptr<IvfIndex> build_ivf(const Datastore& store, const IndexParams& params);
std::unique_ptr<Index> build_index(const Datastore& store, const IndexParams& params);

// Mean fraction of `exact`'s top-k entry indices recovered by `index`.
double recall_at_k(const Index& index, const Index& exact,
                   const std::vector<std::vector<float>>& queries, std::size_t k);

// Optional "KIX1" persistence for ivf indexes; the datastore is not embedded,
// so loading requires the same store the index was built over.
void save_index(const IvfIndex& index, const std::string& path);
std::unique_ptr<IvfIndex> load_index(const Datastore& store, const std::string& path);

} // namespace knnmt
