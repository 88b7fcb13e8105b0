#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "knnmt/datastore.hpp"

namespace knnmt {

// Translation-context pairs joined across two datastores on equal
// (sentence_id, position) coordinates; rows of x come from the first store,
// rows of y from the second.
struct AlignedPairSet {
    std::size_t dim = 0;
    std::vector<double> x; // n x dim, row-major
    std::vector<double> y; // n x dim, row-major
    std::string source_lang;
    std::string dest_lang;

    std::size_t size() const { return dim == 0 ? 0 : x.size() / dim; }
};

// d x d linear map A with y ~= A x, fit by the ridge-regularized normal
// equations.
struct LinearMap {
    std::size_t dim = 0;
    std::vector<double> matrix; // row-major d x d
    std::string source_lang;
    std::string dest_lang;
    double ridge = 0.0;
    double residual = 0.0; // mean squared fit error (1/n) sum ||y - A x||^2

    static LinearMap identity(std::size_t dim);
};

AlignedPairSet extract_aligned_pairs(const Datastore& store1, const Datastore& store2);

// Solves (X^T X + ridge I) A^T = X^T Y by Cholesky, falling back to a
// pivoted decomposition; ridge = nullopt picks 1e-6 * trace(X^T X) / d.
// Singular system with ridge == 0 raises singular_system.
LinearMap fit_linear_map(const AlignedPairSet& pairs, std::optional<double> ridge = 0.0);

std::vector<float> apply_map(const LinearMap& map, std::span<const float> v);

// New sealed store with every key replaced by A * key; all other columns
// are copied verbatim.
Datastore remap_store(const Datastore& store, const LinearMap& map);

// JSON persistence (dim, row-major matrix, langs, ridge, residual).
void save_map(const LinearMap& map, const std::string& path);
LinearMap load_map(const std::string& path);

} // namespace knnmt
