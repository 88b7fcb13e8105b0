#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "knnmt/eval.hpp"
#include "knnmt/index.hpp"
#include "knnmt/synth.hpp"

namespace knnmt {

struct CorpusSpec {
    std::size_t n_train = 0;
    std::size_t n_dev = 0;
    std::size_t n_test = 0;
    std::size_t mean_length = 8;
};

// Everything a pipeline run needs: the world, per-language corpus sizes,
// sentence-id bases for the three splits, index parameters, tuning grids,
// and default retrieval parameters.
struct RunConfig {
    WorldConfig world;
    std::string target_lang = "en";
    std::map<std::string, CorpusSpec> corpora; // keyed by language code
    std::uint64_t train_base = 0;
    std::uint64_t dev_base = 1000000;
    std::uint64_t test_base = 2000000;
    IndexParams index;
    Grids grids;
    RetrievalParams retrieval;
    std::string out_dir = "out";
};

RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& config, const std::string& path);

// The seeded 3-groups x 3-languages harness configuration used throughout
// the tests and the README walkthrough (one low-resource language per group).
RunConfig reference_config();

} // namespace knnmt
