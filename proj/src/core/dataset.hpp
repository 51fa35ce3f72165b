#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "numerics.hpp"

namespace cdc {

enum class Split { base_train, base_test, new_test };

const char* split_name(Split s);
Split split_from_name(const std::string& name);  // throws UnknownSplitTag

struct Sample {
    Vec features;  // unit norm
    int label = 0;
    Split split = Split::base_train;
};

struct EmbeddingDataset {
    int dim = 0;
    int num_classes = 0;
    std::vector<std::string> class_names;
    std::vector<Sample> samples;

    // Classes observed in base-train/base-test rows, ascending.
    std::vector<int> base_classes() const;
    // Classes observed in new-test rows, ascending.
    std::vector<int> new_classes() const;
    std::size_t count(Split s) const;
};

struct ScmConfig {
    int dim = 64;
    int base_classes = 5;
    int new_classes = 5;
    int relevant_factors = 20;
    int irrelevant_factors = 12;
    // Per-coordinate noise scale on the ambient embedding.
    double noise_sigma = 0.12;
    // In [0, 1]: weight of the class-specific irrelevant mean on base
    // splits. 0 makes irrelevant loadings independent of the class there
    // too; new-test loadings are always independent draws.
    double confound_strength = 0.5;
    // Expected L2 energy of the irrelevant loading vector.
    double irrelevant_energy = 0.6;
    int shots = 16;           // base-train samples per base class
    int test_per_class = 100; // base-test / new-test samples per class
    std::uint64_t seed = 1;
};

EmbeddingDataset generate_scm_dataset(const ScmConfig& cfg);
// Also returns the orthonormal factor directions (relevant first), for
// inspection of the latent structure.
EmbeddingDataset generate_scm_dataset(const ScmConfig& cfg, std::vector<Vec>* factors_out);

void write_dataset(const EmbeddingDataset& ds, const std::string& path);
EmbeddingDataset read_dataset(const std::string& path);

// Re-tags samples so that exactly base_class_list is the base partition:
// train rows of other classes move to new-test, test rows follow their
// class. shots_limit >= 0 subsamples base-train per class with the seed.
EmbeddingDataset split_base_new(const EmbeddingDataset& ds, const std::vector<int>& base_class_list,
                                int shots_limit = -1, std::uint64_t seed = 0);

}  // namespace cdc
