#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dataset.hpp"

namespace cdc {

enum class ChannelKind { identity, gaussian_jitter, coordinate_mask, subspace_rotation, scale_jitter };

// One semantic view of the input. Every non-identity channel renormalizes
// its output; identity and any zero-strength channel return the input
// unchanged, bit for bit.
struct AugmentationChannel {
    ChannelKind kind = ChannelKind::identity;
    double sigma = 0.0;   // gaussian_jitter: per-coordinate noise scale
    double rate = 0.0;    // coordinate_mask: zeroing probability
    double angle = 0.0;   // subspace_rotation: radians per plane
    int planes = 0;       // subspace_rotation: number of coordinate planes
    double range = 0.0;   // scale_jitter: per-coordinate gain in [1-r, 1+r]

    // Textual forms: "identity", "jitter:<sigma>", "mask:<rate>",
    // "rotate:<angle>:<planes>", "scale:<range>".
    static AugmentationChannel parse(const std::string& text);
    std::string to_string() const;
};

Vec apply_augmentation(const Vec& x, const AugmentationChannel& ch, Rng& rng);

// M template parameter vectors in a low-dimensional space, mapped into the
// embedding space through one fixed seeded projection and added to frozen
// per-class anchor directions.
struct TemplateBank {
    int num_templates = 0;  // M
    int num_classes = 0;    // C
    int dim = 0;            // d
    int param_dim = 0;      // p
    std::vector<Vec> projection;  // d rows of length p
    std::vector<Vec> anchors;     // C unit rows of length d
    std::vector<Vec> theta;       // M rows of length p
};

// Anchors are class centroids: base classes from base-train rows, classes
// seen only in new-test from those rows. Every class must have samples.
TemplateBank init_bank(const EmbeddingDataset& ds, int num_templates, int param_dim,
                       std::uint64_t seed);

// projection * theta[m], length d.
Vec project_theta(const TemplateBank& bank, int m);

// Unit rows w_c = normalize(anchor_c + projection * theta[m]). A degenerate
// row falls back to a locally jittered offset; the bank is not mutated.
std::vector<Vec> materialize_template(const TemplateBank& bank, int m);
std::vector<std::vector<Vec>> materialize(const TemplateBank& bank);

void save_checkpoint(const TemplateBank& bank, const std::string& path);
TemplateBank load_checkpoint(const std::string& path);

}  // namespace cdc
