#pragma once

#include <cstdint>
#include <vector>

#include "objectives.hpp"

namespace cdc {

struct TrainConfig {
    int num_templates = 4;   // M
    int epochs = 50;
    int batch_size = 4;
    int param_dim = 16;      // p
    double learning_rate = 0.035;
    double tau = 0.01;
    double de_tau = 0.5;
    double beta = 5.0;
    double gamma = 0.01;
    double evidence_clamp = 1e6;
    std::uint64_t seed = 1;
    // One entry per template; empty means the built-in rotation of
    // identity, jitter, mask, rotate, scale.
    std::vector<AugmentationChannel> channels;
    // Ablation switches. dstc off: conventional softmax training and
    // arithmetic-mean prediction instead of evidence fusion. vsd_image off:
    // every channel collapses to identity. vsd_text off: the decoupling and
    // consistency terms are removed from the objective.
    bool dstc = true;
    bool vsd_image = true;
    bool vsd_text = true;

    AugmentationChannel channel_for(int m) const;
    void validate() const;
};

struct TrainingHistory {
    std::vector<LossBreakdown> epochs;  // per-epoch means
};

struct TrainResult {
    TemplateBank bank;
    TrainingHistory history;
};

// Optimizes the template parameters on base-train rows with plain SGD, one
// joint step over all templates per minibatch. Single-threaded on purpose:
// reruns with one config and seed are bit-identical.
TrainResult train(const EmbeddingDataset& ds, const TrainConfig& cfg);

// Evidence fusion across all templates over the full class set. The input
// is expected unit-norm; test-time channels are identity.
FusedPrediction predict(const Vec& x, const TemplateBank& bank, const TrainConfig& cfg);

// One template's opinion over an explicit class frame.
DirichletOpinion template_opinion(const Vec& x, const TemplateBank& bank, int m,
                                  const TrainConfig& cfg, const std::vector<int>& class_subset);

struct EvalReport {
    double base_accuracy = 0.0;  // percent
    double new_accuracy = 0.0;
    double harmonic_mean_accuracy = 0.0;
    std::vector<double> per_template_base_accuracy;
    std::vector<double> per_template_new_accuracy;
    double mean_uncertainty = 0.0;  // fused, over scored samples
    int vacuous_count = 0;
    int conflict_count = 0;
};

// Base rows are scored against the base classes only and new rows against
// the new classes only; each partition is its own classification frame.
EvalReport evaluate(const EmbeddingDataset& ds, const TemplateBank& bank, const TrainConfig& cfg);

// 2bn/(b+n) on percentages; 0 when either side is 0.
double harmonic_mean(double base, double neww);

}  // namespace cdc
