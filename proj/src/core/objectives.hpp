#pragma once

#include <vector>

#include "bank.hpp"
#include "fusion.hpp"

namespace cdc {

struct LossBreakdown {
    double trusted_ce = 0.0;
    double decoupling = 0.0;
    double consistency = 0.0;
    double total = 0.0;
};

LossBreakdown total_loss(double trusted, double decoupling, double consistency, double beta,
                         double gamma);

// Softmax over cosine scores of a query against a template's class rows.
// Query and rows must share one dimension; rows are assumed unit norm.
Vec cross_template_classify(const Vec& query, const std::vector<Vec>& rows, double tau);

// Mean over ordered template pairs and classes of sum_k P_k log P_k where P
// classifies template m's class row against template m''s bank. Range
// [-log C, 0]; minimized when every cross-template posterior is uniform.
// Throws TooFewTemplates for fewer than two banks.
double decoupling_loss(const std::vector<std::vector<Vec>>& banks, double tau);

// -(1/C) sum over templates and classes of log P(c | w_c^m, anchor rows).
double consistency_loss(const std::vector<std::vector<Vec>>& banks,
                        const std::vector<Vec>& anchor_rows, double tau);

// One sample's evidential loss summed over templates:
// psi(sum alpha) - psi(alpha_label), alpha = evidence + 1.
double trusted_ce(const std::vector<EvidenceVector>& per_template_evidence, int label);

struct TrainSample {
    std::vector<Vec> views;  // one augmented unit view per template
    int label = 0;           // index into the class subset
};

struct LossParams {
    double tau = 0.01;     // evidence temperature
    double de_tau = 0.5;   // decoupling/consistency softmax temperature
    double beta = 5.0;
    double gamma = 0.01;
    double clamp = 1e6;
    bool evidential = true;  // false: conventional softmax cross-entropy
    bool decouple = true;    // false: decoupling and consistency terms off
};

// Per-template parameter gradients, each num_templates x param_dim.
struct GradientBundle {
    std::vector<Vec> trusted_ce;
    std::vector<Vec> decoupling;
    std::vector<Vec> consistency;
    std::vector<Vec> total;
};

// Batch loss over the class subset; the classification frame is the subset
// only. Batch mean applies to the per-sample term; the decoupling and
// consistency terms depend only on the bank. With grads != nullptr the
// analytic parameter gradients of every term are filled in.
LossBreakdown loss_and_gradients(const TemplateBank& bank, const std::vector<int>& class_subset,
                                 const std::vector<TrainSample>& batch, const LossParams& params,
                                 GradientBundle* grads);

inline LossBreakdown evaluate_losses(const TemplateBank& bank, const std::vector<int>& class_subset,
                                     const std::vector<TrainSample>& batch,
                                     const LossParams& params) {
    return loss_and_gradients(bank, class_subset, batch, params, nullptr);
}

}  // namespace cdc
