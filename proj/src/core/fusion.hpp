#pragma once

#include <cstddef>

#include "numerics.hpp"

namespace cdc {

struct EvidenceVector {
    Vec evidence;            // one non-negative entry per class
    int template_index = 0;  // 0-based
};

// How Dirichlet strength is formed from evidence. subjective_logic uses
// S = sum(e) + C, which keeps sum(b) + u = 1 and is the rule used by the
// whole pipeline. literal_sum_plus_one uses S = sum(e) + 1; it is kept only
// for side-by-side comparison and its opinions violate the fusion
// precondition whenever C > 1.
enum class StrengthRule { subjective_logic, literal_sum_plus_one };

struct DirichletOpinion {
    Vec beliefs;
    double uncertainty = 1.0;
    double strength = 0.0;  // sum of Dirichlet parameters alpha = e + 1
};

struct FusedPrediction {
    Vec beliefs;
    double uncertainty = 1.0;
    Vec probabilities;
    int fused_count = 0;
    bool vacuous = false;  // all fused belief mass below the working floor
};

// e_c = min(exp(sim_c / tau), clamp); strictly positive, tau > 0, clamp > 0.
EvidenceVector evidence_from_similarity(const Vec& sims, double tau, double clamp,
                                        int template_index = 0);

DirichletOpinion opinion_from_evidence(const EvidenceVector& ev,
                                       StrengthRule rule = StrengthRule::subjective_logic);

DirichletOpinion vacuous_opinion(std::size_t num_classes);

// Reduced Dempster combination over singletons plus total uncertainty.
// Pre: both operands satisfy sum(b) + u = 1 within 1e-8.
// Throws TotalConflict when the conflict mass reaches 1 - 1e-12.
DirichletOpinion fuse_pair(const DirichletOpinion& a, const DirichletOpinion& b);

// Left fold of fuse_pair in input order, then front-door probabilities.
FusedPrediction fuse_sequence(const std::vector<DirichletOpinion>& opinions);

// P_c = b_c / sum(b); uniform with *vacuous set when the mass underflows.
Vec frontdoor_probabilities(const Vec& beliefs, bool* vacuous = nullptr);

}  // namespace cdc
