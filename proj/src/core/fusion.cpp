#include "fusion.hpp"

#include <cmath>
#include <string>

namespace cdc {

namespace {

constexpr double kClosureTol = 1e-8;
constexpr double kConflictCeiling = 1.0 - 1e-12;
constexpr double kMassFloor = 1e-300;

void require_opinion(const DirichletOpinion& o, const char* who) {
    if (o.beliefs.empty()) {
        fail(errc::invalid_argument, std::string(who) + ": empty opinion");
    }
    double mass = o.uncertainty;
    for (double b : o.beliefs) {
        if (b < -1e-12 || !std::isfinite(b)) {
            fail(errc::invalid_argument, std::string(who) + ": belief " + std::to_string(b));
        }
        mass += b;
    }
    if (std::abs(mass - 1.0) > kClosureTol) {
        fail(errc::invalid_argument,
             std::string(who) + ": belief mass " + std::to_string(mass) + " is not 1");
    }
}

}  // namespace

EvidenceVector evidence_from_similarity(const Vec& sims, double tau, double clamp,
                                        int template_index) {
    if (!(tau > 0.0)) {
        fail(errc::non_positive_temperature, "evidence_from_similarity: tau " + std::to_string(tau));
    }
    if (!(clamp > 0.0)) {
        fail(errc::invalid_argument, "evidence_from_similarity: clamp " + std::to_string(clamp));
    }
    if (sims.empty()) {
        fail(errc::invalid_argument, "evidence_from_similarity: empty similarities");
    }
    EvidenceVector ev;
    ev.template_index = template_index;
    ev.evidence.resize(sims.size());
    for (std::size_t c = 0; c < sims.size(); ++c) {
        ev.evidence[c] = std::min(std::exp(sims[c] / tau), clamp);
    }
    return ev;
}

DirichletOpinion opinion_from_evidence(const EvidenceVector& ev, StrengthRule rule) {
    const std::size_t num_classes = ev.evidence.size();
    if (num_classes == 0) {
        fail(errc::invalid_argument, "opinion_from_evidence: empty evidence");
    }
    double sum = 0.0;
    for (double e : ev.evidence) {
        if (e < 0.0 || !std::isfinite(e)) {
            fail(errc::invalid_argument, "opinion_from_evidence: evidence " + std::to_string(e));
        }
        sum += e;
    }
    DirichletOpinion o;
    o.strength = sum + static_cast<double>(num_classes);
    const double uncertainty_mass = (rule == StrengthRule::subjective_logic)
                                        ? static_cast<double>(num_classes)
                                        : 1.0;
    const double denom = sum + uncertainty_mass;
    o.beliefs.resize(num_classes);
    for (std::size_t c = 0; c < num_classes; ++c) o.beliefs[c] = ev.evidence[c] / denom;
    o.uncertainty = uncertainty_mass / denom;
    return o;
}

DirichletOpinion vacuous_opinion(std::size_t num_classes) {
    if (num_classes == 0) {
        fail(errc::invalid_argument, "vacuous_opinion: zero classes");
    }
    DirichletOpinion o;
    o.beliefs.assign(num_classes, 0.0);
    o.uncertainty = 1.0;
    o.strength = static_cast<double>(num_classes);
    return o;
}

DirichletOpinion fuse_pair(const DirichletOpinion& a, const DirichletOpinion& b) {
    require_opinion(a, "fuse_pair");
    require_opinion(b, "fuse_pair");
    if (a.beliefs.size() != b.beliefs.size()) {
        fail(errc::dimension_mismatch, "fuse_pair: " + std::to_string(a.beliefs.size()) + " vs " +
                                           std::to_string(b.beliefs.size()));
    }
    const std::size_t n = a.beliefs.size();
    double sum_a = 0.0;
    double sum_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum_a += a.beliefs[i];
        sum_b += b.beliefs[i];
    }
    // K = sum_{i != j} b_i^a b_j^b, accumulated as the complement of the
    // diagonal to stay O(n).
    double agree = 0.0;
    for (std::size_t i = 0; i < n; ++i) agree += a.beliefs[i] * b.beliefs[i];
    const double conflict = sum_a * sum_b - agree;
    if (conflict >= kConflictCeiling) {
        fail(errc::total_conflict, "fuse_pair: conflict mass " + std::to_string(conflict));
    }
    const double norm = 1.0 - conflict;
    DirichletOpinion out;
    out.beliefs.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.beliefs[i] = (a.beliefs[i] * b.beliefs[i] + a.beliefs[i] * b.uncertainty +
                          b.beliefs[i] * a.uncertainty) /
                         norm;
    }
    out.uncertainty = a.uncertainty * b.uncertainty / norm;
    // Strength of the induced Dirichlet: u = C / S.
    out.strength = static_cast<double>(n) / out.uncertainty;
    return out;
}

FusedPrediction fuse_sequence(const std::vector<DirichletOpinion>& opinions) {
    if (opinions.empty()) {
        fail(errc::invalid_argument, "fuse_sequence: no opinions");
    }
    require_opinion(opinions[0], "fuse_sequence");
    DirichletOpinion acc = opinions[0];
    for (std::size_t m = 1; m < opinions.size(); ++m) {
        try {
            acc = fuse_pair(acc, opinions[m]);
        } catch (const Error& e) {
            if (e.code() == errc::total_conflict) {
                fail(errc::total_conflict,
                     "fuse_sequence: opinion " + std::to_string(m) + ": " + e.what());
            }
            throw;
        }
    }
    FusedPrediction out;
    out.beliefs = acc.beliefs;
    out.uncertainty = acc.uncertainty;
    out.fused_count = static_cast<int>(opinions.size());
    out.probabilities = frontdoor_probabilities(acc.beliefs, &out.vacuous);
    return out;
}

Vec frontdoor_probabilities(const Vec& beliefs, bool* vacuous) {
    if (beliefs.empty()) {
        fail(errc::invalid_argument, "frontdoor_probabilities: empty beliefs");
    }
    double sum = 0.0;
    for (double b : beliefs) {
        if (b < -1e-12 || !std::isfinite(b)) {
            fail(errc::invalid_argument, "frontdoor_probabilities: belief " + std::to_string(b));
        }
        sum += b;
    }
    Vec probs(beliefs.size());
    if (sum <= kMassFloor) {
        const double uniform = 1.0 / static_cast<double>(beliefs.size());
        for (double& p : probs) p = uniform;
        if (vacuous != nullptr) *vacuous = true;
        return probs;
    }
    for (std::size_t i = 0; i < beliefs.size(); ++i) probs[i] = beliefs[i] / sum;
    if (vacuous != nullptr) *vacuous = false;
    return probs;
}

}  // namespace cdc
