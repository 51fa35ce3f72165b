#include "objectives.hpp"

#include <cmath>
#include <string>

namespace cdc {

namespace {

void require_banks(const std::vector<std::vector<Vec>>& banks, const char* op) {
    if (banks.empty() || banks[0].empty()) {
        fail(errc::invalid_argument, std::string(op) + ": empty bank list");
    }
    const std::size_t num_classes = banks[0].size();
    for (const auto& bank : banks) {
        if (bank.size() != num_classes) {
            fail(errc::dimension_mismatch, std::string(op) + ": ragged banks");
        }
    }
}

// d(sum_k P_k log P_k)/dz in-place given P and F = sum P log P.
Vec entropy_sum_grad(const Vec& probs, double value, double tau) {
    Vec g(probs.size());
    for (std::size_t k = 0; k < probs.size(); ++k) {
        g[k] = probs[k] * (std::log(probs[k]) - value) / tau;
    }
    return g;
}

struct MaterializedRows {
    // Rows restricted to the class subset, with the pre-normalization norms
    // needed for the backward pass.
    std::vector<std::vector<Vec>> rows;    // M x Csub x d
    std::vector<std::vector<double>> norm; // M x Csub
};

MaterializedRows materialize_subset(const TemplateBank& bank, const std::vector<int>& subset) {
    MaterializedRows out;
    out.rows.resize(static_cast<std::size_t>(bank.num_templates));
    out.norm.resize(static_cast<std::size_t>(bank.num_templates));
    for (int m = 0; m < bank.num_templates; ++m) {
        Vec offset = project_theta(bank, m);
        auto& rows = out.rows[static_cast<std::size_t>(m)];
        auto& norms = out.norm[static_cast<std::size_t>(m)];
        for (int c : subset) {
            const Vec& anchor = bank.anchors[static_cast<std::size_t>(c)];
            Vec raw(static_cast<std::size_t>(bank.dim));
            for (int i = 0; i < bank.dim; ++i) {
                raw[static_cast<std::size_t>(i)] =
                    anchor[static_cast<std::size_t>(i)] + offset[static_cast<std::size_t>(i)];
            }
            const double n = l2_norm(raw);
            if (n <= 1e-12) {
                fail(errc::zero_vector, "loss_and_gradients: degenerate row for class " +
                                            std::to_string(c) + ", template " + std::to_string(m));
            }
            for (double& v : raw) v /= n;
            rows.push_back(std::move(raw));
            norms.push_back(n);
        }
    }
    return out;
}

}  // namespace

LossBreakdown total_loss(double trusted, double decoupling, double consistency, double beta,
                         double gamma) {
    LossBreakdown out;
    out.trusted_ce = trusted;
    out.decoupling = decoupling;
    out.consistency = consistency;
    out.total = trusted + beta * decoupling + gamma * consistency;
    return out;
}

Vec cross_template_classify(const Vec& query, const std::vector<Vec>& rows, double tau) {
    if (rows.empty()) {
        fail(errc::invalid_argument, "cross_template_classify: empty bank");
    }
    Vec scores(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) scores[k] = dot(query, rows[k]);
    return softmax(scores, tau);
}

double decoupling_loss(const std::vector<std::vector<Vec>>& banks, double tau) {
    require_banks(banks, "decoupling_loss");
    const std::size_t num_templates = banks.size();
    if (num_templates < 2) {
        fail(errc::too_few_templates, "decoupling_loss: needs >= 2 templates");
    }
    const std::size_t num_classes = banks[0].size();
    double acc = 0.0;
    for (std::size_t m = 0; m < num_templates; ++m) {
        for (std::size_t m2 = 0; m2 < num_templates; ++m2) {
            if (m2 == m) continue;
            for (std::size_t c = 0; c < num_classes; ++c) {
                const Vec probs = cross_template_classify(banks[m][c], banks[m2], tau);
                for (double p : probs) acc += p * std::log(p);
            }
        }
    }
    const double pairs = static_cast<double>(num_templates * (num_templates - 1));
    return acc / (pairs * static_cast<double>(num_classes));
}

double consistency_loss(const std::vector<std::vector<Vec>>& banks,
                        const std::vector<Vec>& anchor_rows, double tau) {
    require_banks(banks, "consistency_loss");
    const std::size_t num_classes = banks[0].size();
    if (anchor_rows.size() != num_classes) {
        fail(errc::dimension_mismatch, "consistency_loss: " + std::to_string(anchor_rows.size()) +
                                           " anchors for " + std::to_string(num_classes) +
                                           " classes");
    }
    double acc = 0.0;
    for (const auto& bank : banks) {
        for (std::size_t c = 0; c < num_classes; ++c) {
            const Vec probs = cross_template_classify(bank[c], anchor_rows, tau);
            acc -= std::log(probs[c]);
        }
    }
    return acc / static_cast<double>(num_classes);
}

double trusted_ce(const std::vector<EvidenceVector>& per_template_evidence, int label) {
    if (per_template_evidence.empty()) {
        fail(errc::invalid_argument, "trusted_ce: no evidence");
    }
    double acc = 0.0;
    for (const EvidenceVector& ev : per_template_evidence) {
        if (label < 0 || label >= static_cast<int>(ev.evidence.size())) {
            fail(errc::unknown_class, "trusted_ce: label " + std::to_string(label));
        }
        double strength = 0.0;
        for (double e : ev.evidence) {
            if (e < 0.0 || !std::isfinite(e)) {
                fail(errc::invalid_argument, "trusted_ce: evidence " + std::to_string(e));
            }
            strength += e + 1.0;
        }
        acc += digamma(strength) - digamma(ev.evidence[static_cast<std::size_t>(label)] + 1.0);
    }
    return acc;
}

LossBreakdown loss_and_gradients(const TemplateBank& bank, const std::vector<int>& class_subset,
                                 const std::vector<TrainSample>& batch, const LossParams& params,
                                 GradientBundle* grads) {
    if (class_subset.empty()) {
        fail(errc::invalid_argument, "loss_and_gradients: empty class subset");
    }
    for (int c : class_subset) {
        if (c < 0 || c >= bank.num_classes) {
            fail(errc::unknown_class, "loss_and_gradients: class " + std::to_string(c));
        }
    }
    if (batch.empty()) {
        fail(errc::invalid_argument, "loss_and_gradients: empty batch");
    }
    if (!(params.tau > 0.0) || !(params.de_tau > 0.0)) {
        fail(errc::non_positive_temperature, "loss_and_gradients: tau must be > 0");
    }
    const std::size_t num_templates = static_cast<std::size_t>(bank.num_templates);
    const std::size_t subset_size = class_subset.size();
    for (const TrainSample& s : batch) {
        if (s.views.size() != num_templates) {
            fail(errc::dimension_mismatch, "loss_and_gradients: sample with " +
                                               std::to_string(s.views.size()) + " views");
        }
        for (const Vec& v : s.views) {
            if (static_cast<int>(v.size()) != bank.dim) {
                fail(errc::dimension_mismatch, "loss_and_gradients: view dim " +
                                                   std::to_string(v.size()));
            }
        }
        if (s.label < 0 || s.label >= static_cast<int>(subset_size)) {
            fail(errc::unknown_class, "loss_and_gradients: label " + std::to_string(s.label));
        }
    }

    const MaterializedRows mat = materialize_subset(bank, class_subset);

    // Accumulated d(loss)/d(row) per term, in the embedding space.
    const bool want_grads = grads != nullptr;
    auto make_rows_acc = [&] {
        return std::vector<std::vector<Vec>>(
            num_templates,
            std::vector<Vec>(subset_size, Vec(static_cast<std::size_t>(bank.dim), 0.0)));
    };
    std::vector<std::vector<Vec>> g_ce, g_de, g_con;
    if (want_grads) {
        g_ce = make_rows_acc();
        g_de = make_rows_acc();
        g_con = make_rows_acc();
    }

    const double batch_scale = 1.0 / static_cast<double>(batch.size());
    double ce_loss = 0.0;
    for (const TrainSample& sample : batch) {
        for (std::size_t m = 0; m < num_templates; ++m) {
            const Vec& view = sample.views[m];
            Vec sims(subset_size);
            for (std::size_t ci = 0; ci < subset_size; ++ci) {
                sims[ci] = dot(mat.rows[m][ci], view);
            }
            if (params.evidential) {
                Vec evidence(subset_size);
                std::vector<char> clamped(subset_size, 0);
                double strength = 0.0;
                for (std::size_t ci = 0; ci < subset_size; ++ci) {
                    const double raw = std::exp(sims[ci] / params.tau);
                    clamped[ci] = raw >= params.clamp ? 1 : 0;
                    evidence[ci] = clamped[ci] ? params.clamp : raw;
                    strength += evidence[ci] + 1.0;
                }
                const std::size_t y = static_cast<std::size_t>(sample.label);
                ce_loss += batch_scale * (digamma(strength) - digamma(evidence[y] + 1.0));
                if (want_grads) {
                    const double psi1_strength = trigamma(strength);
                    const double psi1_y = trigamma(evidence[y] + 1.0);
                    for (std::size_t ci = 0; ci < subset_size; ++ci) {
                        if (clamped[ci]) continue;
                        const double de_ds = evidence[ci] / params.tau;
                        const double dl_de = psi1_strength - (ci == y ? psi1_y : 0.0);
                        const double coeff = batch_scale * dl_de * de_ds;
                        Vec& acc = g_ce[m][ci];
                        for (int i = 0; i < bank.dim; ++i) {
                            acc[static_cast<std::size_t>(i)] +=
                                coeff * view[static_cast<std::size_t>(i)];
                        }
                    }
                }
            } else {
                const Vec probs = softmax(sims, params.tau);
                const std::size_t y = static_cast<std::size_t>(sample.label);
                ce_loss -= batch_scale * std::log(probs[y]);
                if (want_grads) {
                    for (std::size_t ci = 0; ci < subset_size; ++ci) {
                        const double coeff =
                            batch_scale * (probs[ci] - (ci == y ? 1.0 : 0.0)) / params.tau;
                        Vec& acc = g_ce[m][ci];
                        for (int i = 0; i < bank.dim; ++i) {
                            acc[static_cast<std::size_t>(i)] +=
                                coeff * view[static_cast<std::size_t>(i)];
                        }
                    }
                }
            }
        }
    }

    double de_loss = 0.0;
    double con_loss = 0.0;
    const bool decouple_active = params.decouple && num_templates >= 2;
    if (decouple_active) {
        const double scale = 1.0 / (static_cast<double>(num_templates * (num_templates - 1)) *
                                    static_cast<double>(subset_size));
        for (std::size_t m = 0; m < num_templates; ++m) {
            for (std::size_t m2 = 0; m2 < num_templates; ++m2) {
                if (m2 == m) continue;
                for (std::size_t ci = 0; ci < subset_size; ++ci) {
                    Vec scores(subset_size);
                    for (std::size_t k = 0; k < subset_size; ++k) {
                        scores[k] = dot(mat.rows[m][ci], mat.rows[m2][k]);
                    }
                    const Vec probs = softmax(scores, params.de_tau);
                    double value = 0.0;
                    for (double p : probs) value += p * std::log(p);
                    de_loss += scale * value;
                    if (want_grads) {
                        const Vec dz = entropy_sum_grad(probs, value, params.de_tau);
                        for (std::size_t k = 0; k < subset_size; ++k) {
                            const double coeff = scale * dz[k];
                            Vec& acc_m = g_de[m][ci];
                            Vec& acc_m2 = g_de[m2][k];
                            const Vec& row_m = mat.rows[m][ci];
                            const Vec& row_m2 = mat.rows[m2][k];
                            for (int i = 0; i < bank.dim; ++i) {
                                acc_m[static_cast<std::size_t>(i)] +=
                                    coeff * row_m2[static_cast<std::size_t>(i)];
                                acc_m2[static_cast<std::size_t>(i)] +=
                                    coeff * row_m[static_cast<std::size_t>(i)];
                            }
                        }
                    }
                }
            }
        }
    }
    if (params.decouple) {
        std::vector<const Vec*> anchor_rows(subset_size);
        for (std::size_t ci = 0; ci < subset_size; ++ci) {
            anchor_rows[ci] = &bank.anchors[static_cast<std::size_t>(class_subset[ci])];
        }
        const double scale = 1.0 / static_cast<double>(subset_size);
        for (std::size_t m = 0; m < num_templates; ++m) {
            for (std::size_t ci = 0; ci < subset_size; ++ci) {
                Vec scores(subset_size);
                for (std::size_t j = 0; j < subset_size; ++j) {
                    scores[j] = dot(mat.rows[m][ci], *anchor_rows[j]);
                }
                const Vec probs = softmax(scores, params.de_tau);
                con_loss -= scale * std::log(probs[ci]);
                if (want_grads) {
                    for (std::size_t j = 0; j < subset_size; ++j) {
                        const double coeff = scale *
                                             (probs[j] - (j == ci ? 1.0 : 0.0)) / params.de_tau;
                        Vec& acc = g_con[m][ci];
                        const Vec& anchor = *anchor_rows[j];
                        for (int i = 0; i < bank.dim; ++i) {
                            acc[static_cast<std::size_t>(i)] +=
                                coeff * anchor[static_cast<std::size_t>(i)];
                        }
                    }
                }
            }
        }
    }

    const double beta = decouple_active ? params.beta : 0.0;
    const double gamma = params.decouple ? params.gamma : 0.0;
    LossBreakdown loss = total_loss(ce_loss, de_loss, con_loss, beta, gamma);
    if (!std::isfinite(loss.total)) {
        fail(errc::non_finite_loss, "loss_and_gradients: total " + std::to_string(loss.total));
    }

    if (want_grads) {
        // Backprop through row normalization, then through the shared
        // projection into each theta: g_theta = P^T sum_c (g - (w.g) w) / n.
        auto to_theta = [&](const std::vector<std::vector<Vec>>& g_rows) {
            std::vector<Vec> out(num_templates, Vec(static_cast<std::size_t>(bank.param_dim), 0.0));
            for (std::size_t m = 0; m < num_templates; ++m) {
                Vec g_offset(static_cast<std::size_t>(bank.dim), 0.0);
                for (std::size_t ci = 0; ci < subset_size; ++ci) {
                    const Vec& w = mat.rows[m][ci];
                    const Vec& g = g_rows[m][ci];
                    const double wg = dot(w, g);
                    const double inv_n = 1.0 / mat.norm[m][ci];
                    for (int i = 0; i < bank.dim; ++i) {
                        g_offset[static_cast<std::size_t>(i)] +=
                            (g[static_cast<std::size_t>(i)] -
                             wg * w[static_cast<std::size_t>(i)]) *
                            inv_n;
                    }
                }
                for (int i = 0; i < bank.dim; ++i) {
                    const Vec& prow = bank.projection[static_cast<std::size_t>(i)];
                    const double gi = g_offset[static_cast<std::size_t>(i)];
                    for (int j = 0; j < bank.param_dim; ++j) {
                        out[m][static_cast<std::size_t>(j)] +=
                            prow[static_cast<std::size_t>(j)] * gi;
                    }
                }
            }
            return out;
        };
        grads->trusted_ce = to_theta(g_ce);
        grads->decoupling = to_theta(g_de);
        grads->consistency = to_theta(g_con);
        grads->total.assign(num_templates, Vec(static_cast<std::size_t>(bank.param_dim), 0.0));
        for (std::size_t m = 0; m < num_templates; ++m) {
            for (int j = 0; j < bank.param_dim; ++j) {
                grads->total[m][static_cast<std::size_t>(j)] =
                    grads->trusted_ce[m][static_cast<std::size_t>(j)] +
                    beta * grads->decoupling[m][static_cast<std::size_t>(j)] +
                    gamma * grads->consistency[m][static_cast<std::size_t>(j)];
            }
        }
    }
    return loss;
}

}  // namespace cdc
