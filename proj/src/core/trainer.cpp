#include "trainer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cdc {

namespace {

constexpr std::uint64_t kStreamShuffle = 0x73687566;
constexpr std::uint64_t kStreamAugment = 0x61756774;

AugmentationChannel default_channel(int m) {
    AugmentationChannel ch;
    switch (m % 5) {
        case 0: break;
        case 1:
            ch.kind = ChannelKind::gaussian_jitter;
            ch.sigma = 0.05;
            break;
        case 2:
            ch.kind = ChannelKind::coordinate_mask;
            ch.rate = 0.10;
            break;
        case 3:
            ch.kind = ChannelKind::subspace_rotation;
            ch.angle = 0.25;
            ch.planes = 4;
            break;
        case 4:
            ch.kind = ChannelKind::scale_jitter;
            ch.range = 0.25;
            break;
    }
    return ch;
}

std::size_t argmax_index(const Vec& v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

void require_compatible(const TemplateBank& bank, const EmbeddingDataset& ds) {
    if (bank.dim != ds.dim) {
        fail(errc::incompatible, "checkpoint d=" + std::to_string(bank.dim) + ", dataset d=" +
                                     std::to_string(ds.dim));
    }
    if (bank.num_classes != ds.num_classes) {
        fail(errc::incompatible, "checkpoint C=" + std::to_string(bank.num_classes) +
                                     ", dataset C=" + std::to_string(ds.num_classes));
    }
}

LossParams params_from_config(const TrainConfig& cfg) {
    LossParams p;
    p.tau = cfg.tau;
    p.de_tau = cfg.de_tau;
    p.beta = cfg.beta;
    p.gamma = cfg.gamma;
    p.clamp = cfg.evidence_clamp;
    p.evidential = cfg.dstc;
    p.decouple = cfg.vsd_text;
    return p;
}

}  // namespace

AugmentationChannel TrainConfig::channel_for(int m) const {
    if (m < 0 || m >= num_templates) {
        fail(errc::invalid_argument, "channel_for: template " + std::to_string(m));
    }
    if (!vsd_image) return {};
    if (!channels.empty()) return channels[static_cast<std::size_t>(m)];
    return default_channel(m);
}

void TrainConfig::validate() const {
    if (num_templates < 1) {
        fail(errc::invalid_argument, "config: templates " + std::to_string(num_templates));
    }
    if (epochs < 0 || batch_size < 1 || param_dim < 1) {
        fail(errc::invalid_argument, "config: bad epochs/batch_size/param_dim");
    }
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        fail(errc::invalid_argument, "config: learning_rate " + std::to_string(learning_rate));
    }
    if (!(tau > 0.0) || !(de_tau > 0.0)) {
        fail(errc::non_positive_temperature, "config: tau and de_tau must be > 0");
    }
    if (!(beta >= 0.0) || !(gamma >= 0.0)) {
        fail(errc::invalid_argument, "config: beta and gamma must be >= 0");
    }
    if (!(evidence_clamp > 0.0)) {
        fail(errc::invalid_argument, "config: evidence_clamp " + std::to_string(evidence_clamp));
    }
    if (!channels.empty() && static_cast<int>(channels.size()) != num_templates) {
        fail(errc::invalid_argument, "config: " + std::to_string(channels.size()) +
                                         " channels for " + std::to_string(num_templates) +
                                         " templates");
    }
}

TrainResult train(const EmbeddingDataset& ds, const TrainConfig& cfg) {
    cfg.validate();
    const std::vector<int> frame = ds.base_classes();
    if (frame.empty()) {
        fail(errc::empty_dataset, "train: no base rows");
    }
    std::vector<int> label_to_frame(static_cast<std::size_t>(ds.num_classes), -1);
    for (std::size_t i = 0; i < frame.size(); ++i) {
        label_to_frame[static_cast<std::size_t>(frame[i])] = static_cast<int>(i);
    }
    std::vector<std::size_t> train_rows;
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        if (ds.samples[i].split == Split::base_train) train_rows.push_back(i);
    }
    if (train_rows.empty()) {
        fail(errc::empty_dataset, "train: no base-train rows");
    }

    TrainResult result;
    result.bank = init_bank(ds, cfg.num_templates, cfg.param_dim, cfg.seed);
    const LossParams params = params_from_config(cfg);

    std::vector<AugmentationChannel> channels;
    for (int m = 0; m < cfg.num_templates; ++m) channels.push_back(cfg.channel_for(m));

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<std::size_t> order = train_rows;
        Rng shuffle_rng(mix_seed(cfg.seed, kStreamShuffle, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(shuffle_rng.next_u64() % i);
            std::swap(order[i - 1], order[j]);
        }

        LossBreakdown epoch_sum;
        int iterations = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::vector<TrainSample> batch;
            for (std::size_t k = start; k < stop; ++k) {
                const Sample& s = ds.samples[order[k]];
                TrainSample ts;
                ts.label = label_to_frame[static_cast<std::size_t>(s.label)];
                for (int m = 0; m < cfg.num_templates; ++m) {
                    Rng aug_rng(mix_seed(cfg.seed, kStreamAugment,
                                         static_cast<std::uint64_t>(epoch),
                                         static_cast<std::uint64_t>(order[k]),
                                         static_cast<std::uint64_t>(m)));
                    ts.views.push_back(apply_augmentation(
                        s.features, channels[static_cast<std::size_t>(m)], aug_rng));
                }
                batch.push_back(std::move(ts));
            }
            GradientBundle grads;
            LossBreakdown loss;
            try {
                loss = loss_and_gradients(result.bank, frame, batch, params, &grads);
            } catch (const Error& e) {
                if (e.code() == errc::non_finite_loss) {
                    fail(errc::non_finite_loss, "train: epoch " + std::to_string(epoch + 1) +
                                                    ", iteration " + std::to_string(iterations + 1) +
                                                    ": " + e.what());
                }
                throw;
            }
            for (int m = 0; m < cfg.num_templates; ++m) {
                Vec& theta = result.bank.theta[static_cast<std::size_t>(m)];
                const Vec& g = grads.total[static_cast<std::size_t>(m)];
                for (int j = 0; j < cfg.param_dim; ++j) {
                    theta[static_cast<std::size_t>(j)] -=
                        cfg.learning_rate * g[static_cast<std::size_t>(j)];
                }
            }
            epoch_sum.trusted_ce += loss.trusted_ce;
            epoch_sum.decoupling += loss.decoupling;
            epoch_sum.consistency += loss.consistency;
            epoch_sum.total += loss.total;
            ++iterations;
        }
        LossBreakdown mean;
        mean.trusted_ce = epoch_sum.trusted_ce / iterations;
        mean.decoupling = epoch_sum.decoupling / iterations;
        mean.consistency = epoch_sum.consistency / iterations;
        mean.total = epoch_sum.total / iterations;
        result.history.epochs.push_back(mean);
    }
    return result;
}

DirichletOpinion template_opinion(const Vec& x, const TemplateBank& bank, int m,
                                  const TrainConfig& cfg, const std::vector<int>& class_subset) {
    if (static_cast<int>(x.size()) != bank.dim) {
        fail(errc::incompatible,
             "template_opinion: input d=" + std::to_string(x.size()) + ", checkpoint d=" +
                 std::to_string(bank.dim));
    }
    if (class_subset.empty()) {
        fail(errc::empty_partition, "template_opinion: empty class frame");
    }
    const std::vector<Vec> rows = materialize_template(bank, m);
    Vec sims(class_subset.size());
    for (std::size_t i = 0; i < class_subset.size(); ++i) {
        const int c = class_subset[i];
        if (c < 0 || c >= bank.num_classes) {
            fail(errc::unknown_class, "template_opinion: class " + std::to_string(c));
        }
        sims[i] = dot(rows[static_cast<std::size_t>(c)], x);
    }
    return opinion_from_evidence(
        evidence_from_similarity(sims, cfg.tau, cfg.evidence_clamp, m));
}

FusedPrediction predict(const Vec& x, const TemplateBank& bank, const TrainConfig& cfg) {
    if (static_cast<int>(x.size()) != bank.dim) {
        fail(errc::incompatible, "predict: input d=" + std::to_string(x.size()) +
                                     ", checkpoint d=" + std::to_string(bank.dim));
    }
    std::vector<int> frame(static_cast<std::size_t>(bank.num_classes));
    for (int c = 0; c < bank.num_classes; ++c) frame[static_cast<std::size_t>(c)] = c;
    std::vector<DirichletOpinion> opinions;
    for (int m = 0; m < bank.num_templates; ++m) {
        opinions.push_back(template_opinion(x, bank, m, cfg, frame));
    }
    return fuse_sequence(opinions);
}

EvalReport evaluate(const EmbeddingDataset& ds, const TemplateBank& bank, const TrainConfig& cfg) {
    cfg.validate();
    require_compatible(bank, ds);
    if (ds.count(Split::base_test) == 0) {
        fail(errc::empty_partition, "evaluate: no base-test rows");
    }
    if (ds.count(Split::new_test) == 0) {
        fail(errc::empty_partition, "evaluate: no new-test rows");
    }
    const std::vector<std::vector<Vec>> rows = materialize(bank);
    const int num_templates = bank.num_templates;

    struct Frame {
        std::vector<int> classes;
        std::vector<int> label_to_pos;
    };
    auto make_frame = [&](const std::vector<int>& classes) {
        Frame f;
        f.classes = classes;
        f.label_to_pos.assign(static_cast<std::size_t>(ds.num_classes), -1);
        for (std::size_t i = 0; i < classes.size(); ++i) {
            f.label_to_pos[static_cast<std::size_t>(classes[i])] = static_cast<int>(i);
        }
        return f;
    };
    const Frame base_frame = make_frame(ds.base_classes());
    const Frame new_frame = make_frame(ds.new_classes());

    long base_total = 0, base_correct = 0;
    long new_total = 0, new_correct = 0;
    std::vector<long> solo_base_correct(static_cast<std::size_t>(num_templates), 0);
    std::vector<long> solo_new_correct(static_cast<std::size_t>(num_templates), 0);
    double uncertainty_sum = 0.0;
    long uncertainty_count = 0;
    int vacuous_count = 0;
    int conflict_count = 0;

    for (const Sample& s : ds.samples) {
        if (s.split == Split::base_train) continue;
        const bool is_base = s.split == Split::base_test;
        const Frame& frame = is_base ? base_frame : new_frame;
        const int want = frame.label_to_pos[static_cast<std::size_t>(s.label)];
        (is_base ? base_total : new_total) += 1;

        std::vector<Vec> sims(static_cast<std::size_t>(num_templates),
                              Vec(frame.classes.size()));
        for (int m = 0; m < num_templates; ++m) {
            for (std::size_t i = 0; i < frame.classes.size(); ++i) {
                sims[static_cast<std::size_t>(m)][i] =
                    dot(rows[static_cast<std::size_t>(m)]
                            [static_cast<std::size_t>(frame.classes[i])],
                        s.features);
            }
        }

        if (cfg.dstc) {
            std::vector<DirichletOpinion> opinions;
            for (int m = 0; m < num_templates; ++m) {
                opinions.push_back(opinion_from_evidence(evidence_from_similarity(
                    sims[static_cast<std::size_t>(m)], cfg.tau, cfg.evidence_clamp, m)));
                const std::size_t solo = argmax_index(opinions.back().beliefs);
                if (static_cast<int>(solo) == want) {
                    (is_base ? solo_base_correct : solo_new_correct)[static_cast<std::size_t>(m)] +=
                        1;
                }
            }
            try {
                const FusedPrediction fused = fuse_sequence(opinions);
                uncertainty_sum += fused.uncertainty;
                ++uncertainty_count;
                if (fused.vacuous) ++vacuous_count;
                if (static_cast<int>(argmax_index(fused.probabilities)) == want) {
                    (is_base ? base_correct : new_correct) += 1;
                }
            } catch (const Error& e) {
                if (e.code() != errc::total_conflict) throw;
                ++conflict_count;  // scored as incorrect
            }
        } else {
            Vec mean_probs(frame.classes.size(), 0.0);
            for (int m = 0; m < num_templates; ++m) {
                const Vec probs = softmax(sims[static_cast<std::size_t>(m)], cfg.tau);
                for (std::size_t i = 0; i < probs.size(); ++i) mean_probs[i] += probs[i];
                const std::size_t solo = argmax_index(probs);
                if (static_cast<int>(solo) == want) {
                    (is_base ? solo_base_correct : solo_new_correct)[static_cast<std::size_t>(m)] +=
                        1;
                }
            }
            if (static_cast<int>(argmax_index(mean_probs)) == want) {
                (is_base ? base_correct : new_correct) += 1;
            }
        }
    }

    EvalReport report;
    report.base_accuracy = 100.0 * static_cast<double>(base_correct) / base_total;
    report.new_accuracy = 100.0 * static_cast<double>(new_correct) / new_total;
    report.harmonic_mean_accuracy = harmonic_mean(report.base_accuracy, report.new_accuracy);
    for (int m = 0; m < num_templates; ++m) {
        report.per_template_base_accuracy.push_back(
            100.0 * static_cast<double>(solo_base_correct[static_cast<std::size_t>(m)]) /
            base_total);
        report.per_template_new_accuracy.push_back(
            100.0 * static_cast<double>(solo_new_correct[static_cast<std::size_t>(m)]) /
            new_total);
    }
    report.mean_uncertainty =
        uncertainty_count > 0 ? uncertainty_sum / static_cast<double>(uncertainty_count) : 0.0;
    report.vacuous_count = vacuous_count;
    report.conflict_count = conflict_count;
    return report;
}

double harmonic_mean(double base, double neww) {
    if (!std::isfinite(base) || !std::isfinite(neww) || base < 0.0 || neww < 0.0 ||
        base > 100.0 || neww > 100.0) {
        fail(errc::invalid_argument, "harmonic_mean: inputs must be percentages in [0, 100]");
    }
    if (base == 0.0 || neww == 0.0) return 0.0;
    return 2.0 * base * neww / (base + neww);
}

}  // namespace cdc
