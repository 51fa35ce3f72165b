#include "cdc/cdc.h"

#include <cstring>
#include <new>
#include <string>

#include "core/dataset.hpp"
#include "core/report.hpp"
#include "core/trainer.hpp"

struct cdc_dataset {
    cdc::EmbeddingDataset value;
};
struct cdc_bank {
    cdc::TemplateBank value;
};
struct cdc_history {
    cdc::TrainingHistory value;
};
struct cdc_eval {
    cdc::EvalReport value;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& message) {
    g_last_error = message;
}

cdc_status status_for(const cdc::Error& e) {
    switch (e.code()) {
        case cdc::errc::io_failure:
            return CDC_ERR_IO;
        case cdc::errc::malformed_header:
        case cdc::errc::unknown_split_tag:
        case cdc::errc::truncated_file:
        case cdc::errc::bad_checkpoint:
            return CDC_ERR_PARSE;
        case cdc::errc::non_finite_loss:
        case cdc::errc::total_conflict:
            return CDC_ERR_NUMERIC;
        case cdc::errc::incompatible:
            return CDC_ERR_INCOMPATIBLE;
        default:
            return CDC_ERR_INVALID_ARGUMENT;
    }
}

// File-reading entry points: anything besides an I/O failure means the
// file's content could not be understood.
cdc_status read_status_for(const cdc::Error& e) {
    return e.code() == cdc::errc::io_failure ? CDC_ERR_IO : CDC_ERR_PARSE;
}

template <typename Fn>
cdc_status guarded(Fn&& fn, cdc_status (*classify)(const cdc::Error&) = &status_for) {
    try {
        return fn();
    } catch (const cdc::Error& e) {
        set_error(e.what());
        return classify(e);
    } catch (const std::bad_alloc&) {
        set_error("out of memory");
        return CDC_ERR_IO;
    } catch (const std::exception& e) {
        set_error(e.what());
        return CDC_ERR_INVALID_ARGUMENT;
    }
}

cdc_status arg_error(const std::string& message) {
    set_error(message);
    return CDC_ERR_INVALID_ARGUMENT;
}

bool to_core_config(const cdc_train_config& in, cdc::TrainConfig& out, std::string& error) {
    if (in.templates < 1 || in.templates > CDC_MAX_TEMPLATES) {
        error = "templates must be in [1, " + std::to_string(CDC_MAX_TEMPLATES) + "]";
        return false;
    }
    out.num_templates = in.templates;
    out.epochs = in.epochs;
    out.batch_size = in.batch_size;
    out.param_dim = in.param_dim;
    out.learning_rate = in.learning_rate;
    out.tau = in.tau;
    out.de_tau = in.de_tau;
    out.beta = in.beta;
    out.gamma = in.gamma;
    out.evidence_clamp = in.evidence_clamp;
    out.seed = in.seed;
    out.dstc = in.dstc != 0;
    out.vsd_image = in.vsd_image != 0;
    out.vsd_text = in.vsd_text != 0;
    out.channels.clear();
    bool any_explicit = false;
    for (int m = 0; m < in.templates; ++m) {
        if (in.channels[m][0] != '\0') {
            any_explicit = true;
            break;
        }
    }
    if (any_explicit) {
        for (int m = 0; m < in.templates; ++m) {
            const char* spec = in.channels[m];
            try {
                if (spec[0] == '\0') {
                    cdc::TrainConfig defaults;
                    defaults.num_templates = in.templates;
                    out.channels.push_back(defaults.channel_for(m));
                } else {
                    out.channels.push_back(cdc::AugmentationChannel::parse(spec));
                }
            } catch (const cdc::Error& e) {
                error = e.what();
                return false;
            }
        }
    }
    return true;
}

}  // namespace

extern "C" {

void cdc_scm_config_init(cdc_scm_config* cfg) {
    if (cfg == nullptr) return;
    const cdc::ScmConfig defaults;
    cfg->dim = defaults.dim;
    cfg->base_classes = defaults.base_classes;
    cfg->new_classes = defaults.new_classes;
    cfg->relevant_factors = defaults.relevant_factors;
    cfg->irrelevant_factors = defaults.irrelevant_factors;
    cfg->shots = defaults.shots;
    cfg->test_per_class = defaults.test_per_class;
    cfg->noise_sigma = defaults.noise_sigma;
    cfg->confound_strength = defaults.confound_strength;
    cfg->irrelevant_energy = defaults.irrelevant_energy;
    cfg->seed = defaults.seed;
}

void cdc_train_config_init(cdc_train_config* cfg) {
    if (cfg == nullptr) return;
    std::memset(cfg, 0, sizeof(*cfg));
    const cdc::TrainConfig defaults;
    cfg->templates = defaults.num_templates;
    cfg->epochs = defaults.epochs;
    cfg->batch_size = defaults.batch_size;
    cfg->param_dim = defaults.param_dim;
    cfg->learning_rate = defaults.learning_rate;
    cfg->tau = defaults.tau;
    cfg->de_tau = defaults.de_tau;
    cfg->beta = defaults.beta;
    cfg->gamma = defaults.gamma;
    cfg->evidence_clamp = defaults.evidence_clamp;
    cfg->seed = defaults.seed;
    cfg->dstc = 1;
    cfg->vsd_image = 1;
    cfg->vsd_text = 1;
}

const char* cdc_version(void) {
    return "0.1.0";
}

const char* cdc_last_error(void) {
    return g_last_error.c_str();
}

cdc_status cdc_harmonic_mean(double base_accuracy, double new_accuracy, double* out) {
    if (out == nullptr) return arg_error("cdc_harmonic_mean: out is NULL");
    return guarded([&] {
        *out = cdc::harmonic_mean(base_accuracy, new_accuracy);
        return CDC_OK;
    });
}

cdc_status cdc_dataset_generate(const cdc_scm_config* cfg, cdc_dataset** out) {
    if (cfg == nullptr || out == nullptr) {
        return arg_error("cdc_dataset_generate: NULL argument");
    }
    return guarded([&] {
        cdc::ScmConfig core;
        core.dim = cfg->dim;
        core.base_classes = cfg->base_classes;
        core.new_classes = cfg->new_classes;
        core.relevant_factors = cfg->relevant_factors;
        core.irrelevant_factors = cfg->irrelevant_factors;
        core.shots = cfg->shots;
        core.test_per_class = cfg->test_per_class;
        core.noise_sigma = cfg->noise_sigma;
        core.confound_strength = cfg->confound_strength;
        core.irrelevant_energy = cfg->irrelevant_energy;
        core.seed = cfg->seed;
        auto* handle = new cdc_dataset{cdc::generate_scm_dataset(core)};
        *out = handle;
        return CDC_OK;
    });
}

cdc_status cdc_dataset_read(const char* path, cdc_dataset** out) {
    if (path == nullptr || out == nullptr) {
        return arg_error("cdc_dataset_read: NULL argument");
    }
    return guarded([&] {
        auto* handle = new cdc_dataset{cdc::read_dataset(path)};
        *out = handle;
        return CDC_OK;
    }, &read_status_for);
}

cdc_status cdc_dataset_write(const cdc_dataset* ds, const char* path) {
    if (ds == nullptr || path == nullptr) {
        return arg_error("cdc_dataset_write: NULL argument");
    }
    return guarded([&] {
        cdc::write_dataset(ds->value, path);
        return CDC_OK;
    });
}

void cdc_dataset_free(cdc_dataset* ds) {
    delete ds;
}

int32_t cdc_dataset_dim(const cdc_dataset* ds) {
    return ds == nullptr ? 0 : ds->value.dim;
}

int32_t cdc_dataset_num_classes(const cdc_dataset* ds) {
    return ds == nullptr ? 0 : ds->value.num_classes;
}

int64_t cdc_dataset_num_samples(const cdc_dataset* ds) {
    return ds == nullptr ? 0 : static_cast<int64_t>(ds->value.samples.size());
}

int64_t cdc_dataset_count(const cdc_dataset* ds, const char* split_tag) {
    if (ds == nullptr || split_tag == nullptr) return -1;
    try {
        return static_cast<int64_t>(ds->value.count(cdc::split_from_name(split_tag)));
    } catch (const cdc::Error&) {
        return -1;
    }
}

const char* cdc_dataset_class_name(const cdc_dataset* ds, int32_t class_index) {
    if (ds == nullptr || class_index < 0 || class_index >= ds->value.num_classes) return nullptr;
    return ds->value.class_names[static_cast<std::size_t>(class_index)].c_str();
}

cdc_status cdc_train(const cdc_dataset* ds, const cdc_train_config* cfg, cdc_bank** bank_out,
                     cdc_history** history_out) {
    if (ds == nullptr || cfg == nullptr || bank_out == nullptr) {
        return arg_error("cdc_train: NULL argument");
    }
    return guarded([&] {
        cdc::TrainConfig core;
        std::string error;
        if (!to_core_config(*cfg, core, error)) {
            set_error("cdc_train: " + error);
            return CDC_ERR_INVALID_ARGUMENT;
        }
        cdc::TrainResult result = cdc::train(ds->value, core);
        *bank_out = new cdc_bank{std::move(result.bank)};
        if (history_out != nullptr) {
            *history_out = new cdc_history{std::move(result.history)};
        }
        return CDC_OK;
    });
}

void cdc_bank_free(cdc_bank* bank) {
    delete bank;
}

void cdc_history_free(cdc_history* history) {
    delete history;
}

cdc_status cdc_bank_save(const cdc_bank* bank, const char* path) {
    if (bank == nullptr || path == nullptr) {
        return arg_error("cdc_bank_save: NULL argument");
    }
    return guarded([&] {
        cdc::save_checkpoint(bank->value, path);
        return CDC_OK;
    });
}

cdc_status cdc_bank_load(const char* path, cdc_bank** out) {
    if (path == nullptr || out == nullptr) {
        return arg_error("cdc_bank_load: NULL argument");
    }
    return guarded([&] {
        auto* handle = new cdc_bank{cdc::load_checkpoint(path)};
        *out = handle;
        return CDC_OK;
    }, &read_status_for);
}

int32_t cdc_bank_templates(const cdc_bank* bank) {
    return bank == nullptr ? 0 : bank->value.num_templates;
}

int32_t cdc_bank_classes(const cdc_bank* bank) {
    return bank == nullptr ? 0 : bank->value.num_classes;
}

int32_t cdc_bank_dim(const cdc_bank* bank) {
    return bank == nullptr ? 0 : bank->value.dim;
}

int32_t cdc_bank_param_dim(const cdc_bank* bank) {
    return bank == nullptr ? 0 : bank->value.param_dim;
}

cdc_status cdc_bank_template_embedding(const cdc_bank* bank, int32_t template_index,
                                       int32_t class_index, double* out) {
    if (bank == nullptr || out == nullptr) {
        return arg_error("cdc_bank_template_embedding: NULL argument");
    }
    return guarded([&] {
        if (template_index < 0 || template_index >= bank->value.num_templates ||
            class_index < 0 || class_index >= bank->value.num_classes) {
            set_error("cdc_bank_template_embedding: index out of range");
            return CDC_ERR_INVALID_ARGUMENT;
        }
        const std::vector<cdc::Vec> rows = cdc::materialize_template(bank->value, template_index);
        const cdc::Vec& row = rows[static_cast<std::size_t>(class_index)];
        for (std::size_t i = 0; i < row.size(); ++i) out[i] = row[i];
        return CDC_OK;
    });
}

int32_t cdc_history_epochs(const cdc_history* history) {
    return history == nullptr ? 0 : static_cast<int32_t>(history->value.epochs.size());
}

cdc_status cdc_history_epoch(const cdc_history* history, int32_t epoch_index,
                             cdc_loss_breakdown* out) {
    if (history == nullptr || out == nullptr) {
        return arg_error("cdc_history_epoch: NULL argument");
    }
    if (epoch_index < 0 || epoch_index >= static_cast<int32_t>(history->value.epochs.size())) {
        return arg_error("cdc_history_epoch: epoch out of range");
    }
    const cdc::LossBreakdown& l = history->value.epochs[static_cast<std::size_t>(epoch_index)];
    out->trusted_ce = l.trusted_ce;
    out->decoupling = l.decoupling;
    out->consistency = l.consistency;
    out->total = l.total;
    return CDC_OK;
}

cdc_status cdc_predict(const cdc_bank* bank, const cdc_train_config* cfg, const double* features,
                       int32_t dim, cdc_prediction* prediction, double* probabilities) {
    if (bank == nullptr || cfg == nullptr || features == nullptr || prediction == nullptr) {
        return arg_error("cdc_predict: NULL argument");
    }
    if (dim < 0) {
        return arg_error("cdc_predict: negative dim");
    }
    return guarded([&] {
        cdc::TrainConfig core;
        std::string error;
        if (!to_core_config(*cfg, core, error)) {
            set_error("cdc_predict: " + error);
            return CDC_ERR_INVALID_ARGUMENT;
        }
        const cdc::Vec x(features, features + dim);
        const cdc::FusedPrediction fused = cdc::predict(x, bank->value, core);
        std::size_t best = 0;
        for (std::size_t c = 1; c < fused.probabilities.size(); ++c) {
            if (fused.probabilities[c] > fused.probabilities[best]) best = c;
        }
        prediction->predicted_class = static_cast<int32_t>(best);
        prediction->vacuous = fused.vacuous ? 1 : 0;
        prediction->uncertainty = fused.uncertainty;
        if (probabilities != nullptr) {
            for (std::size_t c = 0; c < fused.probabilities.size(); ++c) {
                probabilities[c] = fused.probabilities[c];
            }
        }
        return CDC_OK;
    });
}

cdc_status cdc_evaluate(const cdc_dataset* ds, const cdc_bank* bank, const cdc_train_config* cfg,
                        cdc_eval** out) {
    if (ds == nullptr || bank == nullptr || cfg == nullptr || out == nullptr) {
        return arg_error("cdc_evaluate: NULL argument");
    }
    return guarded([&] {
        cdc::TrainConfig core;
        std::string error;
        if (!to_core_config(*cfg, core, error)) {
            set_error("cdc_evaluate: " + error);
            return CDC_ERR_INVALID_ARGUMENT;
        }
        auto* handle = new cdc_eval{cdc::evaluate(ds->value, bank->value, core)};
        *out = handle;
        return CDC_OK;
    });
}

void cdc_eval_free(cdc_eval* eval) {
    delete eval;
}

double cdc_eval_base_accuracy(const cdc_eval* eval) {
    return eval == nullptr ? 0.0 : eval->value.base_accuracy;
}

double cdc_eval_new_accuracy(const cdc_eval* eval) {
    return eval == nullptr ? 0.0 : eval->value.new_accuracy;
}

double cdc_eval_harmonic_mean(const cdc_eval* eval) {
    return eval == nullptr ? 0.0 : eval->value.harmonic_mean_accuracy;
}

double cdc_eval_mean_uncertainty(const cdc_eval* eval) {
    return eval == nullptr ? 0.0 : eval->value.mean_uncertainty;
}

int32_t cdc_eval_vacuous_count(const cdc_eval* eval) {
    return eval == nullptr ? 0 : eval->value.vacuous_count;
}

int32_t cdc_eval_conflict_count(const cdc_eval* eval) {
    return eval == nullptr ? 0 : eval->value.conflict_count;
}

cdc_status cdc_eval_template_accuracy(const cdc_eval* eval, int32_t template_index,
                                      double* base_out, double* new_out) {
    if (eval == nullptr || base_out == nullptr || new_out == nullptr) {
        return arg_error("cdc_eval_template_accuracy: NULL argument");
    }
    const auto& per_base = eval->value.per_template_base_accuracy;
    if (template_index < 0 || template_index >= static_cast<int32_t>(per_base.size())) {
        return arg_error("cdc_eval_template_accuracy: template out of range");
    }
    *base_out = per_base[static_cast<std::size_t>(template_index)];
    *new_out = eval->value.per_template_new_accuracy[static_cast<std::size_t>(template_index)];
    return CDC_OK;
}

cdc_status cdc_report_write(const char* path, const cdc_train_config* cfg, const cdc_bank* bank,
                            const cdc_history* history, const cdc_eval* eval,
                            const char* const* extra_keys, const char* const* extra_values,
                            int32_t extra_count) {
    if (path == nullptr || cfg == nullptr) {
        return arg_error("cdc_report_write: NULL argument");
    }
    if (extra_count > 0 && (extra_keys == nullptr || extra_values == nullptr)) {
        return arg_error("cdc_report_write: extra_count without extra arrays");
    }
    return guarded([&] {
        cdc::TrainConfig core;
        std::string error;
        if (!to_core_config(*cfg, core, error)) {
            set_error("cdc_report_write: " + error);
            return CDC_ERR_INVALID_ARGUMENT;
        }
        cdc::ReportInputs inputs;
        inputs.config = &core;
        if (bank != nullptr) inputs.bank = &bank->value;
        if (history != nullptr) inputs.history = &history->value;
        if (eval != nullptr) inputs.eval = &eval->value;
        for (int32_t i = 0; i < extra_count; ++i) {
            if (extra_keys[i] == nullptr || extra_values[i] == nullptr) {
                set_error("cdc_report_write: NULL extra entry");
                return CDC_ERR_INVALID_ARGUMENT;
            }
            inputs.extra.emplace_back(extra_keys[i], extra_values[i]);
        }
        cdc::write_run_report(inputs, path);
        return CDC_OK;
    });
}

}  // extern "C"
