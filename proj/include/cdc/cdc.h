/* Causality-guided semantic decoupling and classification over embedding
 * vectors: seeded synthetic datasets, template-bank training, evidence
 * fusion, and evaluation reports behind a C ABI.
 *
 * Every function that can fail returns cdc_status; cdc_last_error() holds
 * a message for the most recent failure on the calling thread. Out
 * parameters are written only on CDC_OK. Handles are freed with their
 * cdc_*_free function; freeing NULL is a no-op.
 */
#ifndef CDC_H
#define CDC_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cdc_status {
    CDC_OK = 0,
    CDC_ERR_INVALID_ARGUMENT = 1,
    CDC_ERR_IO = 2,
    CDC_ERR_PARSE = 3,
    CDC_ERR_NUMERIC = 4,
    CDC_ERR_INCOMPATIBLE = 5
} cdc_status;

typedef struct cdc_dataset cdc_dataset;
typedef struct cdc_bank cdc_bank;
typedef struct cdc_history cdc_history;
typedef struct cdc_eval cdc_eval;

/* Synthetic structural-causal-model dataset parameters. */
typedef struct cdc_scm_config {
    int32_t dim;
    int32_t base_classes;
    int32_t new_classes;
    int32_t relevant_factors;
    int32_t irrelevant_factors;
    int32_t shots;          /* base-train samples per base class */
    int32_t test_per_class; /* base-test / new-test samples per class */
    double noise_sigma;
    double confound_strength; /* in [0, 1]; acts on base splits only */
    double irrelevant_energy;
    uint64_t seed;
} cdc_scm_config;

void cdc_scm_config_init(cdc_scm_config* cfg);

#define CDC_MAX_TEMPLATES 16

typedef struct cdc_train_config {
    int32_t templates; /* M, at most CDC_MAX_TEMPLATES */
    int32_t epochs;
    int32_t batch_size;
    int32_t param_dim; /* p */
    double learning_rate;
    double tau;
    double de_tau; /* decoupling/consistency softmax temperature */
    double beta;
    double gamma;
    double evidence_clamp;
    uint64_t seed;
    /* Ablation switches; nonzero means on. */
    int32_t dstc;
    int32_t vsd_image;
    int32_t vsd_text;
    /* Per-template augmentation channel specs ("identity",
     * "jitter:<sigma>", "mask:<rate>", "rotate:<angle>:<planes>",
     * "scale:<range>"); an empty string selects the built-in default for
     * that slot. */
    char channels[CDC_MAX_TEMPLATES][24];
} cdc_train_config;

void cdc_train_config_init(cdc_train_config* cfg);

typedef struct cdc_loss_breakdown {
    double trusted_ce;
    double decoupling;
    double consistency;
    double total;
} cdc_loss_breakdown;

typedef struct cdc_prediction {
    int32_t predicted_class;
    int32_t vacuous;
    double uncertainty;
} cdc_prediction;

const char* cdc_version(void);
/* Message for the calling thread's most recent failure; never NULL. */
const char* cdc_last_error(void);

cdc_status cdc_harmonic_mean(double base_accuracy, double new_accuracy, double* out);

cdc_status cdc_dataset_generate(const cdc_scm_config* cfg, cdc_dataset** out);
cdc_status cdc_dataset_read(const char* path, cdc_dataset** out);
cdc_status cdc_dataset_write(const cdc_dataset* ds, const char* path);
void cdc_dataset_free(cdc_dataset* ds);
int32_t cdc_dataset_dim(const cdc_dataset* ds);
int32_t cdc_dataset_num_classes(const cdc_dataset* ds);
int64_t cdc_dataset_num_samples(const cdc_dataset* ds);
/* Rows carrying the given tag ("base-train", "base-test", "new-test");
 * -1 for an unknown tag. */
int64_t cdc_dataset_count(const cdc_dataset* ds, const char* split_tag);
/* NULL when the index is out of range; owned by the dataset. */
const char* cdc_dataset_class_name(const cdc_dataset* ds, int32_t class_index);

/* history_out may be NULL when the loss curve is not needed. */
cdc_status cdc_train(const cdc_dataset* ds, const cdc_train_config* cfg, cdc_bank** bank_out,
                     cdc_history** history_out);
void cdc_bank_free(cdc_bank* bank);
void cdc_history_free(cdc_history* history);

cdc_status cdc_bank_save(const cdc_bank* bank, const char* path);
cdc_status cdc_bank_load(const char* path, cdc_bank** out);
int32_t cdc_bank_templates(const cdc_bank* bank);
int32_t cdc_bank_classes(const cdc_bank* bank);
int32_t cdc_bank_dim(const cdc_bank* bank);
int32_t cdc_bank_param_dim(const cdc_bank* bank);
/* Writes the materialized unit row for one template and class into out
 * (cdc_bank_dim doubles). */
cdc_status cdc_bank_template_embedding(const cdc_bank* bank, int32_t template_index,
                                       int32_t class_index, double* out);

int32_t cdc_history_epochs(const cdc_history* history);
cdc_status cdc_history_epoch(const cdc_history* history, int32_t epoch_index,
                             cdc_loss_breakdown* out);

/* Evidence fusion over the full class set. probabilities may be NULL;
 * otherwise it receives cdc_bank_classes doubles. */
cdc_status cdc_predict(const cdc_bank* bank, const cdc_train_config* cfg, const double* features,
                       int32_t dim, cdc_prediction* prediction, double* probabilities);

cdc_status cdc_evaluate(const cdc_dataset* ds, const cdc_bank* bank, const cdc_train_config* cfg,
                        cdc_eval** out);
void cdc_eval_free(cdc_eval* eval);
double cdc_eval_base_accuracy(const cdc_eval* eval);
double cdc_eval_new_accuracy(const cdc_eval* eval);
double cdc_eval_harmonic_mean(const cdc_eval* eval);
double cdc_eval_mean_uncertainty(const cdc_eval* eval);
int32_t cdc_eval_vacuous_count(const cdc_eval* eval);
int32_t cdc_eval_conflict_count(const cdc_eval* eval);
cdc_status cdc_eval_template_accuracy(const cdc_eval* eval, int32_t template_index,
                                      double* base_out, double* new_out);

/* Renders the deterministic run report. bank, history, and eval are each
 * optional; extra_keys/extra_values hold extra_count leading config lines. */
cdc_status cdc_report_write(const char* path, const cdc_train_config* cfg, const cdc_bank* bank,
                            const cdc_history* history, const cdc_eval* eval,
                            const char* const* extra_keys, const char* const* extra_values,
                            int32_t extra_count);

#ifdef __cplusplus
}
#endif

#endif /* CDC_H */
