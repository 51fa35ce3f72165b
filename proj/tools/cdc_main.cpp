// Command-line front end: gen | train | eval | sweep over the shared
// library API. Exit codes: 0 ok, 2 usage, 3 I/O or parse, 4 numeric
// failure, 5 incompatible inputs.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cdc/cdc.h"

namespace {

int exit_code_for(cdc_status s) {
    switch (s) {
        case CDC_OK: return 0;
        case CDC_ERR_INVALID_ARGUMENT: return 2;
        case CDC_ERR_IO: return 3;
        case CDC_ERR_PARSE: return 3;
        case CDC_ERR_NUMERIC: return 4;
        case CDC_ERR_INCOMPATIBLE: return 5;
    }
    return 2;
}

[[noreturn]] void die(cdc_status s) {
    std::fprintf(stderr, "cdc: %s\n", cdc_last_error());
    std::exit(exit_code_for(s));
}

void check(cdc_status s) {
    if (s != CDC_OK) die(s);
}

[[noreturn]] void die_usage(const std::string& message) {
    std::fprintf(stderr, "cdc: %s\n", message.c_str());
    std::exit(2);
}

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
    if (end == text.c_str() || *end != '\0' || errno == ERANGE) {
        die_usage(what + ": bad unsigned integer '" + text + "'");
    }
    return static_cast<std::uint64_t>(v);
}

long parse_long(const std::string& text, const std::string& what) {
    char* end = nullptr;
    errno = 0;
    const long v = std::strtol(text.c_str(), &end, 10);
    if (end == text.c_str() || *end != '\0' || errno == ERANGE) {
        die_usage(what + ": bad integer '" + text + "'");
    }
    return v;
}

double parse_double(const std::string& text, const std::string& what) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0' || !std::isfinite(v)) {
        die_usage(what + ": bad number '" + text + "'");
    }
    return v;
}

bool parse_bool(const std::string& text, const std::string& what) {
    if (text == "true" || text == "1" || text == "on") return true;
    if (text == "false" || text == "0" || text == "off") return false;
    die_usage(what + ": bad boolean '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string token;
    for (char ch : text) {
        if (ch == sep) {
            out.push_back(token);
            token.clear();
        } else {
            token.push_back(ch);
        }
    }
    out.push_back(token);
    return out;
}

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

void set_channels(cdc_train_config& cfg, const std::string& list, const std::string& what) {
    const std::vector<std::string> specs = split_list(list, ',');
    if (static_cast<int>(specs.size()) != cfg.templates) {
        die_usage(what + ": " + std::to_string(specs.size()) + " channels for " +
                  std::to_string(cfg.templates) + " templates");
    }
    for (std::size_t m = 0; m < specs.size(); ++m) {
        const std::string spec = trim(specs[m]);
        if (spec.size() + 1 > sizeof(cfg.channels[m])) {
            die_usage(what + ": channel spec too long '" + spec + "'");
        }
        std::snprintf(cfg.channels[m], sizeof(cfg.channels[m]), "%s", spec.c_str());
    }
}

// Train-config flags shared by train, eval, and sweep. Precedence:
// command-line flag, then config file, then CDC_SEED for the seed, then
// built-in defaults.
struct TrainFlags {
    CLI::Option* templates = nullptr;
    CLI::Option* epochs = nullptr;
    CLI::Option* batch = nullptr;
    CLI::Option* param_dim = nullptr;
    CLI::Option* lr = nullptr;
    CLI::Option* tau = nullptr;
    CLI::Option* de_tau = nullptr;
    CLI::Option* beta = nullptr;
    CLI::Option* gamma = nullptr;
    CLI::Option* clamp = nullptr;
    CLI::Option* seed = nullptr;
    CLI::Option* channels = nullptr;
    CLI::Option* no_dstc = nullptr;
    CLI::Option* no_vsd_image = nullptr;
    CLI::Option* no_vsd_text = nullptr;
    CLI::Option* config_file = nullptr;

    int v_templates = 0;
    int v_epochs = 0;
    int v_batch = 0;
    int v_param_dim = 0;
    double v_lr = 0.0;
    double v_tau = 0.0;
    double v_de_tau = 0.0;
    double v_beta = 0.0;
    double v_gamma = 0.0;
    double v_clamp = 0.0;
    std::uint64_t v_seed = 0;
    std::string v_channels;
    std::string v_config_file;

    void attach(CLI::App* app) {
        templates = app->add_option("-m,--templates", v_templates, "number of templates");
        epochs = app->add_option("--epochs", v_epochs, "training epochs");
        batch = app->add_option("--batch", v_batch, "minibatch size");
        param_dim = app->add_option("--param-dim", v_param_dim, "template parameter dimension");
        lr = app->add_option("--lr", v_lr, "learning rate");
        tau = app->add_option("--tau", v_tau, "evidence temperature");
        de_tau = app->add_option("--de-tau", v_de_tau, "decoupling softmax temperature");
        beta = app->add_option("--beta", v_beta, "decoupling weight");
        gamma = app->add_option("--gamma", v_gamma, "consistency weight");
        clamp = app->add_option("--clamp", v_clamp, "evidence clamp");
        seed = app->add_option("--seed", v_seed, "rng seed");
        channels = app->add_option("--channels", v_channels,
                                   "comma-separated per-template channel specs");
        no_dstc = app->add_flag("--no-dstc", "softmax training and mean-probability prediction");
        no_vsd_image = app->add_flag("--no-vsd-image", "disable augmentation channels");
        no_vsd_text = app->add_flag("--no-vsd-text", "disable decoupling and consistency terms");
        config_file = app->add_option("--config", v_config_file, "key = value config file");
    }

    cdc_train_config resolve() const {
        cdc_train_config cfg;
        cdc_train_config_init(&cfg);

        std::map<std::string, std::string> file;
        std::vector<std::string> file_order;
        if (config_file->count() > 0) {
            std::ifstream in(v_config_file);
            if (!in) {
                std::fprintf(stderr, "cdc: cannot open config '%s'\n", v_config_file.c_str());
                std::exit(3);
            }
            std::string line;
            int lineno = 0;
            while (std::getline(in, line)) {
                ++lineno;
                const std::size_t hash = line.find('#');
                if (hash != std::string::npos) line.resize(hash);
                line = trim(line);
                if (line.empty()) continue;
                const std::size_t eq = line.find('=');
                if (eq == std::string::npos) {
                    die_usage(v_config_file + ":" + std::to_string(lineno) +
                              ": expected 'key = value'");
                }
                const std::string key = trim(line.substr(0, eq));
                const std::string value = trim(line.substr(eq + 1));
                if (key.empty()) {
                    die_usage(v_config_file + ":" + std::to_string(lineno) + ": empty key");
                }
                if (file.count(key) > 0) {
                    die_usage(v_config_file + ":" + std::to_string(lineno) + ": duplicate key '" +
                              key + "'");
                }
                file[key] = value;
                file_order.push_back(key);
            }
            for (const std::string& key : file_order) {
                if (key != "templates" && key != "epochs" && key != "batch_size" &&
                    key != "param_dim" && key != "learning_rate" && key != "tau" &&
                    key != "de_tau" && key != "beta" && key != "gamma" &&
                    key != "evidence_clamp" && key != "seed" && key != "channels" &&
                    key != "dstc" && key != "vsd_image" && key != "vsd_text") {
                    die_usage(v_config_file + ": unknown config key '" + key + "'");
                }
            }
        }
        auto file_value = [&](const char* key) -> const std::string* {
            auto it = file.find(key);
            return it == file.end() ? nullptr : &it->second;
        };

        // Template count first: channel lists are checked against it.
        if (templates->count() > 0) {
            cfg.templates = v_templates;
        } else if (const std::string* v = file_value("templates")) {
            cfg.templates = static_cast<int32_t>(parse_long(*v, "templates"));
        }
        if (epochs->count() > 0) {
            cfg.epochs = v_epochs;
        } else if (const std::string* v = file_value("epochs")) {
            cfg.epochs = static_cast<int32_t>(parse_long(*v, "epochs"));
        }
        if (batch->count() > 0) {
            cfg.batch_size = v_batch;
        } else if (const std::string* v = file_value("batch_size")) {
            cfg.batch_size = static_cast<int32_t>(parse_long(*v, "batch_size"));
        }
        if (param_dim->count() > 0) {
            cfg.param_dim = v_param_dim;
        } else if (const std::string* v = file_value("param_dim")) {
            cfg.param_dim = static_cast<int32_t>(parse_long(*v, "param_dim"));
        }
        if (lr->count() > 0) {
            cfg.learning_rate = v_lr;
        } else if (const std::string* v = file_value("learning_rate")) {
            cfg.learning_rate = parse_double(*v, "learning_rate");
        }
        if (tau->count() > 0) {
            cfg.tau = v_tau;
        } else if (const std::string* v = file_value("tau")) {
            cfg.tau = parse_double(*v, "tau");
        }
        if (de_tau->count() > 0) {
            cfg.de_tau = v_de_tau;
        } else if (const std::string* v = file_value("de_tau")) {
            cfg.de_tau = parse_double(*v, "de_tau");
        }
        if (beta->count() > 0) {
            cfg.beta = v_beta;
        } else if (const std::string* v = file_value("beta")) {
            cfg.beta = parse_double(*v, "beta");
        }
        if (gamma->count() > 0) {
            cfg.gamma = v_gamma;
        } else if (const std::string* v = file_value("gamma")) {
            cfg.gamma = parse_double(*v, "gamma");
        }
        if (clamp->count() > 0) {
            cfg.evidence_clamp = v_clamp;
        } else if (const std::string* v = file_value("evidence_clamp")) {
            cfg.evidence_clamp = parse_double(*v, "evidence_clamp");
        }
        if (seed->count() > 0) {
            cfg.seed = v_seed;
        } else if (const std::string* v = file_value("seed")) {
            cfg.seed = parse_u64(*v, "seed");
        } else if (const char* env = std::getenv("CDC_SEED")) {
            cfg.seed = parse_u64(env, "CDC_SEED");
        }
        if (channels->count() > 0) {
            set_channels(cfg, v_channels, "--channels");
        } else if (const std::string* v = file_value("channels")) {
            set_channels(cfg, *v, "channels");
        }
        if (no_dstc->count() > 0) {
            cfg.dstc = 0;
        } else if (const std::string* v = file_value("dstc")) {
            cfg.dstc = parse_bool(*v, "dstc") ? 1 : 0;
        }
        if (no_vsd_image->count() > 0) {
            cfg.vsd_image = 0;
        } else if (const std::string* v = file_value("vsd_image")) {
            cfg.vsd_image = parse_bool(*v, "vsd_image") ? 1 : 0;
        }
        if (no_vsd_text->count() > 0) {
            cfg.vsd_text = 0;
        } else if (const std::string* v = file_value("vsd_text")) {
            cfg.vsd_text = parse_bool(*v, "vsd_text") ? 1 : 0;
        }
        return cfg;
    }
};

using dataset_ptr = std::unique_ptr<cdc_dataset, decltype(&cdc_dataset_free)>;
using bank_ptr = std::unique_ptr<cdc_bank, decltype(&cdc_bank_free)>;
using history_ptr = std::unique_ptr<cdc_history, decltype(&cdc_history_free)>;
using eval_ptr = std::unique_ptr<cdc_eval, decltype(&cdc_eval_free)>;

dataset_ptr read_dataset_or_die(const std::string& path) {
    cdc_dataset* raw = nullptr;
    check(cdc_dataset_read(path.c_str(), &raw));
    return dataset_ptr(raw, &cdc_dataset_free);
}

double round2(double v) {
    return std::round(v * 100.0) / 100.0;
}

double printed_hm(double base, double neww) {
    double hm = 0.0;
    check(cdc_harmonic_mean(round2(base), round2(neww), &hm));
    return hm;
}

struct RunMetrics {
    double base = 0.0;
    double neww = 0.0;
    double hm = 0.0;
    double uncertainty = 0.0;
    double wall_seconds = 0.0;
};

RunMetrics run_train_eval(const cdc_dataset* ds, const cdc_train_config& cfg) {
    const auto start = std::chrono::steady_clock::now();
    cdc_bank* bank_raw = nullptr;
    check(cdc_train(ds, &cfg, &bank_raw, nullptr));
    bank_ptr bank(bank_raw, &cdc_bank_free);
    cdc_eval* eval_raw = nullptr;
    check(cdc_evaluate(ds, bank.get(), &cfg, &eval_raw));
    eval_ptr eval(eval_raw, &cdc_eval_free);
    const auto stop = std::chrono::steady_clock::now();

    RunMetrics metrics;
    metrics.base = cdc_eval_base_accuracy(eval.get());
    metrics.neww = cdc_eval_new_accuracy(eval.get());
    metrics.hm = cdc_eval_harmonic_mean(eval.get());
    metrics.uncertainty = cdc_eval_mean_uncertainty(eval.get());
    metrics.wall_seconds = std::chrono::duration<double>(stop - start).count();
    return metrics;
}

int cmd_gen(const cdc_scm_config& cfg, const std::string& out_path) {
    cdc_dataset* raw = nullptr;
    check(cdc_dataset_generate(&cfg, &raw));
    dataset_ptr ds(raw, &cdc_dataset_free);
    check(cdc_dataset_write(ds.get(), out_path.c_str()));
    std::printf("wrote %s: d=%d C=%d base-train=%lld base-test=%lld new-test=%lld\n",
                out_path.c_str(), cdc_dataset_dim(ds.get()), cdc_dataset_num_classes(ds.get()),
                static_cast<long long>(cdc_dataset_count(ds.get(), "base-train")),
                static_cast<long long>(cdc_dataset_count(ds.get(), "base-test")),
                static_cast<long long>(cdc_dataset_count(ds.get(), "new-test")));
    return 0;
}

int cmd_train(const std::string& dataset_path, const cdc_train_config& cfg,
              const std::string& checkpoint_path, const std::string& report_path) {
    dataset_ptr ds = read_dataset_or_die(dataset_path);
    if (cfg.templates == 1 && cfg.beta > 0.0 && cfg.vsd_text != 0) {
        std::fprintf(stderr, "cdc: warning: single template, the decoupling term has no pairs\n");
    }
    cdc_bank* bank_raw = nullptr;
    cdc_history* history_raw = nullptr;
    check(cdc_train(ds.get(), &cfg, &bank_raw, &history_raw));
    bank_ptr bank(bank_raw, &cdc_bank_free);
    history_ptr history(history_raw, &cdc_history_free);

    check(cdc_bank_save(bank.get(), checkpoint_path.c_str()));
    const char* keys[] = {"dataset", "checkpoint"};
    const char* values[] = {dataset_path.c_str(), checkpoint_path.c_str()};
    check(cdc_report_write(report_path.c_str(), &cfg, bank.get(), history.get(), nullptr, keys,
                           values, 2));

    const int32_t epochs = cdc_history_epochs(history.get());
    if (epochs > 0) {
        cdc_loss_breakdown last;
        check(cdc_history_epoch(history.get(), epochs - 1, &last));
        std::printf("trained %d epochs, final loss %.6g\n", epochs, last.total);
    } else {
        std::printf("trained 0 epochs, checkpoint is the seeded initialization\n");
    }
    std::printf("wrote %s\nwrote %s\n", checkpoint_path.c_str(), report_path.c_str());
    return 0;
}

int cmd_eval(const std::string& dataset_path, const std::string& checkpoint_path,
             const cdc_train_config& cfg, const std::string& report_path, bool per_template_only) {
    dataset_ptr ds = read_dataset_or_die(dataset_path);
    cdc_bank* bank_raw = nullptr;
    check(cdc_bank_load(checkpoint_path.c_str(), &bank_raw));
    bank_ptr bank(bank_raw, &cdc_bank_free);

    cdc_eval* eval_raw = nullptr;
    check(cdc_evaluate(ds.get(), bank.get(), &cfg, &eval_raw));
    eval_ptr eval(eval_raw, &cdc_eval_free);

    const double base = cdc_eval_base_accuracy(eval.get());
    const double neww = cdc_eval_new_accuracy(eval.get());
    if (!per_template_only) {
        std::printf("base accuracy: %.2f\n", base);
        std::printf("new accuracy: %.2f\n", neww);
        std::printf("harmonic mean: %.2f\n", printed_hm(base, neww));
        std::printf("mean uncertainty: %.9g\n", cdc_eval_mean_uncertainty(eval.get()));
        std::printf("vacuous: %d\nconflicts: %d\n", cdc_eval_vacuous_count(eval.get()),
                    cdc_eval_conflict_count(eval.get()));
    }
    std::printf("# template base_accuracy new_accuracy\n");
    for (int32_t m = 0; m < cdc_bank_templates(bank.get()); ++m) {
        double t_base = 0.0;
        double t_new = 0.0;
        check(cdc_eval_template_accuracy(eval.get(), m, &t_base, &t_new));
        std::printf("%d %.2f %.2f\n", m + 1, t_base, t_new);
    }

    if (!report_path.empty()) {
        const char* keys[] = {"dataset", "checkpoint"};
        const char* values[] = {dataset_path.c_str(), checkpoint_path.c_str()};
        check(cdc_report_write(report_path.c_str(), &cfg, bank.get(), nullptr, eval.get(), keys,
                               values, 2));
        std::printf("wrote %s\n", report_path.c_str());
    }
    return 0;
}

int cmd_sweep(const std::string& dataset_path, const cdc_train_config& base_cfg,
              const std::string& axis, const std::string& values_csv, const std::string& seeds_csv,
              const std::string& report_path) {
    if (axis != "m" && axis != "beta" && axis != "gamma" && axis != "channels" &&
        axis != "ablation") {
        die_usage("sweep: unknown axis '" + axis + "' (want m, beta, gamma, channels, ablation)");
    }
    std::vector<std::string> values = split_list(values_csv, ',');
    if (values.size() == 1 && trim(values[0]).empty()) {
        die_usage("sweep: empty value list");
    }
    std::vector<std::uint64_t> seeds;
    for (const std::string& s : split_list(seeds_csv, ',')) {
        const std::string t = trim(s);
        if (t.empty()) die_usage("sweep: empty seed entry");
        seeds.push_back(parse_u64(t, "--seeds"));
    }

    dataset_ptr ds = read_dataset_or_die(dataset_path);
    std::string table;
    char line[256];
    std::snprintf(line, sizeof(line), "# axis=%s dataset=%s\n", axis.c_str(),
                  dataset_path.c_str());
    table += line;
    table += "# value base new hm mean_uncertainty wall_s\n";

    for (const std::string& raw_value : values) {
        const std::string value = trim(raw_value);
        if (value.empty()) die_usage("sweep: empty value entry");
        cdc_train_config cfg = base_cfg;
        if (axis == "m") {
            cfg.templates = static_cast<int32_t>(parse_long(value, "sweep value"));
            std::memset(cfg.channels, 0, sizeof(cfg.channels));
        } else if (axis == "beta") {
            cfg.beta = parse_double(value, "sweep value");
        } else if (axis == "gamma") {
            cfg.gamma = parse_double(value, "sweep value");
        } else if (axis == "channels") {
            // '|' separates channel specs inside one swept value.
            std::string list = value;
            for (char& ch : list) {
                if (ch == '|') ch = ',';
            }
            set_channels(cfg, list, "sweep value");
        } else {
            if (value == "none") {
                cfg.dstc = 0;
                cfg.vsd_image = 0;
                cfg.vsd_text = 0;
            } else if (value == "dstc") {
                cfg.dstc = 1;
                cfg.vsd_image = 0;
                cfg.vsd_text = 0;
            } else if (value == "dstc+image") {
                cfg.dstc = 1;
                cfg.vsd_image = 1;
                cfg.vsd_text = 0;
            } else if (value == "dstc+text") {
                cfg.dstc = 1;
                cfg.vsd_image = 0;
                cfg.vsd_text = 1;
            } else if (value == "full") {
                cfg.dstc = 1;
                cfg.vsd_image = 1;
                cfg.vsd_text = 1;
            } else {
                die_usage("sweep: unknown ablation '" + value +
                          "' (want none, dstc, dstc+image, dstc+text, full)");
            }
        }

        RunMetrics mean;
        for (std::uint64_t s : seeds) {
            cfg.seed = s;
            const RunMetrics one = run_train_eval(ds.get(), cfg);
            mean.base += one.base;
            mean.neww += one.neww;
            mean.hm += one.hm;
            mean.uncertainty += one.uncertainty;
            mean.wall_seconds += one.wall_seconds;
        }
        const double n = static_cast<double>(seeds.size());
        std::snprintf(line, sizeof(line), "%s %.2f %.2f %.2f %.9g %.3f\n", value.c_str(),
                      mean.base / n, mean.neww / n, mean.hm / n, mean.uncertainty / n,
                      mean.wall_seconds / n);
        table += line;
    }

    std::fputs(table.c_str(), stdout);
    if (!report_path.empty()) {
        std::ofstream out(report_path, std::ios::binary);
        if (!out) {
            std::fprintf(stderr, "cdc: cannot open report '%s'\n", report_path.c_str());
            return 3;
        }
        out << table;
        out.flush();
        if (!out) {
            std::fprintf(stderr, "cdc: write to '%s' failed\n", report_path.c_str());
            return 3;
        }
        std::printf("wrote %s\n", report_path.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"semantic template decoupling over embedding datasets"};
    app.require_subcommand(1);

    // gen
    CLI::App* gen = app.add_subcommand("gen", "generate a synthetic CDCDS dataset");
    cdc_scm_config gen_cfg;
    cdc_scm_config_init(&gen_cfg);
    std::string gen_out = "data.cdcds";
    std::uint64_t gen_seed = 0;
    gen->add_option("--dim", gen_cfg.dim, "embedding dimension");
    gen->add_option("--base-classes", gen_cfg.base_classes, "base class count");
    gen->add_option("--new-classes", gen_cfg.new_classes, "new class count");
    gen->add_option("--relevant", gen_cfg.relevant_factors, "relevant factor count");
    gen->add_option("--irrelevant", gen_cfg.irrelevant_factors, "irrelevant factor count");
    gen->add_option("--shots", gen_cfg.shots, "base-train samples per class");
    gen->add_option("--test-per-class", gen_cfg.test_per_class, "test samples per class");
    gen->add_option("--noise-sigma", gen_cfg.noise_sigma, "ambient noise scale");
    gen->add_option("--confound", gen_cfg.confound_strength, "confound strength in [0, 1]");
    gen->add_option("--irrelevant-energy", gen_cfg.irrelevant_energy,
                    "irrelevant loading energy");
    CLI::Option* gen_seed_opt = gen->add_option("--seed", gen_seed, "rng seed");
    gen->add_option("-o,--out", gen_out, "output path");

    // train
    CLI::App* train = app.add_subcommand("train", "train a template bank on the base split");
    std::string train_dataset;
    std::string train_ckpt = "cdc.ckpt";
    std::string train_report = "train_report.txt";
    TrainFlags train_flags;
    train->add_option("--dataset", train_dataset, "CDCDS input")->required();
    train->add_option("--out-checkpoint", train_ckpt, "checkpoint path");
    train->add_option("--out-report", train_report, "run report path");
    train_flags.attach(train);

    // eval
    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on base and new splits");
    std::string eval_dataset;
    std::string eval_ckpt;
    std::string eval_report;
    bool per_template_only = false;
    TrainFlags eval_flags;
    eval->add_option("--dataset", eval_dataset, "CDCDS input")->required();
    eval->add_option("--checkpoint", eval_ckpt, "checkpoint to load")->required();
    eval->add_option("--out-report", eval_report, "run report path");
    eval->add_flag("--per-template-only", per_template_only,
                   "print only the per-template table");
    eval_flags.attach(eval);

    // sweep
    CLI::App* sweep = app.add_subcommand("sweep", "repeat train+eval over an axis and seeds");
    std::string sweep_dataset;
    std::string sweep_axis;
    std::string sweep_values;
    std::string sweep_seeds = "1,2,3,4,5";
    std::string sweep_report;
    TrainFlags sweep_flags;
    sweep->add_option("--dataset", sweep_dataset, "CDCDS input")->required();
    sweep->add_option("--axis", sweep_axis, "m, beta, gamma, channels, or ablation")->required();
    sweep->add_option("--values", sweep_values, "comma-separated axis values")->required();
    sweep->add_option("--seeds", sweep_seeds, "comma-separated training seeds");
    sweep->add_option("--out-report", sweep_report, "sweep table path");
    sweep_flags.attach(sweep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (gen->parsed()) {
        if (gen_seed_opt->count() > 0) {
            gen_cfg.seed = gen_seed;
        } else if (const char* env = std::getenv("CDC_SEED")) {
            gen_cfg.seed = parse_u64(env, "CDC_SEED");
        }
        return cmd_gen(gen_cfg, gen_out);
    }
    if (train->parsed()) {
        return cmd_train(train_dataset, train_flags.resolve(), train_ckpt, train_report);
    }
    if (eval->parsed()) {
        return cmd_eval(eval_dataset, eval_ckpt, eval_flags.resolve(), eval_report,
                        per_template_only);
    }
    if (sweep->parsed()) {
        return cmd_sweep(sweep_dataset, sweep_flags.resolve(), sweep_axis, sweep_values,
                         sweep_seeds, sweep_report);
    }
    return 2;
}
