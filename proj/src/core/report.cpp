#include "report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace cdc {

namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

double round2(double v) {
    return std::round(v * 100.0) / 100.0;
}

}  // namespace

std::string render_run_report(const ReportInputs& in) {
    if (in.config == nullptr) {
        fail(errc::invalid_argument, "render_run_report: config is required");
    }
    const TrainConfig& cfg = *in.config;
    cfg.validate();
    std::string out;
    out += "# cdc run report\n";
    out += "format = cdc-report v1\n\n";

    out += "[config]\n";
    for (const auto& [key, value] : in.extra) {
        out += key + " = " + value + "\n";
    }
    out += "templates = " + std::to_string(cfg.num_templates) + "\n";
    out += "epochs = " + std::to_string(cfg.epochs) + "\n";
    out += "batch_size = " + std::to_string(cfg.batch_size) + "\n";
    out += "param_dim = " + std::to_string(cfg.param_dim) + "\n";
    out += "learning_rate = " + fmt("%.17g", cfg.learning_rate) + "\n";
    out += "tau = " + fmt("%.17g", cfg.tau) + "\n";
    out += "de_tau = " + fmt("%.17g", cfg.de_tau) + "\n";
    out += "beta = " + fmt("%.17g", cfg.beta) + "\n";
    out += "gamma = " + fmt("%.17g", cfg.gamma) + "\n";
    out += "evidence_clamp = " + fmt("%.17g", cfg.evidence_clamp) + "\n";
    out += "seed = " + std::to_string(cfg.seed) + "\n";
    out += "channels = ";
    for (int m = 0; m < cfg.num_templates; ++m) {
        out += (m == 0 ? "" : ",") + cfg.channel_for(m).to_string();
    }
    out += "\n";
    out += std::string("dstc = ") + (cfg.dstc ? "true" : "false") + "\n";
    out += std::string("vsd_image = ") + (cfg.vsd_image ? "true" : "false") + "\n";
    out += std::string("vsd_text = ") + (cfg.vsd_text ? "true" : "false") + "\n";
    out += "rng = ";
    out += Rng::kAlgorithm;
    out += "\n";

    if (in.history != nullptr) {
        out += "\n[history]\n";
        if (in.history->epochs.empty()) {
            out += "note = no training epochs\n";
        } else {
            out += "# epoch trusted_ce decoupling consistency total\n";
            for (std::size_t e = 0; e < in.history->epochs.size(); ++e) {
                const LossBreakdown& l = in.history->epochs[e];
                out += std::to_string(e + 1) + " " + fmt("%.9g", l.trusted_ce) + " " +
                       fmt("%.9g", l.decoupling) + " " + fmt("%.9g", l.consistency) + " " +
                       fmt("%.9g", l.total) + "\n";
            }
        }
    }

    if (in.eval != nullptr) {
        const EvalReport& ev = *in.eval;
        // The printed harmonic mean is recomputed from the printed (rounded)
        // accuracies so the three lines stay mutually consistent.
        const double printed_hm = harmonic_mean(round2(ev.base_accuracy), round2(ev.new_accuracy));
        out += "\n[eval]\n";
        out += "base_accuracy = " + fmt("%.2f", ev.base_accuracy) + "\n";
        out += "new_accuracy = " + fmt("%.2f", ev.new_accuracy) + "\n";
        out += "harmonic_mean = " + fmt("%.2f", printed_hm) + "\n";
        out += "mean_uncertainty = " + fmt("%.9g", ev.mean_uncertainty) + "\n";
        out += "vacuous = " + std::to_string(ev.vacuous_count) + "\n";
        out += "conflicts = " + std::to_string(ev.conflict_count) + "\n";

        out += "\n[templates]\n";
        out += "# template base_accuracy new_accuracy\n";
        for (std::size_t m = 0; m < ev.per_template_new_accuracy.size(); ++m) {
            out += std::to_string(m + 1) + " " + fmt("%.2f", ev.per_template_base_accuracy[m]) +
                   " " + fmt("%.2f", ev.per_template_new_accuracy[m]) + "\n";
        }
    }

    if (in.bank != nullptr) {
        const TemplateBank& bank = *in.bank;
        const std::vector<std::vector<Vec>> rows = materialize(bank);
        out += "\n[similarity]\n";
        out += "# mean same-class cosine between template banks\n";
        double off_sum = 0.0;
        int off_count = 0;
        for (int m = 0; m < bank.num_templates; ++m) {
            std::string line;
            for (int m2 = 0; m2 < bank.num_templates; ++m2) {
                double mean = 0.0;
                for (int c = 0; c < bank.num_classes; ++c) {
                    mean += dot(rows[static_cast<std::size_t>(m)][static_cast<std::size_t>(c)],
                                rows[static_cast<std::size_t>(m2)][static_cast<std::size_t>(c)]);
                }
                mean /= static_cast<double>(bank.num_classes);
                if (m != m2) {
                    off_sum += mean;
                    ++off_count;
                }
                line += (m2 == 0 ? "" : " ") + fmt("%.6f", mean);
            }
            out += line + "\n";
        }
        if (off_count > 0) {
            out += "mean_off_template = " + fmt("%.6f", off_sum / off_count) + "\n";
        }
    }
    return out;
}

void write_run_report(const ReportInputs& in, const std::string& path) {
    const std::string text = render_run_report(in);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        fail(errc::io_failure, "write_run_report: cannot open '" + path + "'");
    }
    out << text;
    out.flush();
    if (!out) {
        fail(errc::io_failure, "write_run_report: write to '" + path + "' failed");
    }
}

}  // namespace cdc
