#include "dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>

namespace cdc {

namespace {

constexpr std::uint64_t kStreamFactors = 0x66616374;
constexpr std::uint64_t kStreamLoading = 0x6c6f6164;
constexpr std::uint64_t kStreamClassMean = 0x6d65616e;
constexpr std::uint64_t kStreamSample = 0x73616d70;
constexpr std::uint64_t kStreamShots = 0x73686f74;

Vec gaussian_vec(Rng& rng, int n, double scale) {
    Vec v(static_cast<std::size_t>(n));
    for (double& x : v) x = scale * rng.next_gaussian();
    return v;
}

void validate_config(const ScmConfig& cfg) {
    if (cfg.dim < 1 || cfg.base_classes < 1 || cfg.new_classes < 0 || cfg.relevant_factors < 1 ||
        cfg.irrelevant_factors < 0 || cfg.shots < 1 || cfg.test_per_class < 1) {
        fail(errc::invalid_argument, "generate_scm_dataset: non-positive size parameter");
    }
    if (!(cfg.noise_sigma >= 0.0) || !(cfg.irrelevant_energy >= 0.0)) {
        fail(errc::invalid_argument, "generate_scm_dataset: negative scale parameter");
    }
    if (!(cfg.confound_strength >= 0.0 && cfg.confound_strength <= 1.0)) {
        fail(errc::invalid_argument, "generate_scm_dataset: confound_strength " +
                                         std::to_string(cfg.confound_strength) +
                                         " outside [0, 1]");
    }
    const int needed = cfg.relevant_factors + cfg.irrelevant_factors;
    if (cfg.dim < needed) {
        fail(errc::dimension_too_small, "generate_scm_dataset: dim " + std::to_string(cfg.dim) +
                                            " < " + std::to_string(needed) + " factors");
    }
}

// Two-pass modified Gram-Schmidt over seeded gaussian draws.
std::vector<Vec> orthonormal_factors(int dim, int count, Rng& rng) {
    std::vector<Vec> basis;
    basis.reserve(static_cast<std::size_t>(count));
    while (static_cast<int>(basis.size()) < count) {
        Vec v = gaussian_vec(rng, dim, 1.0);
        for (int pass = 0; pass < 2; ++pass) {
            for (const Vec& b : basis) {
                const double proj = dot(v, b);
                for (int i = 0; i < dim; ++i) v[i] -= proj * b[i];
            }
        }
        if (l2_norm(v) <= 1e-8) continue;  // rejected draw; try another
        l2_normalize_inplace(v);
        basis.push_back(std::move(v));
    }
    return basis;
}

struct LatentModel {
    std::vector<Vec> relevant;             // orthonormal, in ambient space
    std::vector<Vec> irrelevant;           // orthonormal, in ambient space
    std::vector<std::vector<std::pair<int, double>>> class_loadings;  // per class
    std::vector<Vec> class_irrelevant_mean;                           // per class
};

LatentModel build_latent_model(const ScmConfig& cfg) {
    LatentModel model;
    Rng factor_rng(mix_seed(cfg.seed, kStreamFactors));
    std::vector<Vec> all =
        orthonormal_factors(cfg.dim, cfg.relevant_factors + cfg.irrelevant_factors, factor_rng);
    model.relevant.assign(all.begin(), all.begin() + cfg.relevant_factors);
    model.irrelevant.assign(all.begin() + cfg.relevant_factors, all.end());

    const int num_classes = cfg.base_classes + cfg.new_classes;
    const double mean_scale =
        cfg.irrelevant_factors > 0
            ? std::sqrt(cfg.irrelevant_energy / static_cast<double>(cfg.irrelevant_factors))
            : 0.0;
    for (int c = 0; c < num_classes; ++c) {
        // Each class leans on a distinct pair of relevant factors, so class
        // directions are near-orthogonal whenever enough factors exist.
        Rng load_rng(mix_seed(cfg.seed, kStreamLoading, static_cast<std::uint64_t>(c)));
        std::vector<std::pair<int, double>> loading;
        const int f1 = (2 * c) % cfg.relevant_factors;
        const int f2 = (2 * c + 1) % cfg.relevant_factors;
        double w1 = 0.8 + 0.4 * load_rng.next_double();
        double w2 = 0.8 + 0.4 * load_rng.next_double();
        if (f1 == f2) {
            loading.emplace_back(f1, 1.0);
        } else {
            const double n = std::sqrt(w1 * w1 + w2 * w2);
            loading.emplace_back(f1, w1 / n);
            loading.emplace_back(f2, w2 / n);
        }
        model.class_loadings.push_back(std::move(loading));

        Rng mean_rng(mix_seed(cfg.seed, kStreamClassMean, static_cast<std::uint64_t>(c)));
        model.class_irrelevant_mean.push_back(
            gaussian_vec(mean_rng, cfg.irrelevant_factors, mean_scale));
    }
    return model;
}

Sample draw_sample(const ScmConfig& cfg, const LatentModel& model, int label, Split split,
                   int index) {
    Rng rng(mix_seed(cfg.seed, kStreamSample, static_cast<std::uint64_t>(label),
                     static_cast<std::uint64_t>(split), static_cast<std::uint64_t>(index)));
    const double eps_scale =
        cfg.irrelevant_factors > 0
            ? std::sqrt(cfg.irrelevant_energy / static_cast<double>(cfg.irrelevant_factors))
            : 0.0;
    const double kappa = cfg.confound_strength;
    const bool confounded = split != Split::new_test;

    Sample s;
    s.label = label;
    s.split = split;
    for (int attempt = 0; attempt < 100; ++attempt) {
        Vec x(static_cast<std::size_t>(cfg.dim), 0.0);
        for (const auto& [k, w] : model.class_loadings[static_cast<std::size_t>(label)]) {
            const Vec& dir = model.relevant[static_cast<std::size_t>(k)];
            for (int i = 0; i < cfg.dim; ++i) x[i] += w * dir[i];
        }
        for (int j = 0; j < cfg.irrelevant_factors; ++j) {
            const double eps = eps_scale * rng.next_gaussian();
            double lambda = eps;
            if (confounded) {
                lambda = kappa * model.class_irrelevant_mean[static_cast<std::size_t>(label)]
                                     [static_cast<std::size_t>(j)] +
                         std::sqrt(1.0 - kappa * kappa) * eps;
            }
            const Vec& dir = model.irrelevant[static_cast<std::size_t>(j)];
            for (int i = 0; i < cfg.dim; ++i) x[i] += lambda * dir[i];
        }
        if (cfg.noise_sigma > 0.0) {
            for (int i = 0; i < cfg.dim; ++i) x[i] += cfg.noise_sigma * rng.next_gaussian();
        }
        if (l2_norm(x) <= 1e-12) continue;
        l2_normalize_inplace(x);
        s.features = std::move(x);
        return s;
    }
    fail(errc::zero_vector, "generate_scm_dataset: degenerate sample after 100 draws");
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

const char* split_name(Split s) {
    switch (s) {
        case Split::base_train: return "base-train";
        case Split::base_test: return "base-test";
        case Split::new_test: return "new-test";
    }
    return "?";
}

Split split_from_name(const std::string& name) {
    if (name == "base-train") return Split::base_train;
    if (name == "base-test") return Split::base_test;
    if (name == "new-test") return Split::new_test;
    fail(errc::unknown_split_tag, "'" + name + "'");
}

std::vector<int> EmbeddingDataset::base_classes() const {
    std::set<int> seen;
    for (const Sample& s : samples) {
        if (s.split != Split::new_test) seen.insert(s.label);
    }
    return {seen.begin(), seen.end()};
}

std::vector<int> EmbeddingDataset::new_classes() const {
    std::set<int> seen;
    for (const Sample& s : samples) {
        if (s.split == Split::new_test) seen.insert(s.label);
    }
    return {seen.begin(), seen.end()};
}

std::size_t EmbeddingDataset::count(Split s) const {
    std::size_t n = 0;
    for (const Sample& sample : samples) {
        if (sample.split == s) ++n;
    }
    return n;
}

EmbeddingDataset generate_scm_dataset(const ScmConfig& cfg) {
    return generate_scm_dataset(cfg, nullptr);
}

EmbeddingDataset generate_scm_dataset(const ScmConfig& cfg, std::vector<Vec>* factors_out) {
    validate_config(cfg);
    const LatentModel model = build_latent_model(cfg);
    if (factors_out != nullptr) {
        factors_out->clear();
        factors_out->insert(factors_out->end(), model.relevant.begin(), model.relevant.end());
        factors_out->insert(factors_out->end(), model.irrelevant.begin(), model.irrelevant.end());
    }

    EmbeddingDataset ds;
    ds.dim = cfg.dim;
    ds.num_classes = cfg.base_classes + cfg.new_classes;
    for (int c = 0; c < ds.num_classes; ++c) ds.class_names.push_back("class" + std::to_string(c));

    for (int c = 0; c < cfg.base_classes; ++c) {
        for (int i = 0; i < cfg.shots; ++i) {
            ds.samples.push_back(draw_sample(cfg, model, c, Split::base_train, i));
        }
    }
    for (int c = 0; c < cfg.base_classes; ++c) {
        for (int i = 0; i < cfg.test_per_class; ++i) {
            ds.samples.push_back(draw_sample(cfg, model, c, Split::base_test, i));
        }
    }
    for (int c = cfg.base_classes; c < ds.num_classes; ++c) {
        for (int i = 0; i < cfg.test_per_class; ++i) {
            ds.samples.push_back(draw_sample(cfg, model, c, Split::new_test, i));
        }
    }
    return ds;
}

void write_dataset(const EmbeddingDataset& ds, const std::string& path) {
    if (ds.dim < 1 || ds.num_classes < 1) {
        fail(errc::invalid_argument, "write_dataset: empty dataset shape");
    }
    if (static_cast<int>(ds.class_names.size()) != ds.num_classes) {
        fail(errc::dimension_mismatch,
             "write_dataset: " + std::to_string(ds.class_names.size()) + " names for " +
                 std::to_string(ds.num_classes) + " classes");
    }
    for (const std::string& name : ds.class_names) {
        if (name.empty() || name.find(',') != std::string::npos ||
            name.find('\n') != std::string::npos) {
            fail(errc::invalid_argument, "write_dataset: class name '" + name + "'");
        }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        fail(errc::io_failure, "write_dataset: cannot open '" + path + "'");
    }
    out << "CDCDS v1 d=" << ds.dim << " C=" << ds.num_classes << "\n";
    for (int c = 0; c < ds.num_classes; ++c) {
        out << (c == 0 ? "" : ",") << ds.class_names[static_cast<std::size_t>(c)];
    }
    out << "\n";
    for (const Sample& s : ds.samples) {
        if (static_cast<int>(s.features.size()) != ds.dim) {
            fail(errc::dimension_mismatch, "write_dataset: sample with " +
                                               std::to_string(s.features.size()) + " values");
        }
        if (s.label < 0 || s.label >= ds.num_classes) {
            fail(errc::unknown_class, "write_dataset: class " + std::to_string(s.label));
        }
        out << split_name(s.split) << ',' << s.label;
        for (double v : s.features) out << ',' << format_double(v);
        out << "\n";
    }
    out.flush();
    if (!out) {
        fail(errc::io_failure, "write_dataset: write to '" + path + "' failed");
    }
}

EmbeddingDataset read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(errc::io_failure, "read_dataset: cannot open '" + path + "'");
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    if (in.bad()) {
        fail(errc::io_failure, "read_dataset: read from '" + path + "' failed");
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();

    if (lines.empty()) {
        fail(errc::malformed_header, "read_dataset: line 1: empty file");
    }
    int dim = 0;
    int num_classes = 0;
    char trailing = '\0';
    const int matched =
        std::sscanf(lines[0].c_str(), "CDCDS v1 d=%d C=%d%c", &dim, &num_classes, &trailing);
    if (matched != 2 || dim < 1 || num_classes < 1) {
        fail(errc::malformed_header, "read_dataset: line 1: '" + lines[0] + "'");
    }

    if (lines.size() < 2) {
        fail(errc::truncated_file, "read_dataset: line 2: missing class-name line");
    }
    EmbeddingDataset ds;
    ds.dim = dim;
    ds.num_classes = num_classes;
    {
        std::string token;
        for (char ch : lines[1]) {
            if (ch == ',') {
                ds.class_names.push_back(token);
                token.clear();
            } else {
                token.push_back(ch);
            }
        }
        ds.class_names.push_back(token);
    }
    if (static_cast<int>(ds.class_names.size()) != num_classes) {
        fail(errc::dimension_mismatch, "read_dataset: line 2: " +
                                           std::to_string(ds.class_names.size()) + " names for C=" +
                                           std::to_string(num_classes));
    }

    for (std::size_t li = 2; li < lines.size(); ++li) {
        const std::string& row = lines[li];
        const std::string where = "read_dataset: line " + std::to_string(li + 1);
        if (row.empty()) {
            fail(errc::truncated_file, where + ": empty row");
        }
        std::vector<std::string> fields;
        std::string token;
        for (char ch : row) {
            if (ch == ',') {
                fields.push_back(token);
                token.clear();
            } else {
                token.push_back(ch);
            }
        }
        fields.push_back(token);
        if (static_cast<int>(fields.size()) != dim + 2) {
            fail(errc::dimension_mismatch, where + ": " + std::to_string(fields.size()) +
                                               " fields, expected " + std::to_string(dim + 2));
        }
        Sample s;
        try {
            s.split = split_from_name(fields[0]);
        } catch (const Error& e) {
            fail(errc::unknown_split_tag, where + ": " + e.what());
        }
        {
            char* end = nullptr;
            const long label = std::strtol(fields[1].c_str(), &end, 10);
            if (end == fields[1].c_str() || *end != '\0') {
                fail(errc::invalid_argument, where + ": bad class field '" + fields[1] + "'");
            }
            if (label < 0 || label >= num_classes) {
                fail(errc::unknown_class, where + ": class " + std::to_string(label));
            }
            s.label = static_cast<int>(label);
        }
        s.features.resize(static_cast<std::size_t>(dim));
        for (int i = 0; i < dim; ++i) {
            const std::string& f = fields[static_cast<std::size_t>(i) + 2];
            char* end = nullptr;
            const double v = std::strtod(f.c_str(), &end);
            if (end == f.c_str() || *end != '\0' || !std::isfinite(v)) {
                fail(errc::invalid_argument, where + ": bad value '" + f + "'");
            }
            s.features[static_cast<std::size_t>(i)] = v;
        }
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

EmbeddingDataset split_base_new(const EmbeddingDataset& ds, const std::vector<int>& base_class_list,
                                int shots_limit, std::uint64_t seed) {
    if (base_class_list.empty()) {
        fail(errc::invalid_argument, "split_base_new: empty base class list");
    }
    std::set<int> base_set;
    for (int c : base_class_list) {
        if (c < 0 || c >= ds.num_classes) {
            fail(errc::unknown_class, "split_base_new: class " + std::to_string(c));
        }
        if (!base_set.insert(c).second) {
            fail(errc::invalid_argument, "split_base_new: duplicate class " + std::to_string(c));
        }
    }

    EmbeddingDataset out;
    out.dim = ds.dim;
    out.num_classes = ds.num_classes;
    out.class_names = ds.class_names;
    out.samples = ds.samples;
    for (Sample& s : out.samples) {
        const bool is_base = base_set.count(s.label) > 0;
        if (!is_base) {
            s.split = Split::new_test;
        } else if (s.split == Split::new_test) {
            s.split = Split::base_test;
        }
    }

    if (shots_limit >= 0) {
        std::vector<char> keep(out.samples.size(), 1);
        for (int c : base_class_list) {
            std::vector<std::size_t> idx;
            for (std::size_t i = 0; i < out.samples.size(); ++i) {
                if (out.samples[i].label == c && out.samples[i].split == Split::base_train) {
                    idx.push_back(i);
                }
            }
            if (static_cast<int>(idx.size()) <= shots_limit) continue;
            Rng rng(mix_seed(seed, kStreamShots, static_cast<std::uint64_t>(c)));
            // Partial Fisher-Yates: the first shots_limit slots are the keepers.
            for (int i = 0; i < shots_limit; ++i) {
                const std::size_t j =
                    static_cast<std::size_t>(i) +
                    static_cast<std::size_t>(rng.next_u64() % (idx.size() - static_cast<std::size_t>(i)));
                std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
            }
            for (std::size_t k = static_cast<std::size_t>(shots_limit); k < idx.size(); ++k) {
                keep[idx[k]] = 0;
            }
        }
        EmbeddingDataset pruned;
        pruned.dim = out.dim;
        pruned.num_classes = out.num_classes;
        pruned.class_names = out.class_names;
        for (std::size_t i = 0; i < out.samples.size(); ++i) {
            if (keep[i]) pruned.samples.push_back(std::move(out.samples[i]));
        }
        return pruned;
    }
    return out;
}

}  // namespace cdc
