#include "bank.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace cdc {

namespace {

constexpr std::uint64_t kStreamProjection = 0x70726f6a;
constexpr std::uint64_t kStreamTheta = 0x74686574;
constexpr char kMagic[4] = {'C', 'D', 'C', '1'};

std::vector<std::string> split_on(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string token;
    for (char ch : text) {
        if (ch == sep) {
            parts.push_back(token);
            token.clear();
        } else {
            token.push_back(ch);
        }
    }
    parts.push_back(token);
    return parts;
}

double parse_param(const std::string& text, const std::string& whole) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0' || !std::isfinite(v)) {
        fail(errc::invalid_argument, "channel '" + whole + "': bad parameter '" + text + "'");
    }
    return v;
}

void write_f64(std::ofstream& out, double v) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    char raw[8];
    for (int i = 0; i < 8; ++i) raw[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
    out.write(raw, 8);
}

double read_f64(std::ifstream& in, const std::string& path, std::size_t index) {
    char raw[8];
    in.read(raw, 8);
    if (in.gcount() != 8) {
        fail(errc::bad_checkpoint,
             "load_checkpoint: '" + path + "' truncated at value " + std::to_string(index));
    }
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(raw[i])) << (8 * i);
    }
    return std::bit_cast<double>(bits);
}

int read_dim(std::ifstream& in, const std::string& path, std::size_t index, const char* name) {
    const double v = read_f64(in, path, index);
    if (!(v >= 1.0) || v != std::floor(v) || v > 1e6) {
        fail(errc::bad_checkpoint,
             "load_checkpoint: '" + path + "': " + name + " = " + std::to_string(v));
    }
    return static_cast<int>(v);
}

}  // namespace

AugmentationChannel AugmentationChannel::parse(const std::string& text) {
    const std::vector<std::string> parts = split_on(text, ':');
    AugmentationChannel ch;
    const std::string& kind = parts[0];
    if (kind == "identity") {
        if (parts.size() != 1) {
            fail(errc::invalid_argument, "channel '" + text + "': identity takes no parameters");
        }
        ch.kind = ChannelKind::identity;
    } else if (kind == "jitter") {
        if (parts.size() != 2) {
            fail(errc::invalid_argument, "channel '" + text + "': want jitter:<sigma>");
        }
        ch.kind = ChannelKind::gaussian_jitter;
        ch.sigma = parse_param(parts[1], text);
        if (ch.sigma < 0.0) {
            fail(errc::invalid_argument, "channel '" + text + "': negative sigma");
        }
    } else if (kind == "mask") {
        if (parts.size() != 2) {
            fail(errc::invalid_argument, "channel '" + text + "': want mask:<rate>");
        }
        ch.kind = ChannelKind::coordinate_mask;
        ch.rate = parse_param(parts[1], text);
        if (ch.rate < 0.0 || ch.rate > 1.0) {
            fail(errc::invalid_argument, "channel '" + text + "': rate outside [0, 1]");
        }
    } else if (kind == "rotate") {
        if (parts.size() != 3) {
            fail(errc::invalid_argument, "channel '" + text + "': want rotate:<angle>:<planes>");
        }
        ch.kind = ChannelKind::subspace_rotation;
        ch.angle = parse_param(parts[1], text);
        const double planes = parse_param(parts[2], text);
        if (planes < 0.0 || planes != std::floor(planes) || planes > 1e6) {
            fail(errc::invalid_argument, "channel '" + text + "': bad plane count");
        }
        ch.planes = static_cast<int>(planes);
    } else if (kind == "scale") {
        if (parts.size() != 2) {
            fail(errc::invalid_argument, "channel '" + text + "': want scale:<range>");
        }
        ch.kind = ChannelKind::scale_jitter;
        ch.range = parse_param(parts[1], text);
        if (ch.range < 0.0 || ch.range >= 1.0) {
            fail(errc::invalid_argument, "channel '" + text + "': range outside [0, 1)");
        }
    } else {
        fail(errc::invalid_argument, "channel '" + text + "': unknown kind '" + kind + "'");
    }
    return ch;
}

std::string AugmentationChannel::to_string() const {
    char buf[64];
    switch (kind) {
        case ChannelKind::identity:
            return "identity";
        case ChannelKind::gaussian_jitter:
            std::snprintf(buf, sizeof(buf), "jitter:%g", sigma);
            return buf;
        case ChannelKind::coordinate_mask:
            std::snprintf(buf, sizeof(buf), "mask:%g", rate);
            return buf;
        case ChannelKind::subspace_rotation:
            std::snprintf(buf, sizeof(buf), "rotate:%g:%d", angle, planes);
            return buf;
        case ChannelKind::scale_jitter:
            std::snprintf(buf, sizeof(buf), "scale:%g", range);
            return buf;
    }
    return "?";
}

Vec apply_augmentation(const Vec& x, const AugmentationChannel& ch, Rng& rng) {
    if (x.empty()) {
        fail(errc::invalid_argument, "apply_augmentation: empty input");
    }
    switch (ch.kind) {
        case ChannelKind::identity:
            return x;
        case ChannelKind::gaussian_jitter: {
            if (ch.sigma == 0.0) return x;
            Vec y(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + ch.sigma * rng.next_gaussian();
            if (l2_norm(y) <= 1e-12) return x;
            l2_normalize_inplace(y);
            return y;
        }
        case ChannelKind::coordinate_mask: {
            if (ch.rate == 0.0) return x;
            Vec y(x.size());
            // One uniform per coordinate, so the stream position does not
            // depend on which coordinates end up masked.
            for (std::size_t i = 0; i < x.size(); ++i) {
                y[i] = rng.next_double() < ch.rate ? 0.0 : x[i];
            }
            if (l2_norm(y) <= 1e-12) return x;
            l2_normalize_inplace(y);
            return y;
        }
        case ChannelKind::subspace_rotation: {
            if (ch.planes == 0 || ch.angle == 0.0) return x;
            Vec y = x;
            const double c = std::cos(ch.angle);
            const double s = std::sin(ch.angle);
            for (int k = 0; k < ch.planes; ++k) {
                const std::size_t i = static_cast<std::size_t>(rng.next_u64() % y.size());
                const std::size_t j = static_cast<std::size_t>(rng.next_u64() % y.size());
                if (i == j) continue;
                const double yi = y[i];
                const double yj = y[j];
                y[i] = c * yi - s * yj;
                y[j] = s * yi + c * yj;
            }
            if (l2_norm(y) <= 1e-12) return x;
            l2_normalize_inplace(y);
            return y;
        }
        case ChannelKind::scale_jitter: {
            if (ch.range == 0.0) return x;
            Vec y(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) {
                y[i] = x[i] * (1.0 + ch.range * (2.0 * rng.next_double() - 1.0));
            }
            if (l2_norm(y) <= 1e-12) return x;
            l2_normalize_inplace(y);
            return y;
        }
    }
    fail(errc::invalid_argument, "apply_augmentation: bad channel kind");
}

TemplateBank init_bank(const EmbeddingDataset& ds, int num_templates, int param_dim,
                       std::uint64_t seed) {
    if (num_templates < 1 || param_dim < 1) {
        fail(errc::invalid_argument, "init_bank: M and p must be >= 1");
    }
    if (ds.dim < 1 || ds.num_classes < 1 || ds.samples.empty()) {
        fail(errc::empty_dataset, "init_bank: dataset has no samples");
    }

    TemplateBank bank;
    bank.num_templates = num_templates;
    bank.num_classes = ds.num_classes;
    bank.dim = ds.dim;
    bank.param_dim = param_dim;

    // Anchor preference order: base-train rows define base-class prototypes;
    // classes without any live on their new-test rows.
    for (int c = 0; c < ds.num_classes; ++c) {
        Vec sum(static_cast<std::size_t>(ds.dim), 0.0);
        int count = 0;
        for (Split want : {Split::base_train, Split::new_test, Split::base_test}) {
            for (const Sample& s : ds.samples) {
                if (s.label != c || s.split != want) continue;
                for (int i = 0; i < ds.dim; ++i) sum[static_cast<std::size_t>(i)] += s.features[static_cast<std::size_t>(i)];
                ++count;
            }
            if (count > 0) break;
        }
        if (count == 0) {
            fail(errc::unknown_class, "init_bank: class " + std::to_string(c) + " has no samples");
        }
        for (double& v : sum) v /= static_cast<double>(count);
        l2_normalize_inplace(sum);
        bank.anchors.push_back(std::move(sum));
    }

    Rng proj_rng(mix_seed(seed, kStreamProjection));
    const double proj_scale = 1.0 / std::sqrt(static_cast<double>(ds.dim));
    bank.projection.resize(static_cast<std::size_t>(ds.dim));
    for (Vec& row : bank.projection) {
        row.resize(static_cast<std::size_t>(param_dim));
        for (double& v : row) v = proj_scale * proj_rng.next_gaussian();
    }

    for (int m = 0; m < num_templates; ++m) {
        Rng theta_rng(mix_seed(seed, kStreamTheta, static_cast<std::uint64_t>(m)));
        Vec theta(static_cast<std::size_t>(param_dim));
        for (double& v : theta) v = 0.02 * theta_rng.next_gaussian();
        bank.theta.push_back(std::move(theta));
    }
    return bank;
}

Vec project_theta(const TemplateBank& bank, int m) {
    if (m < 0 || m >= bank.num_templates) {
        fail(errc::invalid_argument, "project_theta: template " + std::to_string(m));
    }
    Vec out(static_cast<std::size_t>(bank.dim), 0.0);
    const Vec& theta = bank.theta[static_cast<std::size_t>(m)];
    for (int i = 0; i < bank.dim; ++i) {
        const Vec& row = bank.projection[static_cast<std::size_t>(i)];
        double s = 0.0;
        for (int j = 0; j < bank.param_dim; ++j) {
            s += row[static_cast<std::size_t>(j)] * theta[static_cast<std::size_t>(j)];
        }
        out[static_cast<std::size_t>(i)] = s;
    }
    return out;
}

std::vector<Vec> materialize_template(const TemplateBank& bank, int m) {
    Vec offset = project_theta(bank, m);
    std::vector<Vec> rows;
    rows.reserve(static_cast<std::size_t>(bank.num_classes));
    for (int c = 0; c < bank.num_classes; ++c) {
        const Vec& anchor = bank.anchors[static_cast<std::size_t>(c)];
        Vec raw(static_cast<std::size_t>(bank.dim));
        for (int i = 0; i < bank.dim; ++i) {
            raw[static_cast<std::size_t>(i)] =
                anchor[static_cast<std::size_t>(i)] + offset[static_cast<std::size_t>(i)];
        }
        if (l2_norm(raw) <= 1e-12) {
            // Cancellation between anchor and offset; retry from a locally
            // jittered parameter vector without touching the bank.
            TemplateBank probe = bank;
            bool fixed = false;
            for (int attempt = 1; attempt <= 3 && !fixed; ++attempt) {
                for (double& v : probe.theta[static_cast<std::size_t>(m)]) {
                    v += 1e-6 * static_cast<double>(attempt);
                }
                Vec jittered = project_theta(probe, m);
                for (int i = 0; i < bank.dim; ++i) {
                    raw[static_cast<std::size_t>(i)] = anchor[static_cast<std::size_t>(i)] +
                                                       jittered[static_cast<std::size_t>(i)];
                }
                fixed = l2_norm(raw) > 1e-12;
            }
            if (!fixed) {
                fail(errc::zero_vector, "materialize_template: template " + std::to_string(m) +
                                            " class " + std::to_string(c) + " stays degenerate");
            }
            std::fprintf(stderr, "cdc: degenerate row (template %d, class %d), re-jittered\n", m,
                         c);
        }
        l2_normalize_inplace(raw);
        rows.push_back(std::move(raw));
    }
    return rows;
}

std::vector<std::vector<Vec>> materialize(const TemplateBank& bank) {
    std::vector<std::vector<Vec>> all;
    all.reserve(static_cast<std::size_t>(bank.num_templates));
    for (int m = 0; m < bank.num_templates; ++m) all.push_back(materialize_template(bank, m));
    return all;
}

void save_checkpoint(const TemplateBank& bank, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        fail(errc::io_failure, "save_checkpoint: cannot open '" + path + "'");
    }
    out.write(kMagic, 4);
    write_f64(out, static_cast<double>(bank.num_templates));
    write_f64(out, static_cast<double>(bank.num_classes));
    write_f64(out, static_cast<double>(bank.dim));
    write_f64(out, static_cast<double>(bank.param_dim));
    for (const Vec& row : bank.projection) {
        for (double v : row) write_f64(out, v);
    }
    for (const Vec& row : bank.anchors) {
        for (double v : row) write_f64(out, v);
    }
    for (const Vec& row : bank.theta) {
        for (double v : row) write_f64(out, v);
    }
    out.flush();
    if (!out) {
        fail(errc::io_failure, "save_checkpoint: write to '" + path + "' failed");
    }
}

TemplateBank load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(errc::io_failure, "load_checkpoint: cannot open '" + path + "'");
    }
    char magic[4] = {};
    in.read(magic, 4);
    if (in.gcount() != 4 || magic[0] != kMagic[0] || magic[1] != kMagic[1] ||
        magic[2] != kMagic[2] || magic[3] != kMagic[3]) {
        fail(errc::bad_checkpoint, "load_checkpoint: '" + path + "' has no CDC1 magic");
    }
    std::size_t index = 0;
    TemplateBank bank;
    bank.num_templates = read_dim(in, path, index++, "M");
    bank.num_classes = read_dim(in, path, index++, "C");
    bank.dim = read_dim(in, path, index++, "d");
    bank.param_dim = read_dim(in, path, index++, "p");

    bank.projection.resize(static_cast<std::size_t>(bank.dim));
    for (Vec& row : bank.projection) {
        row.resize(static_cast<std::size_t>(bank.param_dim));
        for (double& v : row) v = read_f64(in, path, index++);
    }
    bank.anchors.resize(static_cast<std::size_t>(bank.num_classes));
    for (Vec& row : bank.anchors) {
        row.resize(static_cast<std::size_t>(bank.dim));
        for (double& v : row) v = read_f64(in, path, index++);
    }
    bank.theta.resize(static_cast<std::size_t>(bank.num_templates));
    for (Vec& row : bank.theta) {
        row.resize(static_cast<std::size_t>(bank.param_dim));
        for (double& v : row) v = read_f64(in, path, index++);
    }
    char extra = 0;
    in.read(&extra, 1);
    if (in.gcount() != 0) {
        fail(errc::bad_checkpoint, "load_checkpoint: '" + path + "' has trailing data");
    }
    return bank;
}

}  // namespace cdc
