#include "numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cdc {

namespace {

constexpr double kNormFloor = 1e-12;

void require_same_dim(const Vec& u, const Vec& v, const char* op) {
    if (u.size() != v.size()) {
        fail(errc::dimension_mismatch, std::string(op) + ": " + std::to_string(u.size()) +
                                           " vs " + std::to_string(v.size()));
    }
}

std::uint64_t splitmix_step(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace

double l2_norm(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

Vec l2_normalize(const Vec& v) {
    Vec out = v;
    l2_normalize_inplace(out);
    return out;
}

void l2_normalize_inplace(Vec& v) {
    const double n = l2_norm(v);
    if (n <= kNormFloor) {
        fail(errc::zero_vector, "l2_normalize: norm " + std::to_string(n));
    }
    for (double& x : v) x /= n;
}

double dot(const Vec& u, const Vec& v) {
    require_same_dim(u, v, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
}

double cosine_sim(const Vec& u, const Vec& v) {
    require_same_dim(u, v, "cosine_sim");
    const double nu = l2_norm(u);
    const double nv = l2_norm(v);
    if (nu <= kNormFloor || nv <= kNormFloor) {
        fail(errc::zero_vector, "cosine_sim: zero operand");
    }
    return dot(u, v) / (nu * nv);
}

Vec softmax(const Vec& scores, double tau) {
    if (!(tau > 0.0)) {
        fail(errc::non_positive_temperature, "softmax: tau " + std::to_string(tau));
    }
    if (scores.empty()) {
        fail(errc::invalid_argument, "softmax: empty scores");
    }
    Vec z(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) z[i] = scores[i] / tau;
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    Vec out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        out[i] = std::exp(z[i] - m);
        sum += out[i];
    }
    for (double& p : out) p /= sum;
    return out;
}

double entropy(const Vec& probs) {
    if (probs.empty()) {
        fail(errc::invalid_argument, "entropy: empty distribution");
    }
    double sum = 0.0;
    for (double p : probs) {
        if (p < -1e-9 || !std::isfinite(p)) {
            fail(errc::invalid_simplex, "entropy: entry " + std::to_string(p));
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
        fail(errc::invalid_simplex, "entropy: mass " + std::to_string(sum));
    }
    double h = 0.0;
    for (double p : probs) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

double digamma(double x) {
    if (!(x > 0.0)) {
        fail(errc::domain_error, "digamma: x " + std::to_string(x));
    }
    double acc = 0.0;
    while (x < 6.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double z = inv * inv;
    // psi(x) ~ ln x - 1/(2x) - sum_k B_{2k} / (2k x^{2k})
    const double tail =
        z * (1.0 / 12.0 -
             z * (1.0 / 120.0 -
                  z * (1.0 / 252.0 -
                       z * (1.0 / 240.0 - z * (1.0 / 132.0 - z * (691.0 / 32760.0))))));
    return acc + std::log(x) - 0.5 * inv - tail;
}

double trigamma(double x) {
    if (!(x > 0.0)) {
        fail(errc::domain_error, "trigamma: x " + std::to_string(x));
    }
    double acc = 0.0;
    while (x < 8.0) {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double z = inv * inv;
    // psi'(x) ~ 1/x + 1/(2x^2) + sum_k B_{2k} / x^{2k+1}
    const double tail =
        inv * z *
        (1.0 / 6.0 - z * (1.0 / 30.0 - z * (1.0 / 42.0 - z * (1.0 / 30.0 - z * (5.0 / 66.0)))));
    return acc + inv + 0.5 * z + tail;
}

std::uint64_t Rng::next_u64() {
    return splitmix_step(state_);
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_gaussian() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    // u1 in (0, 1]: keeps the log argument positive.
    const double u1 = 1.0 - next_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c,
                       std::uint64_t d) {
    std::uint64_t s = base;
    std::uint64_t h = splitmix_step(s);
    for (std::uint64_t v : {a, b, c, d}) {
        s ^= v + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
        h ^= splitmix_step(s);
    }
    return h;
}

}  // namespace cdc
