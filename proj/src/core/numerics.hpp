#pragma once

#include <cstdint>
#include <vector>

#include "error.hpp"

namespace cdc {

using Vec = std::vector<double>;

double l2_norm(const Vec& v);

// Throws ZeroVector when the norm is <= 1e-12.
Vec l2_normalize(const Vec& v);
void l2_normalize_inplace(Vec& v);

double dot(const Vec& u, const Vec& v);
double cosine_sim(const Vec& u, const Vec& v);

// Temperature-scaled softmax with max subtraction; tau must be > 0.
Vec softmax(const Vec& scores, double tau);

// Shannon entropy in nats; 0*log(0) = 0. Input must sum to 1 within 1e-6.
double entropy(const Vec& probs);

// Digamma/trigamma for x > 0: recurrence shift into the asymptotic regime,
// then a Bernoulli-number tail. Absolute error below 1e-10 on [1e-3, 1e6].
double digamma(double x);
double trigamma(double x);

// splitmix64. Chosen over <random> engines/distributions because its output
// is bit-identical across platforms and standard libraries.
class Rng {
public:
    static constexpr const char* kAlgorithm = "splitmix64";

    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();
    // Uniform in [0, 1), 53-bit resolution.
    double next_double();
    // Standard normal via Box-Muller; second deviate is cached.
    double next_gaussian();

private:
    std::uint64_t state_;
    bool has_cached_ = false;
    double cached_ = 0.0;
};

// Derives an independent stream seed from a base seed and up to four
// stream tags. Pure function of its arguments.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0, std::uint64_t d = 0);

}  // namespace cdc
