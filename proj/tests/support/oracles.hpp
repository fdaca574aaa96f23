#pragma once

// Independent reference computations for the test suites. Nothing here calls
// into the library code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace measched::testing {

/// Logistic function written as 0.5 * (1 + tanh(z / 2)).
inline double scalar_sigmoid(double z) { return 0.5 * (1.0 + std::tanh(0.5 * z)); }

/// sigma(sum_t sum_k window[t][k] * f[k]) with explicit row/column loops.
inline double scalar_oracle(const std::vector<std::vector<double>>& rows, const std::vector<double>& f) {
    long double z = 0.0L;
    for (const auto& row : rows)
        for (std::size_t k = 0; k < row.size(); ++k) z += static_cast<long double>(row[k]) * f[k];
    return scalar_sigmoid(static_cast<double>(z));
}

/// First index at which a run of `run` consecutive ones completes, found by
/// checking every window of length `run` explicitly.
inline std::optional<int> brute_force_terminal(const std::vector<std::uint8_t>& s, int run) {
    for (int end = run - 1; end < static_cast<int>(s.size()); ++end) {
        bool all = true;
        for (int j = end - run + 1; j <= end; ++j) all = all && s[j] == 1;
        if (all) return end;
    }
    return std::nullopt;
}

/// Dense layer shape for the extended-precision reference network.
struct RefLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    bool relu = false;
};

/// Forward pass in long double over a flat parameter array laid out per
/// layer as out x in weights (row-major) followed by out biases.
inline std::vector<long double> ref_forward(const std::vector<RefLayer>& layers, const std::vector<long double>& p,
                                            const std::vector<double>& input) {
    std::vector<long double> x(input.begin(), input.end());
    std::size_t off = 0;
    for (const auto& L : layers) {
        std::vector<long double> y(L.out);
        for (std::size_t o = 0; o < L.out; ++o) {
            long double acc = p[off + L.out * L.in + o];
            for (std::size_t i = 0; i < L.in; ++i) acc += p[off + o * L.in + i] * x[i];
            y[o] = (L.relu && acc < 0.0L) ? 0.0L : acc;
        }
        off += L.out * L.in + L.out;
        x = std::move(y);
    }
    return x;
}

/// Mean over the batch of sum_k (Q_k(bit) - y_k)^2 with Q from the dueling
/// heads, V_k + A_k(bit) - (A_k(0) + A_k(1)) / 2, all in long double.
inline long double ref_dueling_loss(const std::vector<RefLayer>& layers, const std::vector<long double>& p,
                                    const std::vector<std::vector<double>>& states,
                                    const std::vector<std::vector<std::uint8_t>>& bits,
                                    const std::vector<std::vector<double>>& targets) {
    long double total = 0.0L;
    for (std::size_t b = 0; b < states.size(); ++b) {
        const auto out = ref_forward(layers, p, states[b]);
        const std::size_t K = bits[b].size();
        for (std::size_t k = 0; k < K; ++k) {
            const long double a0 = out[K + 2 * k], a1 = out[K + 2 * k + 1];
            const long double q = out[k] + (bits[b][k] ? a1 : a0) - 0.5L * (a0 + a1);
            const long double e = q - targets[b][k];
            total += e * e;
        }
    }
    return total / static_cast<long double>(states.size());
}

/// Central differences of a long double function at a double point.
inline std::vector<double> central_difference_ld(
    const std::function<long double(const std::vector<long double>&)>& f, const std::vector<double>& at,
    long double h = 1e-6L) {
    std::vector<long double> x(at.begin(), at.end());
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const long double orig = x[i];
        x[i] = orig + h;
        const long double up = f(x);
        x[i] = orig - h;
        const long double down = f(x);
        x[i] = orig;
        g[i] = static_cast<double>((up - down) / (2.0L * h));
    }
    return g;
}

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor). The floor keeps entries that
/// are zero in both (dead relu units) from dividing by zero.
inline double max_relative_error(const std::vector<double>& a, const std::vector<double>& b,
                                 double floor = 1e-6) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

/// |observed - expected| within `sigmas` binomial standard deviations.
inline bool within_binomial_sigma(double successes, double trials, double p, double sigmas = 3.0) {
    const double sd = std::sqrt(trials * p * (1.0 - p));
    return std::abs(successes - trials * p) <= sigmas * sd;
}

}  // namespace measched::testing
