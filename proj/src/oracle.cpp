#include "measched/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "measched/errors.hpp"

namespace measched {

void OracleConfig::validate() const {
    if (window_len < 1) throw ConfigError("oracle.window_len must be >= 1");
    if (importance.empty()) throw ConfigError("oracle.importance must be nonempty");
    for (double f : importance)
        if (!std::isfinite(f)) throw ConfigError("oracle.importance entries must be finite");
}

void OracleConfig::validate_for(int n_channels) const {
    validate();
    if (static_cast<int>(importance.size()) != n_channels)
        throw ConfigError("oracle.importance has " + std::to_string(importance.size()) +
                          " entries but the simulator has " + std::to_string(n_channels) +
                          " channels");
}

Window::Window(int rows, int cols) : rows_(rows), cols_(cols) {
    if (rows < 1 || cols < 1) throw ConfigError("window shape must be positive");
    data_.assign(static_cast<std::size_t>(rows) * cols, 0.0);
}

void Window::push(std::span<const double> newest) {
    if (static_cast<int>(newest.size()) != cols_) throw ConfigError("window row width mismatch");
    std::copy(data_.begin() + cols_, data_.end(), data_.begin());
    std::copy(newest.begin(), newest.end(), data_.end() - cols_);
}

void Window::clear() { std::fill(data_.begin(), data_.end(), 0.0); }

double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double oracle_logit(std::span<const double> flat_window, const OracleConfig& cfg) {
    const std::size_t K = cfg.importance.size();
    if (flat_window.size() % K != 0) throw ConfigError("window size is not a multiple of K");
    double z = 0.0;
    for (std::size_t i = 0; i < flat_window.size(); ++i) z += flat_window[i] * cfg.importance[i % K];
    return z;
}

double predict(std::span<const double> flat_window, const OracleConfig& cfg) {
    const std::size_t expected = static_cast<std::size_t>(cfg.window_len) * cfg.importance.size();
    if (flat_window.size() != expected)
        throw ConfigError("oracle window has " + std::to_string(flat_window.size()) +
                          " entries, expected " + std::to_string(expected));
    return logistic(oracle_logit(flat_window, cfg));
}

double predict(const Window& window, const OracleConfig& cfg) { return predict(window.flat(), cfg); }

double predictive_gain(std::span<const double> history, double candidate, int k,
                       const OracleConfig& cfg) {
    const int K = static_cast<int>(cfg.importance.size());
    if (k < 0 || k >= K) throw std::out_of_range("channel index " + std::to_string(k) + " out of range");
    const std::size_t expected = static_cast<std::size_t>(cfg.window_len - 1) * K;
    if (history.size() != expected) throw ConfigError("gain history has the wrong shape");
    const double base = oracle_logit(history, cfg);
    return logistic(base + cfg.importance[k] * candidate) - logistic(base);
}

}  // namespace measched
