#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace measched {

/// Fixed linear-logistic event forecaster over the most recent rows.
struct OracleConfig {
    /// Per-channel weight; channel 3 carries the largest weight by default.
    std::vector<double> importance{1.0, 2.0, 4.0, 0.0, 0.0, 0.0};
    int window_len = 5;

    std::size_t n_channels() const { return importance.size(); }
    void validate() const;
    void validate_for(int n_channels) const;
};

/// window_len x K observation buffer, oldest row first. Zero means
/// "not measured" (or measured and missing).
class Window {
public:
    Window(int rows, int cols);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    double& at(int r, int k) { return data_[static_cast<std::size_t>(r) * cols_ + k]; }
    double at(int r, int k) const { return data_[static_cast<std::size_t>(r) * cols_ + k]; }
    std::span<const double> flat() const { return data_; }
    std::span<const double> row(int r) const {
        return std::span<const double>(data_).subspan(static_cast<std::size_t>(r) * cols_, cols_);
    }

    /// Drops the oldest row and appends `newest`.
    void push(std::span<const double> newest);
    void clear();

private:
    int rows_;
    int cols_;
    std::vector<double> data_;
};

double logistic(double z);

/// Logit sum_t sum_k window[t][k] * importance[k].
double oracle_logit(std::span<const double> flat_window, const OracleConfig& cfg);

/// Event probability for a full window (window_len x K values).
double predict(std::span<const double> flat_window, const OracleConfig& cfg);
double predict(const Window& window, const OracleConfig& cfg);

/// Change in predicted probability from revealing `candidate` on channel k in
/// the pending newest row, versus leaving that row empty. `history` holds the
/// (window_len - 1) x K rows that precede the pending row.
double predictive_gain(std::span<const double> history, double candidate, int k,
                       const OracleConfig& cfg);

}  // namespace measched
