#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>

namespace pcqa {

// A correlation value; `degenerate` marks a zero-variance input, in which case value is 0.
struct Correlation {
    double value = 0.0;
    bool degenerate = false;
};

// Pearson correlation of average ranks.
Correlation srocc(std::span<const double> pred, std::span<const double> gt);
// Kendall tau-b by pair enumeration.
Correlation krocc(std::span<const double> pred, std::span<const double> gt);
Correlation pearson(std::span<const double> pred, std::span<const double> gt);
double rmse(std::span<const double> pred, std::span<const double> gt);

// f(x) = (b1 - b2) / (1 + exp(-(x - b3) / |b4|)) + b2
struct LogisticParams {
    std::array<double, 4> beta{};
    double operator()(double x) const;
};

// Least-squares fit by Nelder-Mead simplex from the conventional start
// (b1 = max gt, b2 = min gt, b3 = median pred, b4 = std pred) and from a
// near-identity start; the lower residual wins.
LogisticParams fit_logistic(std::span<const double> pred, std::span<const double> gt);

struct PlccRmse {
    double plcc = 0.0;
    double rmse = 0.0;
    bool degenerate = false;
    std::optional<LogisticParams> fit;
};

PlccRmse plcc_rmse(std::span<const double> pred, std::span<const double> gt, bool fitted);

struct MetricReport {
    double srocc = 0.0;
    double plcc_raw = 0.0;
    double plcc_fitted = 0.0;
    double krocc = 0.0;
    double rmse_raw = 0.0;
    double rmse_fitted = 0.0;
    std::size_t n = 0;
    std::optional<std::array<double, 4>> fit_params;
    bool degenerate = false;

    std::string to_json() const;
    static std::string csv_header();
    std::string to_csv_row() const;
};

MetricReport compute_metrics(std::span<const double> pred, std::span<const double> gt);

}  // namespace pcqa
