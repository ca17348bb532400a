#include "pcqa/metrics.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <nlohmann/json.hpp>
#include <numeric>
#include <vector>

#include "pcqa/errors.hpp"
#include "pcqa/io.hpp"

namespace pcqa {

namespace {

void check_inputs(std::span<const double> pred, std::span<const double> gt) {
    if (pred.size() != gt.size()) throw InvalidInput("metric inputs differ in length");
    if (pred.size() < 2) throw InvalidInput("metrics need at least 2 samples");
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (!std::isfinite(pred[i]) || !std::isfinite(gt[i])) throw InvalidInput("metric inputs must be finite");
}

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double mean(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double stddev(std::span<const double> v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct FitData {
    std::span<const double> pred;
    std::span<const double> gt;
};

double sse(const LogisticParams& f, const FitData& d) {
    double s = 0.0;
    for (std::size_t i = 0; i < d.pred.size(); ++i) {
        const double r = f(d.pred[i]) - d.gt[i];
        s += r * r;
    }
    return s;
}

double sse_gsl(const gsl_vector* v, void* params) {
    LogisticParams f;
    for (std::size_t i = 0; i < 4; ++i) f.beta[i] = gsl_vector_get(v, i);
    const double s = sse(f, *static_cast<const FitData*>(params));
    return std::isfinite(s) ? s : GSL_POSINF;
}

LogisticParams simplex_fit(const LogisticParams& start, const FitData& data) {
    gsl_multimin_function fn{&sse_gsl, 4, const_cast<FitData*>(&data)};
    std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> x(gsl_vector_alloc(4), gsl_vector_free);
    std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> step(gsl_vector_alloc(4), gsl_vector_free);
    for (std::size_t i = 0; i < 4; ++i) {
        gsl_vector_set(x.get(), i, start.beta[i]);
        gsl_vector_set(step.get(), i, std::max(0.1 * std::abs(start.beta[i]), 1e-3));
    }
    std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> solver(
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 4), gsl_multimin_fminimizer_free);
    gsl_multimin_fminimizer_set(solver.get(), &fn, x.get(), step.get());
    for (int iter = 0; iter < 20000; ++iter) {
        if (gsl_multimin_fminimizer_iterate(solver.get()) != GSL_SUCCESS) break;
        if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(solver.get()), 1e-10) == GSL_SUCCESS) break;
    }
    LogisticParams out;
    for (std::size_t i = 0; i < 4; ++i) out.beta[i] = gsl_vector_get(solver->x, i);
    return sse(out, data) <= sse(start, data) ? out : start;
}

}  // namespace

Correlation pearson(std::span<const double> pred, std::span<const double> gt) {
    check_inputs(pred, gt);
    const double mp = mean(pred), mg = mean(gt);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double dx = pred[i] - mp, dy = gt[i] - mg;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return {0.0, true};
    return {std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0), false};
}

Correlation srocc(std::span<const double> pred, std::span<const double> gt) {
    check_inputs(pred, gt);
    const auto rp = average_ranks(pred);
    const auto rg = average_ranks(gt);
    return pearson(rp, rg);
}

Correlation krocc(std::span<const double> pred, std::span<const double> gt) {
    check_inputs(pred, gt);
    long long concordant = 0, discordant = 0, ties_pred = 0, ties_gt = 0;
    const std::size_t n = pred.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dp = pred[i] - pred[j];
            const double dg = gt[i] - gt[j];
            if (dp == 0.0 && dg == 0.0) continue;
            if (dp == 0.0) {
                ++ties_pred;
            } else if (dg == 0.0) {
                ++ties_gt;
            } else if ((dp > 0.0) == (dg > 0.0)) {
                ++concordant;
            } else {
                ++discordant;
            }
        }
    }
    const double n1 = static_cast<double>(concordant + discordant + ties_pred);
    const double n2 = static_cast<double>(concordant + discordant + ties_gt);
    if (n1 <= 0.0 || n2 <= 0.0) return {0.0, true};
    return {std::clamp(static_cast<double>(concordant - discordant) / std::sqrt(n1 * n2), -1.0, 1.0), false};
}

double rmse(std::span<const double> pred, std::span<const double> gt) {
    check_inputs(pred, gt);
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - gt[i]) * (pred[i] - gt[i]);
    return std::sqrt(s / static_cast<double>(pred.size()));
}

double LogisticParams::operator()(double x) const {
    const double b4 = std::max(std::abs(beta[3]), 1e-12);
    return (beta[0] - beta[1]) / (1.0 + std::exp(-(x - beta[2]) / b4)) + beta[1];
}

LogisticParams fit_logistic(std::span<const double> pred, std::span<const double> gt) {
    check_inputs(pred, gt);
    const FitData data{pred, gt};
    LogisticParams conventional;
    conventional.beta = {*std::max_element(gt.begin(), gt.end()), *std::min_element(gt.begin(), gt.end()),
                         median(std::vector<double>(pred.begin(), pred.end())), std::max(stddev(pred), 1e-6)};

    // Centre slope of the logistic is (b1 - b2) / (4 |b4|); with |b4| large relative to
    // the prediction spread the curve is the identity map to within rounding.
    const double lo = *std::min_element(pred.begin(), pred.end());
    const double hi = *std::max_element(pred.begin(), pred.end());
    const double mid = 0.5 * (lo + hi);
    const double spread = std::max(hi - lo, 1e-6);
    const double wide = 1e3 * spread;
    LogisticParams identity;
    identity.beta = {mid + 2.0 * wide, mid - 2.0 * wide, mid, wide};

    const auto a = simplex_fit(conventional, data);
    const auto b = simplex_fit(identity, data);
    return sse(a, data) <= sse(b, data) ? a : b;
}

PlccRmse plcc_rmse(std::span<const double> pred, std::span<const double> gt, bool fitted) {
    check_inputs(pred, gt);
    PlccRmse out;
    if (!fitted) {
        const auto c = pearson(pred, gt);
        out.plcc = c.value;
        out.degenerate = c.degenerate;
        out.rmse = rmse(pred, gt);
        return out;
    }
    const auto fit = fit_logistic(pred, gt);
    std::vector<double> mapped(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) mapped[i] = fit(pred[i]);
    const auto c = pearson(mapped, gt);
    out.plcc = c.value;
    out.degenerate = c.degenerate;
    out.rmse = rmse(mapped, gt);
    out.fit = fit;
    return out;
}

MetricReport compute_metrics(std::span<const double> pred, std::span<const double> gt) {
    MetricReport r;
    const auto s = srocc(pred, gt);
    const auto k = krocc(pred, gt);
    const auto raw = plcc_rmse(pred, gt, false);
    const auto fitted = plcc_rmse(pred, gt, true);
    r.srocc = s.value;
    r.krocc = k.value;
    r.plcc_raw = raw.plcc;
    r.rmse_raw = raw.rmse;
    r.plcc_fitted = fitted.plcc;
    r.rmse_fitted = fitted.rmse;
    r.n = pred.size();
    if (fitted.fit) r.fit_params = fitted.fit->beta;
    r.degenerate = s.degenerate || k.degenerate || raw.degenerate || fitted.degenerate;
    return r;
}

std::string MetricReport::to_json() const {
    nlohmann::ordered_json j;
    j["srocc"] = srocc;
    j["plcc_raw"] = plcc_raw;
    j["plcc_fitted"] = plcc_fitted;
    j["krocc"] = krocc;
    j["rmse_raw"] = rmse_raw;
    j["rmse_fitted"] = rmse_fitted;
    j["n"] = n;
    j["fit_params"] = fit_params ? nlohmann::ordered_json(*fit_params) : nlohmann::ordered_json(nullptr);
    j["degenerate"] = degenerate;
    return j.dump(2);
}

std::string MetricReport::csv_header() { return "n,srocc,plcc_raw,plcc_fitted,krocc,rmse_raw,rmse_fitted"; }

std::string MetricReport::to_csv_row() const {
    return std::to_string(n) + ',' + io::format_double(srocc) + ',' + io::format_double(plcc_raw) + ',' +
           io::format_double(plcc_fitted) + ',' + io::format_double(krocc) + ',' + io::format_double(rmse_raw) +
           ',' + io::format_double(rmse_fitted);
}

}  // namespace pcqa
