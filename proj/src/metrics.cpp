#include "respred/metrics.hpp"

#include <cmath>

#include <json.hpp>

namespace respred::metrics {

namespace {

void check_lengths(std::span<const double> pred, std::span<const double> actual,
                   data::IndexRange range) {
    if (pred.size() != actual.size())
        throw std::invalid_argument("prediction/actual length mismatch");
    if (range.end > pred.size() || range.begin > range.end)
        throw std::invalid_argument("range exceeds series length");
}

} // namespace

double mse_over(std::span<const double> pred, std::span<const double> actual,
                data::IndexRange range) {
    check_lengths(pred, actual, range);
    if (range.empty()) throw EmptyRange("MSE over an empty range");
    double sum = 0.0;
    for (std::size_t i = range.begin; i < range.end; ++i) {
        double d = pred[i] - actual[i];
        sum += d * d;
    }
    return sum / static_cast<double>(range.size());
}

double mape(std::span<const double> pred, std::span<const double> actual,
            data::IndexRange range) {
    check_lengths(pred, actual, range);
    if (range.empty()) throw EmptyRange("MAPE over an empty range");
    double sum = 0.0;
    for (std::size_t i = range.begin; i < range.end; ++i) {
        if (actual[i] == 0.0)
            throw ZeroActualValue("actual value is zero at index " +
                                  std::to_string(i));
        sum += std::abs((actual[i] - pred[i]) / actual[i]);
    }
    return 100.0 * sum / static_cast<double>(range.size());
}

double adj_r2(std::span<const double> pred, std::span<const double> actual,
              std::size_t m) {
    if (pred.size() != actual.size())
        throw std::invalid_argument("prediction/actual length mismatch");
    const std::size_t n = actual.size();
    if (n <= m + 1)
        throw DegenerateDenominator("adjusted R^2 needs n > m+1 (n=" +
                                    std::to_string(n) + ", m=" + std::to_string(m) + ")");

    double mean = 0.0;
    for (double v : actual) mean += v;
    mean /= static_cast<double>(n);

    double ssy = 0.0, sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ssy += (actual[i] - mean) * (actual[i] - mean);
        sse += (pred[i] - actual[i]) * (pred[i] - actual[i]);
    }
    if (ssy == 0.0)
        throw DegenerateDenominator("adjusted R^2 undefined for constant actuals");

    const double nd = static_cast<double>(n);
    const double md = static_cast<double>(m);
    return 1.0 - (1.0 - (ssy - sse) / ssy) * ((nd - 1.0) / (nd - md - 1.0));
}

FitReport evaluate(std::span<const double> pred, std::span<const double> actual,
                   const data::SplitView& view, std::size_t m_covariates,
                   std::optional<int> epochs_run) {
    FitReport report;
    data::IndexRange full{0, view.n_targets};
    report.pmse = mse_over(pred, actual, view.test);
    if (!view.val.empty()) report.vmse = mse_over(pred, actual, view.val);
    report.mse = mse_over(pred, actual, full);
    report.mape_percent = mape(pred, actual, full);
    report.adj_r2 = adj_r2(pred, actual, m_covariates);
    report.n = view.n_targets;
    report.l = view.l;
    report.l_m = view.l_m;
    report.m = m_covariates;
    report.epochs_run = epochs_run;
    return report;
}

std::string FitReport::to_json() const {
    nlohmann::json j;
    j["pmse"] = pmse;
    if (vmse) j["vmse"] = *vmse;
    j["mse"] = mse;
    j["mape_percent"] = mape_percent;
    j["adj_r2"] = adj_r2;
    j["n"] = n;
    j["l"] = l;
    j["l_m"] = l_m;
    j["m"] = m;
    if (epochs_run) j["epochs_run"] = *epochs_run;
    return j.dump();
}

} // namespace respred::metrics
