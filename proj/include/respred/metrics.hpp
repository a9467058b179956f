#ifndef RESPRED_METRICS_HPP
#define RESPRED_METRICS_HPP

#include <optional>
#include <span>
#include <stdexcept>

#include "respred/dataset.hpp"

namespace respred::metrics {

struct EmptyRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ZeroActualValue : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateDenominator : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// All goodness-of-fit numbers for one fitted model, over reconstructed
// performance. vmse exists only for models with a validation segment,
// epochs_run only for trained networks.
struct FitReport {
    double pmse = 0.0;
    std::optional<double> vmse;
    double mse = 0.0;
    double mape_percent = 0.0;
    double adj_r2 = 0.0;
    std::size_t n = 0;   // number of predicted points (delta-P targets)
    std::size_t l = 0;   // holdout length
    std::size_t l_m = 0; // test-range length
    std::size_t m = 0;   // covariates in the model
    std::optional<int> epochs_run;

    std::string to_json() const; // field names fixed: pmse, vmse, mse,
                                 // mape_percent, adj_r2, n, l, l_m, m,
                                 // epochs_run
};

// Mean squared deviation over a range. PMSE, VMSE and MSE are this
// function applied to the test, validation and full ranges.
double mse_over(std::span<const double> pred, std::span<const double> actual,
                data::IndexRange range);

// Mean absolute percentage error (in percent) over a range; the headline
// figure uses the full range.
double mape(std::span<const double> pred, std::span<const double> actual,
            data::IndexRange range);

// Adjusted coefficient of determination with m covariates; the naive
// predictor is the sample mean of the actual values.
double adj_r2(std::span<const double> pred, std::span<const double> actual,
              std::size_t m);

// Assemble the full report for aligned prediction/actual series in target
// space (index t corresponds to time step t+1).
FitReport evaluate(std::span<const double> pred, std::span<const double> actual,
                   const data::SplitView& view, std::size_t m_covariates,
                   std::optional<int> epochs_run = std::nullopt);

} // namespace respred::metrics

#endif // RESPRED_METRICS_HPP
