#ifndef RESPRED_CFS_HPP
#define RESPRED_CFS_HPP

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "respred/dataset.hpp"

namespace respred::cfs {

struct LengthMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DuplicateIndex : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IndexOutOfRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Whether correlation magnitudes enter the merit function as |r| (standard
// CFS) or signed r.
enum class CorrelationSign { absolute, signed_r };

// Product-moment correlation; defined as 0 when either input is constant.
double pearson(std::span<const double> x, std::span<const double> y);

struct MeritScore {
    std::vector<std::size_t> subset; // covariate indices, selection order
    std::size_t k = 0;
    double r_co_bar = 0.0; // mean covariate-target correlation
    double r_cc_bar = 0.0; // mean pairwise covariate correlation
    double merit = 0.0;
};

// The merit formula itself: k*r_co / sqrt(k + k(k-1)*r_cc).
double merit_value(std::size_t k, double r_co_bar, double r_cc_bar);

MeritScore merit(const data::NormalizedDataset& ds,
                 std::span<const std::size_t> subset,
                 CorrelationSign sign = CorrelationSign::absolute);

enum class StopReason { merit_drop, max_covariates };

struct SubsetRanking {
    std::vector<MeritScore> chain;        // accepted prefix chain
    StopReason stop_reason = StopReason::max_covariates;
    // Best extension that dropped the merit by more than epsilon; kept so
    // reports can show the disregarded subset.
    std::optional<MeritScore> rejected;
};

// Greedy forward search: grow the subset by the covariate that maximizes the
// merit, stopping when the best extension drops the score by more than
// epsilon or the subset reaches max_k. A drop of at most epsilon is kept.
SubsetRanking forward_select(const data::NormalizedDataset& ds,
                             std::size_t max_k, double epsilon = 0.01,
                             CorrelationSign sign = CorrelationSign::absolute);

} // namespace respred::cfs

#endif // RESPRED_CFS_HPP
