#include "respred/cfs.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace respred::cfs {

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw LengthMismatch("pearson: series lengths differ (" +
                             std::to_string(x.size()) + " vs " +
                             std::to_string(y.size()) + ")");
    if (x.size() < 2)
        throw LengthMismatch("pearson: need at least 2 points");

    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;

    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0; // constant input convention
    return sxy / std::sqrt(sxx * syy);
}

double merit_value(std::size_t k, double r_co_bar, double r_cc_bar) {
    const double kd = static_cast<double>(k);
    return kd * r_co_bar / std::sqrt(kd + kd * (kd - 1.0) * r_cc_bar);
}

namespace {

// Covariate column aligned with the targets: delta_p[t] pairs with the
// covariate row at time step t+1.
std::vector<double> aligned_column(const data::NormalizedDataset& ds,
                                   std::size_t j) {
    std::vector<double> col(ds.n_targets());
    for (std::size_t t = 0; t < ds.n_targets(); ++t)
        col[t] = ds.covariate_at_target(j, t);
    return col;
}

double oriented(double r, CorrelationSign sign) {
    return sign == CorrelationSign::absolute ? std::abs(r) : r;
}

} // namespace

MeritScore merit(const data::NormalizedDataset& ds,
                 std::span<const std::size_t> subset, CorrelationSign sign) {
    if (subset.empty()) throw IndexOutOfRange("merit: empty subset");
    std::set<std::size_t> seen;
    for (std::size_t j : subset) {
        if (j >= ds.n_covariates())
            throw IndexOutOfRange("merit: covariate index " + std::to_string(j) +
                                  " out of range (m=" +
                                  std::to_string(ds.n_covariates()) + ")");
        if (!seen.insert(j).second)
            throw DuplicateIndex("merit: covariate index " + std::to_string(j) +
                                 " repeated");
    }

    MeritScore score;
    score.subset.assign(subset.begin(), subset.end());
    score.k = subset.size();

    std::vector<std::vector<double>> cols;
    cols.reserve(subset.size());
    for (std::size_t j : subset) cols.push_back(aligned_column(ds, j));

    double r_co_sum = 0.0;
    for (const auto& col : cols)
        r_co_sum += oriented(pearson(col, ds.delta_p), sign);
    score.r_co_bar = r_co_sum / static_cast<double>(score.k);

    if (score.k > 1) {
        double r_cc_sum = 0.0;
        std::size_t pairs = 0;
        for (std::size_t a = 0; a < cols.size(); ++a)
            for (std::size_t b = a + 1; b < cols.size(); ++b) {
                r_cc_sum += oriented(pearson(cols[a], cols[b]), sign);
                ++pairs;
            }
        score.r_cc_bar = r_cc_sum / static_cast<double>(pairs);
    }

    score.merit = merit_value(score.k, score.r_co_bar, score.r_cc_bar);
    return score;
}

SubsetRanking forward_select(const data::NormalizedDataset& ds,
                             std::size_t max_k, double epsilon,
                             CorrelationSign sign) {
    const std::size_t m = ds.n_covariates();
    if (m == 0) throw IndexOutOfRange("forward_select: dataset has no covariates");
    if (max_k == 0 || max_k > m)
        throw IndexOutOfRange("forward_select: max_k must be in [1, m]");

    SubsetRanking ranking;
    std::vector<std::size_t> current;
    std::vector<bool> used(m, false);

    while (true) {
        // Best extension of the current subset; ties go to the lowest index.
        std::optional<MeritScore> best;
        for (std::size_t j = 0; j < m; ++j) {
            if (used[j]) continue;
            std::vector<std::size_t> candidate = current;
            candidate.push_back(j);
            MeritScore s = merit(ds, candidate, sign);
            if (!best || s.merit > best->merit) best = std::move(s);
        }

        if (!ranking.chain.empty() &&
            best->merit < ranking.chain.back().merit - epsilon) {
            ranking.stop_reason = StopReason::merit_drop;
            ranking.rejected = std::move(best);
            break;
        }

        used[best->subset.back()] = true;
        current = best->subset;
        ranking.chain.push_back(std::move(*best));

        if (ranking.chain.back().k == max_k) {
            ranking.stop_reason = StopReason::max_covariates;
            break;
        }
    }
    return ranking;
}

} // namespace respred::cfs
