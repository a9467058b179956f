#ifndef RESPRED_MLRI_HPP
#define RESPRED_MLRI_HPP

#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "respred/dataset.hpp"

namespace respred::mlri {

struct Underdetermined : std::runtime_error {
    std::size_t rows, cols;
    Underdetermined(std::size_t r, std::size_t c);
};

struct DimensionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Multiple linear regression with pairwise interactions: an intercept, one
// coefficient per covariate and one per unordered covariate pair.
struct RegressionModel {
    double intercept = 0.0;
    std::vector<double> main_coeffs;        // size m
    std::vector<double> interaction_coeffs; // size m(m-1)/2, pairs (j,l) j<l
    std::vector<std::size_t> subset;        // covariate indices used
    bool rank_deficient = false; // minimum-norm solution was taken

    std::size_t coefficient_count() const {
        return 1 + main_coeffs.size() + interaction_coeffs.size();
    }
};

// Columns: intercept, X_1..X_m, then X_j*X_l for j<l in lexicographic pair
// order.
Eigen::MatrixXd build_design_matrix(const Eigen::MatrixXd& x);

// Least-squares fit of the targets on the design matrix over the training
// rows. Rank-deficient systems get the minimum-norm solution and are flagged.
RegressionModel fit(const data::NormalizedDataset& ds,
                    std::span<const std::size_t> subset,
                    data::IndexRange train_range);

double predict_delta(const RegressionModel& model, std::span<const double> row);

// Predicted changes for every target index in the range.
std::vector<double> predict_range(const RegressionModel& model,
                                  const data::NormalizedDataset& ds,
                                  data::IndexRange range);

} // namespace respred::mlri

#endif // RESPRED_MLRI_HPP
