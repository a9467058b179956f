#include "respred/mlri.hpp"

#include <set>

namespace respred::mlri {

Underdetermined::Underdetermined(std::size_t r, std::size_t c)
    : std::runtime_error("underdetermined fit: " + std::to_string(r) +
                         " training rows for " + std::to_string(c) +
                         " coefficients"),
      rows(r), cols(c) {}

Eigen::MatrixXd build_design_matrix(const Eigen::MatrixXd& x) {
    const Eigen::Index n = x.rows();
    const Eigen::Index m = x.cols();
    if (m < 1) throw DimensionMismatch("design matrix needs at least 1 covariate");

    Eigen::MatrixXd design(n, 1 + m + m * (m - 1) / 2);
    design.col(0).setOnes();
    design.middleCols(1, m) = x;
    Eigen::Index c = 1 + m;
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index l = j + 1; l < m; ++l)
            design.col(c++) = x.col(j).cwiseProduct(x.col(l));
    return design;
}

RegressionModel fit(const data::NormalizedDataset& ds,
                    std::span<const std::size_t> subset,
                    data::IndexRange train_range) {
    if (subset.empty()) throw DimensionMismatch("fit: empty covariate subset");
    std::set<std::size_t> seen;
    for (std::size_t j : subset) {
        if (j >= ds.n_covariates())
            throw DimensionMismatch("fit: covariate index " + std::to_string(j) +
                                    " out of range");
        if (!seen.insert(j).second)
            throw DimensionMismatch("fit: covariate index repeated");
    }
    if (train_range.end > ds.n_targets() || train_range.begin >= train_range.end)
        throw DimensionMismatch("fit: bad training range");

    const std::size_t m = subset.size();
    const std::size_t rows = train_range.size();

    Eigen::MatrixXd x(rows, m);
    Eigen::VectorXd y(rows);
    for (std::size_t t = train_range.begin; t < train_range.end; ++t) {
        for (std::size_t j = 0; j < m; ++j)
            x(t - train_range.begin, j) = ds.covariate_at_target(subset[j], t);
        y(t - train_range.begin) = ds.delta_p[t];
    }

    Eigen::MatrixXd design = build_design_matrix(x);
    if (design.rows() < design.cols())
        throw Underdetermined(design.rows(), design.cols());

    // Pivoted orthogonal decomposition: the usual least-squares optimum, and
    // the minimum-norm solution when interaction columns are collinear.
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
    Eigen::VectorXd beta = cod.solve(y);

    RegressionModel model;
    model.subset.assign(subset.begin(), subset.end());
    model.rank_deficient = cod.rank() < design.cols();
    model.intercept = beta(0);
    model.main_coeffs.assign(beta.data() + 1, beta.data() + 1 + m);
    model.interaction_coeffs.assign(beta.data() + 1 + m,
                                    beta.data() + design.cols());
    return model;
}

double predict_delta(const RegressionModel& model, std::span<const double> row) {
    const std::size_t m = model.main_coeffs.size();
    if (row.size() != m)
        throw DimensionMismatch("predict_delta: row has " +
                                std::to_string(row.size()) + " values, model has " +
                                std::to_string(m) + " covariates");
    double delta = model.intercept;
    for (std::size_t j = 0; j < m; ++j) delta += model.main_coeffs[j] * row[j];
    std::size_t c = 0;
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t l = j + 1; l < m; ++l)
            delta += model.interaction_coeffs[c++] * row[j] * row[l];
    return delta;
}

std::vector<double> predict_range(const RegressionModel& model,
                                  const data::NormalizedDataset& ds,
                                  data::IndexRange range) {
    if (range.end > ds.n_targets())
        throw DimensionMismatch("predict_range: range exceeds targets");
    std::vector<double> out;
    out.reserve(range.size());
    std::vector<double> row(model.subset.size());
    for (std::size_t t = range.begin; t < range.end; ++t) {
        for (std::size_t j = 0; j < model.subset.size(); ++j)
            row[j] = ds.covariate_at_target(model.subset[j], t);
        out.push_back(predict_delta(model, row));
    }
    return out;
}

} // namespace respred::mlri
