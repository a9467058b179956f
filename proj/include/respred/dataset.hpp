#ifndef RESPRED_DATASET_HPP
#define RESPRED_DATASET_HPP

#include <cstddef>
#include <istream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace respred::data {

// ---------------------------------------------------------------- errors

struct CsvError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MissingValue : CsvError {
    std::size_t row, col; // 1-based, as a user would count them
    MissingValue(std::size_t r, std::size_t c);
};

struct RaggedRow : CsvError {
    std::size_t row;
    explicit RaggedRow(std::size_t r);
};

struct DuplicateCovariateName : CsvError {
    std::string name;
    explicit DuplicateCovariateName(std::string n);
};

struct TooFewRows : CsvError {
    std::size_t rows;
    explicit TooFewRows(std::size_t r);
};

struct SegmentTooSmall : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- types

// Raw time series exactly as read from disk: a time label column, a
// performance column and m covariate columns. Covariates are stored
// column-major so per-column passes (normalization, correlation) are cheap.
struct RawTable {
    std::vector<std::string> time_labels;            // n
    std::vector<double> performance;                 // n
    std::vector<std::vector<double>> covariates;     // m columns of length n
    std::vector<std::string> covariate_names;        // m

    std::size_t rows() const { return performance.size(); }
    std::size_t n_covariates() const { return covariates.size(); }
};

// Max-normalized series plus the first-difference targets. Immutable after
// construction; the stored maxima allow reports to show raw units again.
struct NormalizedDataset {
    std::vector<std::string> time_labels;            // n
    std::vector<double> performance;                 // n, each in [0,1]
    std::vector<std::vector<double>> covariates;     // m columns of length n
    std::vector<double> delta_p;                     // n-1 targets
    std::vector<std::string> covariate_names;        // m
    double performance_max = 1.0;
    std::vector<double> covariate_max;               // m

    std::size_t n_rows() const { return performance.size(); }
    std::size_t n_targets() const { return delta_p.size(); }
    std::size_t n_covariates() const { return covariates.size(); }

    // Covariate value aligned with target t: delta_p[t] is the change at
    // time step t+1 and pairs with the covariate row of the same step.
    double covariate_at_target(std::size_t j, std::size_t t) const {
        return covariates[j][t + 1];
    }

    // Rows of the selected covariate columns aligned with the targets,
    // i.e. one row of length subset.size() per delta_p entry.
    std::vector<std::vector<double>>
    target_rows(const std::vector<std::size_t>& subset) const;
};

// Half-open interval over target indices.
struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    bool empty() const { return begin == end; }
    bool contains(std::size_t i) const { return i >= begin && i < end; }
};

enum class ModelFamily { regression, network };

struct SplitSpec {
    double train_frac = 0.6;
    double val_frac = 0.2;
    double test_frac = 0.2;
    std::string name = "60-20-20";

    static SplitSpec preset(std::string_view name); // "60-20-20" / "70-15-15"
    void validate() const;
};

// Chronological split over target-index space: train < val < test.
struct SplitView {
    IndexRange train, val, test;
    std::size_t n_targets = 0; // total predicted points
    std::size_t l = 0;         // holdout length after training
    std::size_t l_m = 0;       // test-range length used by PMSE
};

// ---------------------------------------------------------------- operations

// CSV schema: header row; column 1 time label, column 2 performance,
// columns 3..m+2 covariates. UTF-8, '.' decimal separator.
RawTable load_csv(const std::string& path);
RawTable parse_csv(std::istream& in);
void write_csv(const RawTable& table, const std::string& path);

NormalizedDataset normalize(const RawTable& raw);

SplitView split(const NormalizedDataset& ds, const SplitSpec& spec,
                ModelFamily family);

} // namespace respred::data

#endif // RESPRED_DATASET_HPP
