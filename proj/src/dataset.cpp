#include "respred/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace respred::data {

MissingValue::MissingValue(std::size_t r, std::size_t c)
    : CsvError("missing value at row " + std::to_string(r) + ", column " +
               std::to_string(c)),
      row(r), col(c) {}

RaggedRow::RaggedRow(std::size_t r)
    : CsvError("row " + std::to_string(r) +
               " has a different number of fields than the header"),
      row(r) {}

DuplicateCovariateName::DuplicateCovariateName(std::string n)
    : CsvError("duplicate covariate name \"" + n + "\""), name(std::move(n)) {}

TooFewRows::TooFewRows(std::size_t r)
    : CsvError("need at least 3 data rows, got " + std::to_string(r)),
      rows(r) {}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() &&
           (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        std::string_view field{line.data() + start,
                               (comma == std::string::npos ? line.size() : comma) - start};
        fields.emplace_back(trim(field));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return fields;
}

double parse_number(const std::string& field, std::size_t row, std::size_t col) {
    if (field.empty()) throw MissingValue(row, col);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw CsvError("unparseable number \"" + field + "\" at row " +
                       std::to_string(row) + ", column " + std::to_string(col));
    if (!std::isfinite(value))
        throw CsvError("non-finite value at row " + std::to_string(row) +
                       ", column " + std::to_string(col));
    return value;
}

} // namespace

RawTable parse_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw CsvError("empty file");
    std::vector<std::string> header = split_fields(line);
    if (header.size() < 3)
        throw CsvError("need at least 3 columns (time, performance, covariate), got " +
                       std::to_string(header.size()));

    const std::size_t m = header.size() - 2;
    RawTable table;
    table.covariate_names.assign(header.begin() + 2, header.end());
    table.covariates.assign(m, {});

    std::set<std::string> seen;
    for (const auto& name : table.covariate_names)
        if (!seen.insert(name).second) throw DuplicateCovariateName(name);

    std::size_t row = 1; // header is row 1
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue; // ignore blank lines
        std::vector<std::string> fields = split_fields(line);
        if (fields.size() != header.size()) throw RaggedRow(row);
        if (fields[0].empty()) throw MissingValue(row, 1);
        table.time_labels.push_back(fields[0]);
        table.performance.push_back(parse_number(fields[1], row, 2));
        for (std::size_t j = 0; j < m; ++j)
            table.covariates[j].push_back(parse_number(fields[j + 2], row, j + 3));
    }

    if (table.rows() < 3) throw TooFewRows(table.rows());
    return table;
}

RawTable load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open \"" + path + "\"");
    return parse_csv(in);
}

void write_csv(const RawTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw CsvError("cannot write \"" + path + "\"");
    out << "time,performance";
    for (const auto& name : table.covariate_names) out << ',' << name;
    out << '\n';
    out.precision(17);
    for (std::size_t i = 0; i < table.rows(); ++i) {
        out << table.time_labels[i] << ',' << table.performance[i];
        for (std::size_t j = 0; j < table.n_covariates(); ++j)
            out << ',' << table.covariates[j][i];
        out << '\n';
    }
}

NormalizedDataset normalize(const RawTable& raw) {
    if (raw.rows() < 3) throw TooFewRows(raw.rows());

    NormalizedDataset ds;
    ds.time_labels = raw.time_labels;
    ds.covariate_names = raw.covariate_names;

    auto column_max = [](const std::vector<double>& col) {
        return *std::max_element(col.begin(), col.end());
    };

    ds.performance_max = column_max(raw.performance);
    ds.performance = raw.performance;
    if (ds.performance_max != 0.0)
        for (double& v : ds.performance) v /= ds.performance_max;

    ds.covariates.reserve(raw.n_covariates());
    ds.covariate_max.reserve(raw.n_covariates());
    for (const auto& col : raw.covariates) {
        double mx = column_max(col);
        ds.covariate_max.push_back(mx);
        std::vector<double> scaled = col;
        // A column whose max is 0 passes through unchanged; dividing would
        // produce NaN and CFS ranks such columns last anyway.
        if (mx != 0.0)
            for (double& v : scaled) v /= mx;
        ds.covariates.push_back(std::move(scaled));
    }

    ds.delta_p.resize(ds.n_rows() - 1);
    for (std::size_t i = 1; i < ds.n_rows(); ++i)
        ds.delta_p[i - 1] = ds.performance[i] - ds.performance[i - 1];

    return ds;
}

std::vector<std::vector<double>>
NormalizedDataset::target_rows(const std::vector<std::size_t>& subset) const {
    std::vector<std::vector<double>> rows(n_targets(),
                                          std::vector<double>(subset.size()));
    for (std::size_t t = 0; t < n_targets(); ++t)
        for (std::size_t j = 0; j < subset.size(); ++j)
            rows[t][j] = covariate_at_target(subset[j], t);
    return rows;
}

SplitSpec SplitSpec::preset(std::string_view name) {
    if (name == "60-20-20") return {0.6, 0.2, 0.2, "60-20-20"};
    if (name == "70-15-15") return {0.7, 0.15, 0.15, "70-15-15"};
    // Any "A-B-C" percentage triple is also accepted.
    double pct[3];
    std::size_t start = 0;
    for (int i = 0; i < 3; ++i) {
        std::size_t dash = name.find('-', start);
        std::string_view field =
            name.substr(start, dash == std::string_view::npos ? std::string_view::npos
                                                              : dash - start);
        auto [ptr, ec] =
            std::from_chars(field.data(), field.data() + field.size(), pct[i]);
        bool last = (i == 2);
        if (ec != std::errc{} || ptr != field.data() + field.size() ||
            (last ? dash != std::string_view::npos
                  : dash == std::string_view::npos))
            throw std::invalid_argument("unknown split preset \"" +
                                        std::string(name) +
                                        "\" (expected e.g. 60-20-20)");
        start = dash + 1;
    }
    SplitSpec spec{pct[0] / 100.0, pct[1] / 100.0, pct[2] / 100.0,
                   std::string(name)};
    spec.validate();
    return spec;
}

void SplitSpec::validate() const {
    if (train_frac <= 0.0 || val_frac <= 0.0 || test_frac <= 0.0)
        throw std::invalid_argument("split fractions must be positive");
    if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
        throw std::invalid_argument("split fractions must sum to 1");
}

SplitView split(const NormalizedDataset& ds, const SplitSpec& spec,
                ModelFamily family) {
    spec.validate();
    const std::size_t n = ds.n_targets();

    SplitView view;
    view.n_targets = n;

    // The nudge keeps the floor exact when frac*n is a whole number that
    // rounds just below itself in floating point (e.g. 0.6*35).
    const std::size_t train_len = static_cast<std::size_t>(
        std::floor(spec.train_frac * static_cast<double>(n) + 1e-9));
    view.l = n - train_len;
    view.train = {0, train_len};

    if (family == ModelFamily::network) {
        const std::size_t val_len = (view.l + 1) / 2; // ceil(l/2)
        const std::size_t test_len = view.l / 2;      // floor(l/2)
        view.val = {train_len, train_len + val_len};
        view.test = {train_len + val_len, n};
        view.l_m = test_len;
        if (train_len < 2 || val_len < 1 || test_len < 1)
            throw SegmentTooSmall("network split needs train>=2, val>=1, test>=1 (n=" +
                                  std::to_string(n) + ", " + spec.name + ")");
    } else {
        view.val = {train_len, train_len};
        view.test = {train_len, n};
        view.l_m = view.l;
        if (train_len < 2 || view.l < 1)
            throw SegmentTooSmall("regression split needs train>=2, test>=1 (n=" +
                                  std::to_string(n) + ", " + spec.name + ")");
    }
    return view;
}

} // namespace respred::data
