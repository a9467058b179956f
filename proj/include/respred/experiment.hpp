#ifndef RESPRED_EXPERIMENT_HPP
#define RESPRED_EXPERIMENT_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "respred/cfs.hpp"
#include "respred/dataset.hpp"
#include "respred/metrics.hpp"
#include "respred/neuralnet.hpp"
#include "respred/resilience.hpp"

namespace respred::sweep {

struct MissingSplitPair : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ModelKind { mlri, ann, rnn, lstm };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

// The full experimental grid: candidate subsets (stage one of the hybrid
// selection), model kinds, neuron counts, learning rates, splits and
// repetitions. MLRI runs ignore neurons/learning rate and collapse the
// repetitions since the fit is deterministic.
struct SweepPlan {
    std::vector<std::vector<std::size_t>> subsets; // 0-based covariate indices
    std::vector<ModelKind> kinds;
    std::vector<std::size_t> neurons;
    std::vector<double> learning_rates;
    std::vector<data::SplitSpec> splits;
    int repetitions = 50;
    std::uint64_t base_seed = 0;
    nn::LstmWeightMode lstm_mode = nn::LstmWeightMode::standard;
    curve::ReconMode recon_mode = curve::ReconMode::onestep;

    static SweepPlan defaults(); // paper protocol, subsets left to stage one
    void validate() const;
};

struct Coordinates {
    std::vector<std::size_t> subset;
    ModelKind kind = ModelKind::mlri;
    std::size_t neurons = 0;      // 0 for MLRI
    double learning_rate = 0.0;   // 0 for MLRI
    std::string split_name;
    int repetition = 0;
};

struct RunRecord {
    Coordinates coords;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string failure_reason;
    metrics::FitReport report;
};

// Mean report over the successful repetitions of one grid point.
struct AggregateRow {
    std::vector<std::size_t> subset;
    ModelKind kind = ModelKind::mlri;
    std::size_t neurons = 0;
    double learning_rate = 0.0;
    std::string split_name;
    metrics::FitReport mean_report;
    double mean_epochs = 0.0;
    int successes = 0;
    int failures = 0;

    bool valid() const { return successes > 0; }
};

// Every run is reproducible in isolation: its seed is a pure function of the
// base seed and its coordinates.
std::uint64_t derive_seed(std::uint64_t base_seed, const Coordinates& coords);

// Execute one grid point. Throws on model failure (e.g. NonFiniteLoss).
metrics::FitReport run_single(const data::NormalizedDataset& ds,
                              const Coordinates& coords, const SweepPlan& plan);

// All runs in deterministic coordinate order; results are independent of the
// worker count.
std::vector<RunRecord> run_records(const data::NormalizedDataset& ds,
                                   const SweepPlan& plan, unsigned workers = 1);

std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& records);

std::vector<AggregateRow> run_sweep(const data::NormalizedDataset& ds,
                                    const SweepPlan& plan, unsigned workers = 1);

// "Most similar results in both splits": maximize the mean adjusted R^2
// across the two splits minus similarity_weight times the gap between them.
struct SelectionRule {
    double similarity_weight = 1.0;
};

struct ChosenModel {
    ModelKind kind = ModelKind::mlri;
    std::vector<std::size_t> subset;
    std::size_t neurons = 0;
    double learning_rate = 0.0;
    double score = 0.0;
    std::vector<AggregateRow> rows; // one per split, plan order
};

std::vector<ChosenModel> select_best(const std::vector<AggregateRow>& rows,
                                     SelectionRule rule = {});

// Report bundle: aggregates.csv, report.json, one fitted-curve CSV per chosen
// model and, when a ranking is supplied, the feature-selection chain JSON.
void emit_report(const std::vector<AggregateRow>& rows,
                 const std::vector<ChosenModel>& chosen,
                 const std::optional<cfs::SubsetRanking>& ranking,
                 const data::NormalizedDataset& ds, const SweepPlan& plan,
                 const std::string& out_dir);

// Raw run records round-trip, so `report` can re-aggregate without re-running.
void write_runs_json(const std::vector<RunRecord>& records,
                     const SweepPlan& plan, const std::string& path);
std::pair<std::vector<RunRecord>, SweepPlan>
read_runs_json(const std::string& path);

// Plan (de)serialization for --config files; subsets are 1-based in JSON.
SweepPlan plan_from_json_file(const std::string& path, SweepPlan base);

} // namespace respred::sweep

#endif // RESPRED_EXPERIMENT_HPP
