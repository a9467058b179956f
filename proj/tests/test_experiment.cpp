#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "respred/experiment.hpp"
#include "respred/resilience.hpp"

using namespace respred;
namespace fs = std::filesystem;

namespace {

data::NormalizedDataset test_dataset() {
    curve::SyntheticCurveSpec spec;
    spec.nominal_level = 1.0;
    spec.trough_level = 0.6;
    spec.recovered_level = 0.95;
    spec.t_h = 5;
    spec.t_d = 12;
    spec.t_r = 24;
    spec.noise_std = 0.02;
    spec.covariate_coupling = {1.0, 1.0, 0.4};
    spec.seed = 77;
    return curve::generate_synthetic(spec, 36);
}

sweep::SweepPlan tiny_plan() {
    sweep::SweepPlan plan;
    plan.subsets = {{0, 1}};
    plan.kinds = {sweep::ModelKind::ann};
    plan.neurons = {3};
    plan.learning_rates = {0.01};
    plan.splits = {data::SplitSpec::preset("60-20-20")};
    plan.repetitions = 2;
    plan.base_seed = 5;
    return plan;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name)
        : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("run counting: repetitions expand, aggregation collapses") {
    auto ds = test_dataset();
    auto plan = tiny_plan();
    auto records = sweep::run_records(ds, plan);
    CHECK(records.size() == 2);
    auto rows = sweep::aggregate(records);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].successes == 2);
    CHECK(rows[0].failures == 0);
}

TEST_CASE("mlri repetitions collapse to one run per subset and split") {
    auto ds = test_dataset();
    auto plan = tiny_plan();
    plan.kinds = {sweep::ModelKind::mlri};
    plan.repetitions = 50;
    plan.splits = {data::SplitSpec::preset("60-20-20"),
                   data::SplitSpec::preset("70-15-15")};
    auto records = sweep::run_records(ds, plan);
    CHECK(records.size() == 2); // one per split
}

TEST_CASE("derived seeds are deterministic and coordinate-sensitive") {
    sweep::Coordinates a{{0, 1}, sweep::ModelKind::lstm, 7, 0.01, "60-20-20", 3};
    sweep::Coordinates b = a;
    CHECK(sweep::derive_seed(42, a) == sweep::derive_seed(42, b));
    b.repetition = 4;
    CHECK(sweep::derive_seed(42, a) != sweep::derive_seed(42, b));
    sweep::Coordinates c = a;
    c.neurons = 8;
    CHECK(sweep::derive_seed(42, a) != sweep::derive_seed(42, c));
    CHECK(sweep::derive_seed(42, a) != sweep::derive_seed(43, a));
}

TEST_CASE("identical plans give identical aggregates across worker counts") {
    auto ds = test_dataset();
    auto plan = tiny_plan();
    plan.kinds = {sweep::ModelKind::mlri, sweep::ModelKind::ann,
                  sweep::ModelKind::lstm};
    plan.repetitions = 3;
    auto one = sweep::run_sweep(ds, plan, 1);
    auto four = sweep::run_sweep(ds, plan, 4);
    REQUIRE(one.size() == four.size());
    for (std::size_t i = 0; i < one.size(); ++i) {
        CHECK(one[i].split_name == four[i].split_name);
        CHECK(one[i].mean_report.pmse == four[i].mean_report.pmse);
        CHECK(one[i].mean_report.adj_r2 == four[i].mean_report.adj_r2);
        CHECK(one[i].mean_epochs == four[i].mean_epochs);
    }
}

TEST_CASE("aggregate means equal a brute-force recomputation") {
    auto ds = test_dataset();
    auto plan = tiny_plan();
    plan.repetitions = 5;
    auto records = sweep::run_records(ds, plan);
    auto rows = sweep::aggregate(records);
    REQUIRE(rows.size() == 1);
    double pmse = 0.0, adj = 0.0;
    int successes = 0;
    for (const auto& rec : records) {
        if (rec.failed) continue;
        pmse += rec.report.pmse;
        adj += rec.report.adj_r2;
        ++successes;
    }
    REQUIRE(successes > 0);
    CHECK(rows[0].mean_report.pmse == doctest::Approx(pmse / successes).epsilon(1e-15));
    CHECK(rows[0].mean_report.adj_r2 == doctest::Approx(adj / successes).epsilon(1e-15));
}

TEST_CASE("select_best rewards similarity across splits") {
    auto make_row = [](sweep::ModelKind kind, std::size_t neurons,
                       const std::string& split, double adj, double pmse) {
        sweep::AggregateRow row;
        row.subset = {0, 1};
        row.kind = kind;
        row.neurons = neurons;
        row.learning_rate = 0.01;
        row.split_name = split;
        row.mean_report.adj_r2 = adj;
        row.mean_report.pmse = pmse;
        row.successes = 50;
        return row;
    };

    SUBCASE("consistent candidate beats a lopsided one") {
        std::vector<sweep::AggregateRow> rows = {
            make_row(sweep::ModelKind::ann, 3, "60-20-20", 0.80, 1e-4),
            make_row(sweep::ModelKind::ann, 3, "70-15-15", 0.79, 1e-4),
            make_row(sweep::ModelKind::ann, 9, "60-20-20", 0.95, 1e-5),
            make_row(sweep::ModelKind::ann, 9, "70-15-15", 0.40, 1e-5),
        };
        auto chosen = sweep::select_best(rows);
        REQUIRE(chosen.size() == 1);
        CHECK(chosen[0].neurons == 3);
        CHECK(chosen[0].score == doctest::Approx(0.785).epsilon(1e-12));
        // the lopsided candidate would have scored 0.675 - 0.55 = 0.125
    }
    SUBCASE("single candidate is selected trivially") {
        std::vector<sweep::AggregateRow> rows = {
            make_row(sweep::ModelKind::lstm, 7, "60-20-20", 0.99, 1e-5),
            make_row(sweep::ModelKind::lstm, 7, "70-15-15", 0.98, 2e-5),
        };
        auto chosen = sweep::select_best(rows);
        REQUIRE(chosen.size() == 1);
        CHECK(chosen[0].kind == sweep::ModelKind::lstm);
        CHECK(chosen[0].neurons == 7);
    }
    SUBCASE("ties break toward smaller test error, then fewer neurons") {
        std::vector<sweep::AggregateRow> rows = {
            make_row(sweep::ModelKind::ann, 9, "60-20-20", 0.80, 2e-4),
            make_row(sweep::ModelKind::ann, 9, "70-15-15", 0.80, 2e-4),
            make_row(sweep::ModelKind::ann, 5, "60-20-20", 0.80, 1e-4),
            make_row(sweep::ModelKind::ann, 5, "70-15-15", 0.80, 1e-4),
            make_row(sweep::ModelKind::ann, 3, "60-20-20", 0.80, 1e-4),
            make_row(sweep::ModelKind::ann, 3, "70-15-15", 0.80, 1e-4),
        };
        auto chosen = sweep::select_best(rows);
        REQUIRE(chosen.size() == 1);
        CHECK(chosen[0].neurons == 3);
    }
    SUBCASE("a kind without a full split pair is an error") {
        std::vector<sweep::AggregateRow> rows = {
            make_row(sweep::ModelKind::ann, 3, "60-20-20", 0.80, 1e-4),
            make_row(sweep::ModelKind::ann, 3, "70-15-15", 0.79, 1e-4),
            make_row(sweep::ModelKind::rnn, 5, "60-20-20", 0.70, 1e-4),
        };
        CHECK_THROWS_AS(sweep::select_best(rows), sweep::MissingSplitPair);
    }
    SUBCASE("one split overall is an error") {
        std::vector<sweep::AggregateRow> rows = {
            make_row(sweep::ModelKind::ann, 3, "60-20-20", 0.80, 1e-4),
        };
        CHECK_THROWS_AS(sweep::select_best(rows), sweep::MissingSplitPair);
    }
}

TEST_CASE("runs.json round-trips records and plan") {
    auto ds = test_dataset();
    auto plan = tiny_plan();
    auto records = sweep::run_records(ds, plan);

    TempDir dir("respred_runs_roundtrip");
    auto path = (dir.path / "runs.json").string();
    sweep::write_runs_json(records, plan, path);
    auto [back, back_plan] = sweep::read_runs_json(path);

    REQUIRE(back.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(back[i].coords.subset == records[i].coords.subset);
        CHECK(back[i].coords.kind == records[i].coords.kind);
        CHECK(back[i].seed == records[i].seed);
        CHECK(back[i].report.pmse == records[i].report.pmse);
        CHECK(back[i].report.adj_r2 == records[i].report.adj_r2);
    }
    CHECK(back_plan.repetitions == plan.repetitions);
    CHECK(back_plan.base_seed == plan.base_seed);
}

TEST_CASE("report bundle shape") {
    auto ds = test_dataset();
    auto plan = tiny_plan();
    plan.kinds = {sweep::ModelKind::mlri, sweep::ModelKind::ann};
    plan.splits = {data::SplitSpec::preset("60-20-20"),
                   data::SplitSpec::preset("70-15-15")};
    auto rows = sweep::run_sweep(ds, plan);
    auto chosen = sweep::select_best(rows);

    SUBCASE("full bundle with chosen models") {
        TempDir dir("respred_report_full");
        sweep::emit_report(rows, chosen, std::nullopt, ds, plan,
                           dir.path.string());
        CHECK(fs::exists(dir.path / "aggregates.csv"));
        CHECK(fs::exists(dir.path / "report.json"));
        CHECK(fs::exists(dir.path / "curve_mlri.csv"));
        CHECK(fs::exists(dir.path / "curve_ann.csv"));

        // curve CSV has one data row per target
        std::string curve = slurp(dir.path / "curve_ann.csv");
        std::size_t lines = std::count(curve.begin(), curve.end(), '\n');
        CHECK(lines == ds.n_targets() + 1); // header + n rows
    }
    SUBCASE("empty chosen set writes the table and a note") {
        TempDir dir("respred_report_empty");
        sweep::emit_report(rows, {}, std::nullopt, ds, plan, dir.path.string());
        CHECK(fs::exists(dir.path / "aggregates.csv"));
        std::string report = slurp(dir.path / "report.json");
        CHECK(report.find("no model selection") != std::string::npos);
        CHECK_FALSE(fs::exists(dir.path / "curve_mlri.csv"));
        CHECK_FALSE(fs::exists(dir.path / "curve_ann.csv"));
    }
    SUBCASE("feature-selection chain lands in chain.json") {
        TempDir dir("respred_report_chain");
        auto ranking = cfs::forward_select(ds, ds.n_covariates(), 0.01);
        sweep::emit_report(rows, chosen, ranking, ds, plan, dir.path.string());
        std::string chain = slurp(dir.path / "chain.json");
        CHECK(chain.find("\"merit\"") != std::string::npos);
    }
}

TEST_CASE("identical inputs produce byte-identical bundles at any worker count") {
    auto ds = test_dataset();
    auto plan = tiny_plan();
    plan.kinds = {sweep::ModelKind::mlri, sweep::ModelKind::ann};
    plan.splits = {data::SplitSpec::preset("60-20-20"),
                   data::SplitSpec::preset("70-15-15")};
    plan.repetitions = 2;

    TempDir dir_a("respred_bundle_a"), dir_b("respred_bundle_b");
    auto emit_with_workers = [&](const fs::path& dir, unsigned workers) {
        auto records = sweep::run_records(ds, plan, workers);
        auto rows = sweep::aggregate(records);
        auto chosen = sweep::select_best(rows);
        sweep::write_runs_json(records, plan, (dir / "runs.json").string());
        sweep::emit_report(rows, chosen, std::nullopt, ds, plan, dir.string());
    };
    emit_with_workers(dir_a.path, 1);
    emit_with_workers(dir_b.path, 3);

    for (const char* name :
         {"runs.json", "aggregates.csv", "report.json", "curve_mlri.csv",
          "curve_ann.csv"})
        CHECK(slurp(dir_a.path / name) == slurp(dir_b.path / name));
}

TEST_CASE("golden bundle is byte-stable") {
    // Golden files were generated once from this exact plan and reviewed; any
    // byte change to the bundle format or the numerics must be deliberate.
    fs::path golden = fs::path(TEST_SOURCE_DIR) / "golden";
    auto ds = test_dataset();
    auto plan = tiny_plan();
    plan.kinds = {sweep::ModelKind::mlri, sweep::ModelKind::ann};
    plan.splits = {data::SplitSpec::preset("60-20-20"),
                   data::SplitSpec::preset("70-15-15")};
    plan.repetitions = 2;
    plan.base_seed = 2024;

    auto records = sweep::run_records(ds, plan);
    auto rows = sweep::aggregate(records);
    auto chosen = sweep::select_best(rows);

    TempDir dir("respred_golden_check");
    sweep::emit_report(rows, chosen, std::nullopt, ds, plan, dir.path.string());

    for (const char* name : {"aggregates.csv", "report.json", "curve_mlri.csv",
                             "curve_ann.csv"}) {
        INFO(name);
        CHECK(slurp(dir.path / name) == slurp(golden / name));
    }
}

TEST_CASE("diverging runs become failure counts, never abort the sweep") {
    auto ds = test_dataset();
    auto plan = tiny_plan();
    plan.learning_rates = {1e300}; // guaranteed NonFiniteLoss
    plan.repetitions = 3;
    auto records = sweep::run_records(ds, plan);
    REQUIRE(records.size() == 3);
    for (const auto& rec : records) {
        CHECK(rec.failed);
        CHECK(rec.failure_reason.find("non-finite") != std::string::npos);
    }
    auto rows = sweep::aggregate(records);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].failures == 3);
    CHECK_FALSE(rows[0].valid());

    TempDir dir("respred_failed_runs");
    auto path = (dir.path / "runs.json").string();
    sweep::write_runs_json(records, plan, path);
    auto [back, back_plan] = sweep::read_runs_json(path);
    CHECK(back[0].failed);
    CHECK(back[0].failure_reason == records[0].failure_reason);
}

TEST_CASE("plan validation") {
    sweep::SweepPlan plan = sweep::SweepPlan::defaults();
    CHECK_THROWS_AS(plan.validate(), std::invalid_argument); // no subsets
    plan.subsets = {{0}};
    CHECK_NOTHROW(plan.validate());
    plan.repetitions = 0;
    CHECK_THROWS_AS(plan.validate(), std::invalid_argument);
}
