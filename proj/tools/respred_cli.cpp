// respred: model and predict system resilience curves from covariate time
// series. Subcommands cover feature selection, the regression baseline, the
// three network models, the full hyperparameter sweep and synthetic data
// generation.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "respred/cfs.hpp"
#include "respred/dataset.hpp"
#include "respred/experiment.hpp"
#include "respred/metrics.hpp"
#include "respred/mlri.hpp"
#include "respred/neuralnet.hpp"
#include "respred/resilience.hpp"

namespace {

using namespace respred;
using nlohmann::json;
namespace fs = std::filesystem;

std::vector<std::size_t> parse_subset(const std::string& arg, std::size_t m) {
    std::vector<std::size_t> subset;
    std::stringstream ss(arg);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t one_based = std::stoull(item);
        if (one_based == 0 || one_based > m)
            throw CLI::ValidationError("--subset",
                                       "covariate index " + item +
                                           " out of range (1.." +
                                           std::to_string(m) + ")");
        std::size_t idx = one_based - 1;
        if (std::find(subset.begin(), subset.end(), idx) != subset.end())
            throw CLI::ValidationError("--subset",
                                       "covariate index " + item + " repeated");
        subset.push_back(idx);
    }
    if (subset.empty())
        throw CLI::ValidationError("--subset", "no covariate indices given");
    return subset;
}

std::string subset_label(const std::vector<std::size_t>& subset) {
    std::string out;
    for (std::size_t j : subset) {
        if (!out.empty()) out += "+";
        out += "X" + std::to_string(j + 1);
    }
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

int run_select_features(const std::string& input, const std::string& out_dir,
                        double epsilon, std::size_t max_k,
                        const std::string& sign) {
    auto ds = data::normalize(data::load_csv(input));
    if (max_k == 0 || max_k > ds.n_covariates()) max_k = ds.n_covariates();
    auto ranking = cfs::forward_select(ds, max_k, epsilon,
                                       sign == "signed"
                                           ? cfs::CorrelationSign::signed_r
                                           : cfs::CorrelationSign::absolute);

    std::cout << std::left << std::setw(28) << "subset" << std::setw(6) << "k"
              << std::setw(12) << "merit" << "\n";
    auto print_row = [&](const cfs::MeritScore& s, bool accepted) {
        std::cout << std::left << std::setw(28) << subset_label(s.subset)
                  << std::setw(6) << s.k << std::setw(12) << std::setprecision(7)
                  << std::fixed << s.merit << (accepted ? "" : "  (disregarded)")
                  << "\n";
        std::cout.unsetf(std::ios::fixed);
    };
    for (const auto& s : ranking.chain) print_row(s, true);
    if (ranking.rejected) print_row(*ranking.rejected, false);
    std::cout << "stop reason: "
              << (ranking.stop_reason == cfs::StopReason::merit_drop
                      ? "merit_drop"
                      : "max_covariates")
              << "\n";

    fs::create_directories(out_dir);
    json chain = json::array();
    auto row_json = [&](const cfs::MeritScore& s, bool accepted) {
        json sj;
        json arr = json::array();
        for (std::size_t j : s.subset) arr.push_back(j + 1);
        sj["subset"] = arr;
        sj["subset_label"] = subset_label(s.subset);
        sj["k"] = s.k;
        sj["r_co_bar"] = s.r_co_bar;
        sj["r_cc_bar"] = s.r_cc_bar;
        sj["merit"] = s.merit;
        sj["accepted"] = accepted;
        return sj;
    };
    for (const auto& s : ranking.chain) chain.push_back(row_json(s, true));
    if (ranking.rejected) chain.push_back(row_json(*ranking.rejected, false));
    json j;
    j["chain"] = chain;
    j["stop_reason"] = ranking.stop_reason == cfs::StopReason::merit_drop
                           ? "merit_drop"
                           : "max_covariates";
    write_text(fs::path(out_dir) / "chain.json", j.dump(2) + "\n");
    return 0;
}

int run_fit_mlri(const std::string& input, const std::string& out_dir,
                 const std::string& subset_arg, const std::string& split_name,
                 const std::string& recon) {
    auto ds = data::normalize(data::load_csv(input));
    auto subset = parse_subset(subset_arg, ds.n_covariates());
    auto spec = data::SplitSpec::preset(split_name);
    auto view = data::split(ds, spec, data::ModelFamily::regression);

    auto model = mlri::fit(ds, subset, view.train);
    auto delta_hat = mlri::predict_range(model, ds, {0, ds.n_targets()});
    auto fitted = curve::reconstruct(ds.performance, delta_hat,
                                     recon == "recursive"
                                         ? curve::ReconMode::recursive
                                         : curve::ReconMode::onestep);
    std::span<const double> actual{ds.performance.data() + 1, ds.n_targets()};
    auto report =
        metrics::evaluate(fitted.target_view(), actual, view, subset.size());

    json j;
    j["model"] = "mlri";
    j["subset_label"] = subset_label(subset);
    j["intercept"] = model.intercept;
    j["main_coeffs"] = model.main_coeffs;
    j["interaction_coeffs"] = model.interaction_coeffs;
    j["rank_deficient"] = model.rank_deficient;
    j["fit_report"] = json::parse(report.to_json());
    std::string text = j.dump(2) + "\n";
    std::cout << text;
    if (model.rank_deficient)
        std::cerr << "warning: design matrix is rank deficient; "
                     "minimum-norm coefficients reported\n";
    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "mlri.json", text);
    return 0;
}

int run_train_nn(const std::string& input, const std::string& out_dir,
                 const std::string& kind_name, const std::string& subset_arg,
                 const std::string& split_name, std::size_t neurons, double lr,
                 std::uint64_t seed, const std::string& lstm_mode,
                 const std::string& monitor, const std::string& recon) {
    auto ds = data::normalize(data::load_csv(input));
    auto subset = parse_subset(subset_arg, ds.n_covariates());
    auto spec = data::SplitSpec::preset(split_name);
    auto view = data::split(ds, spec, data::ModelFamily::network);

    nn::NetworkConfig config;
    if (kind_name == "ann")
        config.kind = nn::Kind::ann;
    else if (kind_name == "rnn")
        config.kind = nn::Kind::rnn;
    else if (kind_name == "lstm")
        config.kind = nn::Kind::lstm;
    else
        throw CLI::ValidationError("--kind", "expected ann, rnn or lstm");
    config.input_dim = subset.size();
    config.hidden_units = neurons;
    config.learning_rate = lr;
    config.seed = seed;
    config.lstm_mode = lstm_mode == "paper_literal"
                           ? nn::LstmWeightMode::paper_literal
                           : nn::LstmWeightMode::standard;
    config.stop_monitor = monitor == "validation" ? nn::StopMonitor::validation
                                                  : nn::StopMonitor::training;

    auto net = nn::train(config, ds, subset, view);
    auto delta_hat = nn::predict(net, ds, {0, ds.n_targets()});
    auto fitted = curve::reconstruct(ds.performance, delta_hat,
                                     recon == "recursive"
                                         ? curve::ReconMode::recursive
                                         : curve::ReconMode::onestep);
    std::span<const double> actual{ds.performance.data() + 1, ds.n_targets()};
    auto report = metrics::evaluate(fitted.target_view(), actual, view,
                                    subset.size(), net.epochs_run);

    json j;
    j["model"] = kind_name;
    j["subset_label"] = subset_label(subset);
    j["neurons"] = neurons;
    j["learning_rate"] = lr;
    j["seed"] = seed;
    j["lstm_mode"] = lstm_mode;
    j["fit_report"] = json::parse(report.to_json());
    std::string text = j.dump(2) + "\n";
    std::cout << text;

    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / (kind_name + "_report.json"), text);
    std::ofstream hist(fs::path(out_dir) / (kind_name + "_loss.csv"));
    hist << "epoch,train_mse,val_mse\n";
    hist.precision(17);
    for (std::size_t e = 0; e < net.train_loss_history.size(); ++e)
        hist << e + 1 << ',' << net.train_loss_history[e] << ','
             << net.val_loss_history[e] << '\n';
    return 0;
}

int run_sweep_cmd(const std::string& input, const std::string& out_dir,
                  const std::string& config_path, std::uint64_t base_seed,
                  unsigned workers, double epsilon) {
    auto ds = data::normalize(data::load_csv(input));

    sweep::SweepPlan plan = sweep::SweepPlan::defaults();
    plan.base_seed = base_seed;
    if (!config_path.empty())
        plan = sweep::plan_from_json_file(config_path, std::move(plan));

    // Stage one of the hybrid selection fills the candidate subsets unless
    // the config pinned them.
    std::optional<cfs::SubsetRanking> ranking;
    if (plan.subsets.empty()) {
        ranking = cfs::forward_select(ds, ds.n_covariates(), epsilon);
        for (const auto& s : ranking->chain) plan.subsets.push_back(s.subset);
    }

    std::cerr << "sweep: " << plan.subsets.size() << " subsets, "
              << plan.kinds.size() << " kinds, " << plan.neurons.size()
              << " neuron counts, " << plan.learning_rates.size()
              << " learning rates, " << plan.splits.size() << " splits, "
              << plan.repetitions << " repetitions\n";

    auto records = sweep::run_records(ds, plan, workers);
    auto rows = sweep::aggregate(records);
    auto chosen = sweep::select_best(rows);

    fs::create_directories(out_dir);
    sweep::write_runs_json(records, plan, (fs::path(out_dir) / "runs.json").string());
    sweep::emit_report(rows, chosen, ranking, ds, plan, out_dir);

    for (const auto& c : chosen)
        std::cout << sweep::to_string(c.kind) << ": " << subset_label(c.subset)
                  << (c.kind == sweep::ModelKind::mlri
                          ? std::string()
                          : ", " + std::to_string(c.neurons) + " neurons, lr " +
                                std::to_string(c.learning_rate))
                  << " (score " << c.score << ")\n";
    std::cout << "report written to " << out_dir << "\n";
    return 0;
}

int run_report_cmd(const std::string& input, const std::string& out_dir,
                   const std::string& runs_path) {
    auto ds = data::normalize(data::load_csv(input));
    auto [records, plan] = sweep::read_runs_json(runs_path);
    auto rows = sweep::aggregate(records);
    auto chosen = sweep::select_best(rows);
    sweep::emit_report(rows, chosen, std::nullopt, ds, plan, out_dir);
    std::cout << "report written to " << out_dir << "\n";
    return 0;
}

int run_synth(const std::string& spec_path, const std::string& out_path) {
    curve::SyntheticCurveSpec spec;
    std::size_t length = 40;
    if (!spec_path.empty()) {
        std::ifstream in(spec_path);
        if (!in) throw std::runtime_error("cannot open " + spec_path);
        json j = json::parse(in);
        spec.nominal_level = j.value("nominal_level", spec.nominal_level);
        spec.t_h = j.value("t_h", spec.t_h);
        spec.t_d = j.value("t_d", spec.t_d);
        spec.t_r = j.value("t_r", spec.t_r);
        spec.trough_level = j.value("trough_level", spec.trough_level);
        spec.recovered_level = j.value("recovered_level", spec.recovered_level);
        spec.noise_std = j.value("noise_std", spec.noise_std);
        if (j.contains("covariate_coupling"))
            spec.covariate_coupling =
                j.at("covariate_coupling").get<std::vector<double>>();
        spec.seed = j.value("seed", spec.seed);
        length = j.value("length", length);
    }
    data::write_csv(curve::generate_synthetic_raw(spec, length), out_path);
    std::cout << "wrote " << out_path << " (" << length << " rows, "
              << spec.covariate_coupling.size() << " covariates)\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"resilience curve prediction toolkit"};
    app.require_subcommand(1);

    std::string input, out_dir = "out", config_path;
    std::uint64_t base_seed = 0;
    unsigned workers = 1;
    app.add_option("--input", input, "input CSV (time, performance, covariates)");
    app.add_option("--out-dir", out_dir, "output directory");
    app.add_option("--base-seed", base_seed, "base seed for derived run seeds");
    app.add_option("--workers", workers, "worker threads for sweeps");
    app.add_option("--config", config_path, "JSON file overriding sweep plan fields");
    app.fallthrough();

    auto* sel = app.add_subcommand("select-features",
                                   "rank covariate subsets with CFS");
    double epsilon = 0.01;
    std::size_t max_k = 0;
    std::string sign = "absolute";
    sel->add_option("--epsilon", epsilon, "merit drop tolerance");
    sel->add_option("--max-k", max_k, "maximum subset size (default: all)");
    sel->add_option("--sign", sign, "correlation convention: absolute|signed");

    auto* fit = app.add_subcommand("fit-mlri",
                                   "fit the regression-with-interaction baseline");
    std::string subset_arg, split_name = "60-20-20", recon = "onestep";
    fit->add_option("--subset", subset_arg, "covariate indices, e.g. 19,14")
        ->required();
    fit->add_option("--split", split_name, "data split (60-20-20 or 70-15-15)");
    fit->add_option("--recon", recon, "reconstruction: onestep|recursive");

    auto* tr = app.add_subcommand("train-nn", "train one network model");
    std::string kind_name = "lstm", lstm_mode = "standard", monitor = "training";
    std::size_t neurons = 7;
    double lr = 0.01;
    std::uint64_t seed = 0;
    tr->add_option("--kind", kind_name, "ann|rnn|lstm");
    tr->add_option("--subset", subset_arg, "covariate indices, e.g. 19,14,4,7")
        ->required();
    tr->add_option("--split", split_name, "data split");
    tr->add_option("--neurons", neurons, "hidden units");
    tr->add_option("--lr", lr, "learning rate");
    tr->add_option("--seed", seed, "random seed");
    tr->add_option("--lstm-mode", lstm_mode, "standard|paper_literal");
    tr->add_option("--monitor", monitor, "early-stop monitor: training|validation");
    tr->add_option("--recon", recon, "reconstruction: onestep|recursive");

    auto* sw = app.add_subcommand(
        "sweep", "run the full subset/architecture/learning-rate sweep");
    sw->add_option("--epsilon", epsilon, "stage-one merit drop tolerance");

    auto* rep = app.add_subcommand("report", "re-emit reports from saved runs");
    std::string runs_path;
    rep->add_option("--runs", runs_path, "runs.json from a previous sweep")
        ->required();

    auto* syn = app.add_subcommand("synth", "generate a synthetic dataset CSV");
    std::string spec_path, synth_out = "synth.csv";
    syn->add_option("--spec", spec_path, "JSON curve spec");
    syn->add_option("--out", synth_out, "output CSV path");

    CLI11_PARSE(app, argc, argv);

    auto need_input = [&]() {
        if (input.empty())
            throw CLI::ValidationError("--input", "an input CSV is required");
    };

    try {
        if (sel->parsed()) {
            need_input();
            return run_select_features(input, out_dir, epsilon, max_k, sign);
        }
        if (fit->parsed()) {
            need_input();
            return run_fit_mlri(input, out_dir, subset_arg, split_name, recon);
        }
        if (tr->parsed()) {
            need_input();
            return run_train_nn(input, out_dir, kind_name, subset_arg, split_name,
                                neurons, lr, seed, lstm_mode, monitor, recon);
        }
        if (sw->parsed()) {
            need_input();
            return run_sweep_cmd(input, out_dir, config_path, base_seed, workers,
                                 epsilon);
        }
        if (rep->parsed()) {
            need_input();
            return run_report_cmd(input, out_dir, runs_path);
        }
        if (syn->parsed()) return run_synth(spec_path, synth_out);
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
