#include "respred/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include <json.hpp>

#include "respred/mlri.hpp"
#include "respred/rng.hpp"

namespace respred::sweep {

using nlohmann::json;

std::string to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::mlri: return "mlri";
    case ModelKind::ann: return "ann";
    case ModelKind::rnn: return "rnn";
    case ModelKind::lstm: return "lstm";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "mlri") return ModelKind::mlri;
    if (name == "ann") return ModelKind::ann;
    if (name == "rnn") return ModelKind::rnn;
    if (name == "lstm") return ModelKind::lstm;
    throw std::invalid_argument("unknown model kind \"" + name + "\"");
}

SweepPlan SweepPlan::defaults() {
    SweepPlan plan;
    plan.kinds = {ModelKind::mlri, ModelKind::ann, ModelKind::rnn,
                  ModelKind::lstm};
    for (std::size_t n = 1; n <= 15; ++n) plan.neurons.push_back(n);
    plan.learning_rates = {1e-2, 1e-3, 1e-4};
    plan.splits = {data::SplitSpec::preset("60-20-20"),
                   data::SplitSpec::preset("70-15-15")};
    plan.repetitions = 50;
    return plan;
}

void SweepPlan::validate() const {
    if (subsets.empty()) throw std::invalid_argument("plan has no subsets");
    for (const auto& s : subsets)
        if (s.empty()) throw std::invalid_argument("plan has an empty subset");
    if (kinds.empty()) throw std::invalid_argument("plan has no model kinds");
    bool any_network = std::any_of(kinds.begin(), kinds.end(), [](ModelKind k) {
        return k != ModelKind::mlri;
    });
    if (any_network && (neurons.empty() || learning_rates.empty()))
        throw std::invalid_argument("network kinds need neurons and learning rates");
    if (splits.empty()) throw std::invalid_argument("plan has no splits");
    for (const auto& s : splits) s.validate();
    if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
}

namespace {

// Stable byte-oriented hash (FNV-1a), finished with a splitmix64 step.
struct SeedHasher {
    std::uint64_t state = 0xcbf29ce484222325ULL;

    void bytes(const void* data, std::size_t size) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            state ^= p[i];
            state *= 0x100000001b3ULL;
        }
    }
    void u64(std::uint64_t v) { bytes(&v, sizeof v); }
    void f64(double v) {
        std::uint64_t bits;
        static_assert(sizeof bits == sizeof v);
        std::memcpy(&bits, &v, sizeof bits);
        u64(bits);
    }
    void str(const std::string& s) {
        u64(s.size());
        bytes(s.data(), s.size());
    }
};

nn::Kind to_nn_kind(ModelKind kind) {
    switch (kind) {
    case ModelKind::ann: return nn::Kind::ann;
    case ModelKind::rnn: return nn::Kind::rnn;
    case ModelKind::lstm: return nn::Kind::lstm;
    default: throw std::invalid_argument("MLRI has no network kind");
    }
}

std::span<const double> performance_targets(const data::NormalizedDataset& ds) {
    return {ds.performance.data() + 1, ds.n_targets()};
}

const data::SplitSpec& split_by_name(const SweepPlan& plan,
                                     const std::string& name) {
    for (const auto& s : plan.splits)
        if (s.name == name) return s;
    throw std::invalid_argument("split \"" + name + "\" not in plan");
}

} // namespace

std::uint64_t derive_seed(std::uint64_t base_seed, const Coordinates& coords) {
    SeedHasher h;
    h.u64(base_seed);
    h.u64(coords.subset.size());
    for (std::size_t j : coords.subset) h.u64(j);
    h.u64(static_cast<std::uint64_t>(coords.kind));
    h.u64(coords.neurons);
    h.f64(coords.learning_rate);
    h.str(coords.split_name);
    h.u64(static_cast<std::uint64_t>(coords.repetition));
    return mix64(h.state);
}

metrics::FitReport run_single(const data::NormalizedDataset& ds,
                              const Coordinates& coords, const SweepPlan& plan) {
    const data::SplitSpec& spec = split_by_name(plan, coords.split_name);
    const data::IndexRange full{0, ds.n_targets()};

    std::vector<double> delta_hat;
    data::SplitView view;
    std::optional<int> epochs;

    if (coords.kind == ModelKind::mlri) {
        view = data::split(ds, spec, data::ModelFamily::regression);
        mlri::RegressionModel model = mlri::fit(ds, coords.subset, view.train);
        delta_hat = mlri::predict_range(model, ds, full);
    } else {
        view = data::split(ds, spec, data::ModelFamily::network);
        nn::NetworkConfig config;
        config.kind = to_nn_kind(coords.kind);
        config.input_dim = coords.subset.size();
        config.hidden_units = coords.neurons;
        config.learning_rate = coords.learning_rate;
        config.lstm_mode = plan.lstm_mode;
        config.seed = derive_seed(plan.base_seed, coords);
        nn::TrainedNetwork net = nn::train(config, ds, coords.subset, view);
        delta_hat = nn::predict(net, ds, full);
        epochs = net.epochs_run;
    }

    curve::ResilienceCurve fitted =
        curve::reconstruct(ds.performance, delta_hat, plan.recon_mode);
    return metrics::evaluate(fitted.target_view(), performance_targets(ds), view,
                             coords.subset.size(), epochs);
}

namespace {

std::vector<Coordinates> enumerate_coordinates(const SweepPlan& plan) {
    std::vector<Coordinates> coords;
    for (const auto& subset : plan.subsets)
        for (ModelKind kind : plan.kinds) {
            if (kind == ModelKind::mlri) {
                for (const auto& split : plan.splits)
                    coords.push_back({subset, kind, 0, 0.0, split.name, 0});
                continue;
            }
            for (std::size_t n : plan.neurons)
                for (double lr : plan.learning_rates)
                    for (const auto& split : plan.splits)
                        for (int rep = 0; rep < plan.repetitions; ++rep)
                            coords.push_back({subset, kind, n, lr, split.name, rep});
        }
    return coords;
}

} // namespace

std::vector<RunRecord> run_records(const data::NormalizedDataset& ds,
                                   const SweepPlan& plan, unsigned workers) {
    plan.validate();
    const std::vector<Coordinates> coords = enumerate_coordinates(plan);
    std::vector<RunRecord> records(coords.size());

    auto execute = [&](std::size_t i) {
        RunRecord& rec = records[i];
        rec.coords = coords[i];
        rec.seed = derive_seed(plan.base_seed, coords[i]);
        try {
            rec.report = run_single(ds, coords[i], plan);
        } catch (const std::exception& e) {
            rec.failed = true;
            rec.failure_reason = e.what();
        }
    };

    if (workers <= 1) {
        for (std::size_t i = 0; i < coords.size(); ++i) execute(i);
    } else {
        std::atomic<std::size_t> next{0};
        auto drain = [&] {
            for (std::size_t i = next.fetch_add(1); i < coords.size();
                 i = next.fetch_add(1))
                execute(i);
        };
        std::vector<std::thread> pool;
        unsigned count = std::min<std::size_t>(workers, coords.size());
        pool.reserve(count);
        for (unsigned w = 0; w < count; ++w) pool.emplace_back(drain);
        for (auto& t : pool) t.join();
    }
    return records;
}

std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& records) {
    std::vector<AggregateRow> rows;
    std::size_t i = 0;
    while (i < records.size()) {
        const Coordinates& c = records[i].coords;
        AggregateRow row;
        row.subset = c.subset;
        row.kind = c.kind;
        row.neurons = c.neurons;
        row.learning_rate = c.learning_rate;
        row.split_name = c.split_name;

        double vmse_sum = 0.0;
        bool all_have_vmse = true;
        while (i < records.size()) {
            const RunRecord& rec = records[i];
            const Coordinates& rc = rec.coords;
            if (rc.subset != c.subset || rc.kind != c.kind ||
                rc.neurons != c.neurons || rc.learning_rate != c.learning_rate ||
                rc.split_name != c.split_name)
                break;
            ++i;
            if (rec.failed) {
                ++row.failures;
                continue;
            }
            ++row.successes;
            row.mean_report.pmse += rec.report.pmse;
            row.mean_report.mse += rec.report.mse;
            row.mean_report.mape_percent += rec.report.mape_percent;
            row.mean_report.adj_r2 += rec.report.adj_r2;
            if (rec.report.vmse)
                vmse_sum += *rec.report.vmse;
            else
                all_have_vmse = false;
            if (rec.report.epochs_run) row.mean_epochs += *rec.report.epochs_run;
            row.mean_report.n = rec.report.n;
            row.mean_report.l = rec.report.l;
            row.mean_report.l_m = rec.report.l_m;
            row.mean_report.m = rec.report.m;
        }
        if (row.successes > 0) {
            double count = static_cast<double>(row.successes);
            row.mean_report.pmse /= count;
            row.mean_report.mse /= count;
            row.mean_report.mape_percent /= count;
            row.mean_report.adj_r2 /= count;
            if (all_have_vmse) row.mean_report.vmse = vmse_sum / count;
            row.mean_epochs /= count;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<AggregateRow> run_sweep(const data::NormalizedDataset& ds,
                                    const SweepPlan& plan, unsigned workers) {
    return aggregate(run_records(ds, plan, workers));
}

namespace {

std::string candidate_key(const AggregateRow& row) {
    std::string key = to_string(row.kind);
    for (std::size_t j : row.subset) key += "," + std::to_string(j);
    key += "|" + std::to_string(row.neurons) + "|";
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, row.learning_rate);
    key.append(buf, end);
    return key;
}

} // namespace

std::vector<ChosenModel> select_best(const std::vector<AggregateRow>& rows,
                                     SelectionRule rule) {
    std::set<std::string> split_names;
    for (const auto& row : rows) split_names.insert(row.split_name);
    if (!rows.empty() && split_names.size() != 2)
        throw MissingSplitPair("selection needs rows from exactly two splits, got " +
                               std::to_string(split_names.size()));

    // Group rows by (kind, subset, neurons, lr), keeping first-seen order.
    std::vector<std::string> order;
    std::map<std::string, std::vector<const AggregateRow*>> groups;
    for (const auto& row : rows) {
        std::string key = candidate_key(row);
        auto [it, inserted] = groups.try_emplace(key);
        if (inserted) order.push_back(key);
        it->second.push_back(&row);
    }

    std::map<ModelKind, ChosenModel> best;
    std::map<ModelKind, bool> kind_seen;
    std::vector<ModelKind> kind_order;
    for (const auto& key : order) {
        const auto& group = groups[key];
        ModelKind kind = group.front()->kind;
        if (!kind_seen.count(kind)) kind_order.push_back(kind);
        kind_seen[kind] = true;
        if (group.size() != 2) continue;
        if (!group[0]->valid() || !group[1]->valid()) continue;

        double a = group[0]->mean_report.adj_r2;
        double b = group[1]->mean_report.adj_r2;
        double score = 0.5 * (a + b) - rule.similarity_weight * std::abs(a - b);
        double pmse_mean =
            0.5 * (group[0]->mean_report.pmse + group[1]->mean_report.pmse);

        auto it = best.find(kind);
        bool take = false;
        if (it == best.end()) {
            take = true;
        } else {
            const ChosenModel& cur = it->second;
            double cur_pmse = 0.5 * (cur.rows[0].mean_report.pmse +
                                     cur.rows[1].mean_report.pmse);
            if (score > cur.score)
                take = true;
            else if (score == cur.score && pmse_mean < cur_pmse)
                take = true;
            else if (score == cur.score && pmse_mean == cur_pmse &&
                     group.front()->neurons < cur.neurons)
                take = true;
        }
        if (take) {
            ChosenModel chosen;
            chosen.kind = kind;
            chosen.subset = group.front()->subset;
            chosen.neurons = group.front()->neurons;
            chosen.learning_rate = group.front()->learning_rate;
            chosen.score = score;
            chosen.rows = {*group[0], *group[1]};
            best[kind] = std::move(chosen);
        }
    }

    std::vector<ChosenModel> result;
    for (ModelKind kind : kind_order) {
        auto it = best.find(kind);
        if (it == best.end())
            throw MissingSplitPair("model kind " + to_string(kind) +
                                   " has no candidate covering both splits");
        result.push_back(it->second);
    }
    return result;
}

// ------------------------------------------------------------ serialization

namespace {

std::string fmt_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::string subset_label(const std::vector<std::size_t>& subset) {
    std::string out;
    for (std::size_t j : subset) {
        if (!out.empty()) out += "+";
        out += "X" + std::to_string(j + 1);
    }
    return out;
}

json subset_to_json(const std::vector<std::size_t>& subset) {
    json arr = json::array();
    for (std::size_t j : subset) arr.push_back(j + 1); // 1-based externally
    return arr;
}

std::vector<std::size_t> subset_from_json(const json& arr) {
    std::vector<std::size_t> subset;
    for (const auto& v : arr) {
        std::size_t one_based = v.get<std::size_t>();
        if (one_based == 0)
            throw std::invalid_argument("covariate indices are 1-based");
        subset.push_back(one_based - 1);
    }
    return subset;
}

json report_to_json(const metrics::FitReport& r) {
    json j;
    j["pmse"] = r.pmse;
    if (r.vmse) j["vmse"] = *r.vmse;
    j["mse"] = r.mse;
    j["mape_percent"] = r.mape_percent;
    j["adj_r2"] = r.adj_r2;
    j["n"] = r.n;
    j["l"] = r.l;
    j["l_m"] = r.l_m;
    j["m"] = r.m;
    if (r.epochs_run) j["epochs_run"] = *r.epochs_run;
    return j;
}

metrics::FitReport report_from_json(const json& j) {
    metrics::FitReport r;
    r.pmse = j.at("pmse").get<double>();
    if (j.contains("vmse")) r.vmse = j.at("vmse").get<double>();
    r.mse = j.at("mse").get<double>();
    r.mape_percent = j.at("mape_percent").get<double>();
    r.adj_r2 = j.at("adj_r2").get<double>();
    r.n = j.at("n").get<std::size_t>();
    r.l = j.at("l").get<std::size_t>();
    r.l_m = j.at("l_m").get<std::size_t>();
    r.m = j.at("m").get<std::size_t>();
    if (j.contains("epochs_run")) r.epochs_run = j.at("epochs_run").get<int>();
    return r;
}

json plan_to_json(const SweepPlan& plan) {
    json j;
    json subsets = json::array();
    for (const auto& s : plan.subsets) subsets.push_back(subset_to_json(s));
    j["subsets"] = subsets;
    json kinds = json::array();
    for (ModelKind k : plan.kinds) kinds.push_back(to_string(k));
    j["kinds"] = kinds;
    j["neurons"] = plan.neurons;
    j["learning_rates"] = plan.learning_rates;
    json splits = json::array();
    for (const auto& s : plan.splits) splits.push_back(s.name);
    j["splits"] = splits;
    j["repetitions"] = plan.repetitions;
    j["base_seed"] = plan.base_seed;
    j["lstm_mode"] = plan.lstm_mode == nn::LstmWeightMode::standard
                         ? "standard"
                         : "paper_literal";
    j["recon_mode"] =
        plan.recon_mode == curve::ReconMode::onestep ? "onestep" : "recursive";
    return j;
}

SweepPlan plan_from_json(const json& j, SweepPlan plan) {
    if (j.contains("subsets")) {
        plan.subsets.clear();
        for (const auto& s : j.at("subsets"))
            plan.subsets.push_back(subset_from_json(s));
    }
    if (j.contains("kinds")) {
        plan.kinds.clear();
        for (const auto& k : j.at("kinds"))
            plan.kinds.push_back(model_kind_from_string(k.get<std::string>()));
    }
    if (j.contains("neurons"))
        plan.neurons = j.at("neurons").get<std::vector<std::size_t>>();
    if (j.contains("learning_rates"))
        plan.learning_rates = j.at("learning_rates").get<std::vector<double>>();
    if (j.contains("splits")) {
        plan.splits.clear();
        for (const auto& s : j.at("splits"))
            plan.splits.push_back(data::SplitSpec::preset(s.get<std::string>()));
    }
    if (j.contains("repetitions")) plan.repetitions = j.at("repetitions").get<int>();
    if (j.contains("base_seed"))
        plan.base_seed = j.at("base_seed").get<std::uint64_t>();
    if (j.contains("lstm_mode"))
        plan.lstm_mode = j.at("lstm_mode").get<std::string>() == "paper_literal"
                             ? nn::LstmWeightMode::paper_literal
                             : nn::LstmWeightMode::standard;
    if (j.contains("recon_mode"))
        plan.recon_mode = j.at("recon_mode").get<std::string>() == "recursive"
                              ? curve::ReconMode::recursive
                              : curve::ReconMode::onestep;
    return plan;
}

} // namespace

SweepPlan plan_from_json_file(const std::string& path, SweepPlan base) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config \"" + path + "\"");
    json j = json::parse(in);
    return plan_from_json(j, std::move(base));
}

void write_runs_json(const std::vector<RunRecord>& records,
                     const SweepPlan& plan, const std::string& path) {
    json j;
    j["plan"] = plan_to_json(plan);
    json runs = json::array();
    for (const auto& rec : records) {
        json r;
        r["subset"] = subset_to_json(rec.coords.subset);
        r["kind"] = to_string(rec.coords.kind);
        r["neurons"] = rec.coords.neurons;
        r["learning_rate"] = rec.coords.learning_rate;
        r["split"] = rec.coords.split_name;
        r["repetition"] = rec.coords.repetition;
        r["seed"] = rec.seed;
        if (rec.failed) {
            r["failed"] = true;
            r["failure_reason"] = rec.failure_reason;
        } else {
            r["report"] = report_to_json(rec.report);
        }
        runs.push_back(std::move(r));
    }
    j["runs"] = std::move(runs);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write \"" + path + "\"");
    out << j.dump(2) << '\n';
}

std::pair<std::vector<RunRecord>, SweepPlan>
read_runs_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open \"" + path + "\"");
    json j = json::parse(in);
    SweepPlan plan = plan_from_json(j.at("plan"), SweepPlan::defaults());
    std::vector<RunRecord> records;
    for (const auto& r : j.at("runs")) {
        RunRecord rec;
        rec.coords.subset = subset_from_json(r.at("subset"));
        rec.coords.kind = model_kind_from_string(r.at("kind").get<std::string>());
        rec.coords.neurons = r.at("neurons").get<std::size_t>();
        rec.coords.learning_rate = r.at("learning_rate").get<double>();
        rec.coords.split_name = r.at("split").get<std::string>();
        rec.coords.repetition = r.at("repetition").get<int>();
        rec.seed = r.at("seed").get<std::uint64_t>();
        if (r.contains("failed") && r.at("failed").get<bool>()) {
            rec.failed = true;
            rec.failure_reason = r.value("failure_reason", "");
        } else {
            rec.report = report_from_json(r.at("report"));
        }
        records.push_back(std::move(rec));
    }
    return {std::move(records), std::move(plan)};
}

void emit_report(const std::vector<AggregateRow>& rows,
                 const std::vector<ChosenModel>& chosen,
                 const std::optional<cfs::SubsetRanking>& ranking,
                 const data::NormalizedDataset& ds, const SweepPlan& plan,
                 const std::string& out_dir) {
    if (rows.empty()) throw std::invalid_argument("emit_report: no rows");
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec)
        throw std::runtime_error("cannot create \"" + out_dir +
                                 "\": " + ec.message());

    // (a) Aggregate table, one row per grid point and split.
    {
        std::ofstream out(fs::path(out_dir) / "aggregates.csv");
        if (!out) throw std::runtime_error("cannot write aggregates.csv");
        out << "model,subset,neurons,learning_rate,split,pmse,vmse,mse,"
               "mape_percent,adj_r2,mean_epochs,successes,failures\n";
        for (const auto& row : rows) {
            out << to_string(row.kind) << ',' << subset_label(row.subset) << ',';
            if (row.kind != ModelKind::mlri) out << row.neurons;
            out << ',';
            if (row.kind != ModelKind::mlri) out << fmt_double(row.learning_rate);
            out << ',' << row.split_name << ',';
            if (row.valid()) {
                out << fmt_double(row.mean_report.pmse) << ',';
                if (row.mean_report.vmse) out << fmt_double(*row.mean_report.vmse);
                out << ',' << fmt_double(row.mean_report.mse) << ','
                    << fmt_double(row.mean_report.mape_percent) << ','
                    << fmt_double(row.mean_report.adj_r2) << ',';
                if (row.kind != ModelKind::mlri) out << fmt_double(row.mean_epochs);
            } else {
                out << ",,,,,";
            }
            out << ',' << row.successes << ',' << row.failures << '\n';
        }
    }

    // (b) JSON report: chosen models plus provenance.
    {
        json j;
        j["plan"] = plan_to_json(plan);
        j["highlight_learning_rate"] = 0.01;
        json legend;
        for (std::size_t i = 0; i < ds.covariate_names.size(); ++i)
            legend["X" + std::to_string(i + 1)] = ds.covariate_names[i];
        j["covariate_legend"] = std::move(legend);
        if (chosen.empty()) {
            j["chosen"] = json::array();
            j["note"] = "no model selection was performed";
        } else {
            json arr = json::array();
            for (const auto& c : chosen) {
                json cj;
                cj["kind"] = to_string(c.kind);
                cj["subset"] = subset_to_json(c.subset);
                cj["subset_label"] = subset_label(c.subset);
                if (c.kind != ModelKind::mlri) {
                    cj["neurons"] = c.neurons;
                    cj["learning_rate"] = c.learning_rate;
                }
                cj["selection_score"] = c.score;
                json per_split;
                for (const auto& row : c.rows) {
                    json rj = report_to_json(row.mean_report);
                    if (row.kind != ModelKind::mlri)
                        rj["mean_epochs"] = row.mean_epochs;
                    rj["successes"] = row.successes;
                    rj["failures"] = row.failures;
                    per_split[row.split_name] = std::move(rj);
                }
                cj["per_split"] = std::move(per_split);
                arr.push_back(std::move(cj));
            }
            j["chosen"] = std::move(arr);
        }
        std::ofstream out(fs::path(out_dir) / "report.json");
        if (!out) throw std::runtime_error("cannot write report.json");
        out << j.dump(2) << '\n';
    }

    // (c) Fitted-curve CSV per chosen model, first split, repetition 0.
    for (const auto& c : chosen) {
        Coordinates coords{c.subset, c.kind, c.neurons, c.learning_rate,
                           plan.splits.front().name, 0};
        const data::IndexRange full{0, ds.n_targets()};
        std::vector<double> delta_hat;
        if (c.kind == ModelKind::mlri) {
            auto view = data::split(ds, plan.splits.front(),
                                    data::ModelFamily::regression);
            auto model = mlri::fit(ds, coords.subset, view.train);
            delta_hat = mlri::predict_range(model, ds, full);
        } else {
            auto view =
                data::split(ds, plan.splits.front(), data::ModelFamily::network);
            nn::NetworkConfig config;
            config.kind = to_nn_kind(c.kind);
            config.input_dim = coords.subset.size();
            config.hidden_units = coords.neurons;
            config.learning_rate = coords.learning_rate;
            config.lstm_mode = plan.lstm_mode;
            config.seed = derive_seed(plan.base_seed, coords);
            nn::TrainedNetwork net = nn::train(config, ds, coords.subset, view);
            delta_hat = nn::predict(net, ds, full);
        }
        curve::ResilienceCurve fitted =
            curve::reconstruct(ds.performance, delta_hat, plan.recon_mode);

        std::ofstream out(fs::path(out_dir) /
                          ("curve_" + to_string(c.kind) + ".csv"));
        if (!out) throw std::runtime_error("cannot write curve CSV");
        out << "time,observed,fitted\n";
        for (std::size_t t = 0; t < ds.n_targets(); ++t)
            out << ds.time_labels[t + 1] << ','
                << fmt_double(ds.performance[t + 1]) << ','
                << fmt_double(fitted.values[t + 1]) << '\n';
    }

    // (d) Feature-selection chain.
    if (ranking) {
        json j;
        json rows_json = json::array();
        auto score_json = [&](const cfs::MeritScore& s, bool accepted) {
            json sj;
            sj["subset"] = subset_to_json(s.subset);
            sj["subset_label"] = subset_label(s.subset);
            sj["k"] = s.k;
            sj["r_co_bar"] = s.r_co_bar;
            sj["r_cc_bar"] = s.r_cc_bar;
            sj["merit"] = s.merit;
            sj["accepted"] = accepted;
            return sj;
        };
        for (const auto& s : ranking->chain) rows_json.push_back(score_json(s, true));
        if (ranking->rejected)
            rows_json.push_back(score_json(*ranking->rejected, false));
        j["chain"] = std::move(rows_json);
        j["stop_reason"] = ranking->stop_reason == cfs::StopReason::merit_drop
                               ? "merit_drop"
                               : "max_covariates";
        std::ofstream out(fs::path(out_dir) / "chain.json");
        if (!out) throw std::runtime_error("cannot write chain.json");
        out << j.dump(2) << '\n';
    }
}

} // namespace respred::sweep
