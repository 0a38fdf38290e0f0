// Command-line front end: simulate | train | monitor | evaluate.
// All parameters come from a TOML config file with flag overrides, so a
// published run is reproducible from one file plus a seed.

#include "pcaewc/config.hpp"
#include "pcaewc/csv.hpp"
#include "pcaewc/evalkit.hpp"
#include "pcaewc/model_io.hpp"
#include "pcaewc/pipeline.hpp"
#include "pcaewc/simgen.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitGateFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

bool verbose() {
    const char* v = std::getenv("PCAEWC_VERBOSE");
    return v && *v && std::string(v) != "0";
}

void log_info(const std::string& msg) {
    if (verbose()) std::cerr << "[pcaewc] " << msg << "\n";
}

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> runs;
    bool gate = false;
};

pcaewc::toml::Document load_config(const CommonOpts& opts) {
    if (opts.config_path.empty()) return {};
    return pcaewc::toml::parse_file(opts.config_path);
}

pcaewc::LambdaConfig lambda_config(const pcaewc::toml::Document& cfg, const std::string& table) {
    pcaewc::LambdaConfig lc;
    lc.lambda_prior = cfg.get_double(table, "lambda_prior", lc.lambda_prior);
    if (cfg.has(table, "lambda_mode")) {
        const auto& v = cfg.at(table, "lambda_mode");
        if (const auto* s = std::get_if<std::string>(&v)) {
            if (*s != "auto")
                throw pcaewc::ConfigError("key '" + table + ".lambda_mode': expected a number or \"auto\", got \"" +
                                          *s + "\"");
            lc.auto_mode = true;
        } else {
            lc.auto_mode = false;
            lc.lambda_mode = cfg.get_double(table, "lambda_mode", 0.0);
        }
    }
    return lc;
}

pcaewc::EvalConfig eval_config(const pcaewc::toml::Document& cfg) {
    pcaewc::EvalConfig ec;
    auto ints = [&](const char* key, std::vector<std::int64_t> dflt) {
        return cfg.get_int_array("evaluate", key, std::move(dflt));
    };
    ec.scenarios.clear();
    for (auto s : ints("scenarios", {1, 2, 3, 4, 5})) ec.scenarios.push_back(static_cast<int>(s));
    ec.faults.clear();
    for (auto f : ints("faults", {1, 2, 3})) ec.faults.push_back(static_cast<int>(f));
    ec.n_train = cfg.get_int("evaluate", "n_train", 1000);
    ec.n_test = cfg.get_int("evaluate", "n_test", 1000);
    ec.onset_sample = cfg.get_int("evaluate", "onset", 501);
    ec.cpv_threshold = cfg.get_double("evaluate", "cpv_threshold", 0.998);
    ec.alpha = cfg.get_double("evaluate", "alpha", 0.99);
    ec.lambdas = lambda_config(cfg, "evaluate");
    ec.dc.epsilon = cfg.get_double("evaluate", "epsilon", 1e-10);
    ec.dc.max_iters = static_cast<int>(cfg.get_int("evaluate", "max_iters", 500));
    ec.n_scaler_samples = cfg.get_int("evaluate", "n_scaler_samples", 200);
    ec.noise_variance =
        cfg.get_double("evaluate", "noise_variance", pcaewc::kDefaultNoiseVariance);
    return ec;
}

int cmd_simulate(const CommonOpts& opts) {
    using namespace pcaewc;
    const auto cfg = load_config(opts);
    const int scenario = static_cast<int>(cfg.get_int("simulate", "scenario", 1));
    const int fault_id = static_cast<int>(cfg.get_int("simulate", "fault", 1));
    const Index n_train = cfg.get_int("simulate", "n_train", 1000);
    const Index n_test = cfg.get_int("simulate", "n_test", 1000);
    const Index onset = cfg.get_int("simulate", "onset", 501);
    const double noise = cfg.get_double("simulate", "noise_variance", kDefaultNoiseVariance);
    const std::uint64_t seed =
        opts.seed.value_or(static_cast<std::uint64_t>(cfg.get_int("simulate", "seed", 42)));
    const std::filesystem::path out_dir =
        opts.out.value_or(cfg.get_string("simulate", "out_dir", "."));

    if (!std::filesystem::is_directory(out_dir))
        throw IoFailure("output directory does not exist: " + out_dir.string());

    const ScenarioData data =
        scenario_dataset(scenario, fault_spec(fault_id, onset), seed, n_train, n_test, noise);
    write_data_csv(out_dir / "train1.csv", data.train1);
    write_data_csv(out_dir / "train2.csv", data.train2);
    const std::string test_name = "test" + std::to_string(data.test_data_id) + ".csv";
    write_data_csv(out_dir / test_name, data.test, &data.labels);
    log_info("wrote train1.csv, train2.csv, " + test_name + " to " + out_dir.string());
    std::cout << "scenario " << scenario << " fault " << fault_id << " seed " << seed << ": wrote "
              << out_dir.string() << "/{train1.csv,train2.csv," << test_name << "}\n";
    return kExitOk;
}

int cmd_train(const CommonOpts& opts) {
    using namespace pcaewc;
    const auto cfg = load_config(opts);
    const auto data_files = cfg.get_string_array("train", "data", {});
    if (data_files.empty())
        throw ConfigError("key 'train.data': expected a non-empty array of csv paths");
    const bool plain = cfg.get_bool("train", "plain_pca", false);
    const double cpv = cfg.get_double("train", "cpv_threshold", 0.998);
    const double alpha = cfg.get_double("train", "alpha", 0.99);
    const LambdaConfig lambdas = lambda_config(cfg, "train");
    DcConfig dc;
    dc.epsilon = cfg.get_double("train", "epsilon", 1e-10);
    dc.max_iters = static_cast<int>(cfg.get_int("train", "max_iters", 500));
    const std::string trace_path = cfg.get_string("train", "trace_csv", "");
    dc.record_trace = !trace_path.empty();
    const std::filesystem::path model_path =
        opts.out.value_or(cfg.get_string("train", "model_out", "model.json"));

    std::string label = cfg.get_string("train", "label", "");
    if (plain && data_files.size() > 1)
        throw ConfigError("key 'train.plain_pca': plain mode takes exactly one data file");

    ModeModelState state = train_initial(read_data_csv(data_files[0]).data, cpv, lambdas, alpha,
                                         label.empty() ? (plain ? "Model C" : "Model A") : label);
    for (std::size_t i = 1; i < data_files.size(); ++i) {
        const DataMatrix block = read_data_csv(data_files[i]).data;
        if (dc.record_trace) {
            // keep the per-update trace next to the model file
            const DataMatrix Xs = apply_scaler(fit_scaler(block), block);
            const DcSolution sol = solve(state.ewc, Xs, dc);
            std::filesystem::path tp = trace_path;
            if (data_files.size() > 2)
                tp.replace_filename(tp.stem().string() + "_mode" + std::to_string(i + 1) +
                                    tp.extension().string());
            auto out = pcaewc::detail::open_out(tp);
            out << "iter,objective,step_norm\n";
            for (std::size_t k = 0; k < sol.objective_trace.size(); ++k)
                out << (k + 1) << "," << pcaewc::detail::fmt_g17(sol.objective_trace[k]) << ","
                    << pcaewc::detail::fmt_g17(sol.step_norm_trace[k]) << "\n";
        }
        state = continual_update(state, block, lambdas, dc);
        if (!label.empty()) state.label = label;
    }
    write_model(model_path, state);
    std::cout << state.label << " (mode " << state.mode_index << ", l=" << state.pca.n_components
              << ") written to " << model_path.string() << "\n";
    return kExitOk;
}

int cmd_monitor(const CommonOpts& opts, const std::string& model_path, const std::string& test_path,
                const std::string& scaler_path) {
    using namespace pcaewc;
    const ModeModelState state = read_model(model_path);
    const CsvData test = read_data_csv(test_path);

    std::optional<Scaler> override;
    if (!scaler_path.empty())
        override = refresh_scaler(state.scaler, read_data_csv(scaler_path).data);

    const StatisticSeries series = monitor_block(state, test.data, override);
    const std::filesystem::path out_path = opts.out.value_or("series.csv");
    write_series_csv(out_path, series, state.limits);
    log_info("series written to " + out_path.string());

    if (test.labels) {
        Index onset = 0;
        const auto& labels = *test.labels;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i]) {
                onset = static_cast<Index>(i) + 1;
                break;
            }
        if (onset > 0) {
            const DetectionMetrics m = compute_metrics(series.alarms, onset);
            std::cout << "FDR=" << pcaewc::detail::fmt_fixed(m.fdr)
                      << " FAR=" << pcaewc::detail::fmt_fixed(m.far) << " DD=";
            if (m.dd)
                std::cout << *m.dd;
            else
                std::cout << "-";
            std::cout << " (onset " << onset << ", " << series.alarms.size() << " samples)\n";
            return kExitOk;
        }
    }
    std::cout << series.alarms.size() << " samples monitored, series in " << out_path.string()
              << "\n";
    return kExitOk;
}

int cmd_evaluate(const CommonOpts& opts) {
    using namespace pcaewc;
    const auto cfg = load_config(opts);
    const EvalConfig ec = eval_config(cfg);
    const int n_runs =
        opts.runs.value_or(static_cast<int>(cfg.get_int("evaluate", "n_runs", 100)));
    const std::uint64_t seed =
        opts.seed.value_or(static_cast<std::uint64_t>(cfg.get_int("evaluate", "seed", 1)));
    const std::filesystem::path out_dir =
        opts.out.value_or(cfg.get_string("evaluate", "out_dir", "report"));

    log_info("evaluating " + std::to_string(n_runs) + " runs from seed " + std::to_string(seed));
    const ExperimentSummary summary = run_experiments(ec, n_runs, seed);
    emit_report(summary, out_dir);
    std::cout << "report written to " << out_dir.string() << " (" << summary.runs.size()
              << " cells over " << n_runs << " runs)\n";

    if (!opts.gate) return kExitOk;
    bool all_pass = true;
    for (const GateCheck& check : gate_checks(summary)) {
        std::cout << (check.pass ? "[PASS] " : "[FAIL] ") << check.name << " (" << check.detail
                  << ")\n";
        all_pass = all_pass && check.pass;
    }
    std::cout << (all_pass ? "gate: PASS\n" : "gate: FAIL\n");
    return all_pass ? kExitOk : kExitGateFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PCA monitoring with a consolidation penalty for multimode processes"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string model_path, test_path, scaler_path;

    auto add_common = [&](CLI::App* sub, bool with_runs_gate) {
        sub->add_option("--config", opts.config_path, "TOML configuration file");
        sub->add_option("--seed", opts.seed, "override the config seed");
        sub->add_option("--out", opts.out, "override the output path");
        if (with_runs_gate) {
            sub->add_option("--runs", opts.runs, "override the number of repeated runs");
            sub->add_flag("--gate", opts.gate, "check benchmark bands and set the exit status");
        }
    };

    CLI::App* sim = app.add_subcommand("simulate", "generate scenario data files");
    add_common(sim, false);
    CLI::App* train = app.add_subcommand("train", "train a model chain from data files");
    add_common(train, false);
    CLI::App* monitor = app.add_subcommand("monitor", "score a test block against a model");
    monitor->add_option("--model", model_path, "model json file")->required();
    monitor->add_option("--test", test_path, "test data csv")->required();
    monitor->add_option("--scaler-data", scaler_path, "normal-window csv for scaler refresh");
    add_common(monitor, false);
    CLI::App* evaluate = app.add_subcommand("evaluate", "run the repeated-experiment study");
    add_common(evaluate, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (sim->parsed()) return cmd_simulate(opts);
        if (train->parsed()) return cmd_train(opts);
        if (monitor->parsed()) return cmd_monitor(opts, model_path, test_path, scaler_path);
        if (evaluate->parsed()) return cmd_evaluate(opts);
    } catch (const pcaewc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
