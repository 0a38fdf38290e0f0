#pragma once

#include "pcaewc/csv.hpp"
#include "pcaewc/pipeline.hpp"
#include "pcaewc/simgen.hpp"
#include "pcaewc/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace pcaewc {

/// Per-sample alarm metrics around a known fault onset.
struct DetectionMetrics {
    double fdr = 0.0;          // percent of post-onset samples alarmed
    double far = 0.0;          // percent of pre-onset samples alarmed
    std::optional<Index> dd;   // first post-onset alarm minus onset; empty if undetected
};

/// onset_sample is 1-based: samples at indices >= onset_sample are faulty.
inline DetectionMetrics compute_metrics(const std::vector<std::uint8_t>& alarms,
                                        Index onset_sample) {
    const Index n = static_cast<Index>(alarms.size());
    if (onset_sample < 1 || onset_sample > n)
        throw OnsetOutOfRange("compute_metrics: onset " + std::to_string(onset_sample) +
                              " outside sequence of length " + std::to_string(n));
    const Index pre = onset_sample - 1;
    Index pre_alarms = 0, post_alarms = 0;
    std::optional<Index> first_post;
    for (Index i = 0; i < n; ++i) {
        if (!alarms[static_cast<std::size_t>(i)]) continue;
        if (i < pre) {
            ++pre_alarms;
        } else {
            ++post_alarms;
            if (!first_post) first_post = i - pre;
        }
    }
    DetectionMetrics m;
    m.fdr = 100.0 * static_cast<double>(post_alarms) / static_cast<double>(n - pre);
    m.far = pre > 0 ? 100.0 * static_cast<double>(pre_alarms) / static_cast<double>(pre) : 0.0;
    m.dd = first_post;
    return m;
}

struct EvalConfig {
    std::vector<int> scenarios{1, 2, 3, 4, 5};
    std::vector<int> faults{1, 2, 3};
    Index n_train = 1000;
    Index n_test = 1000;
    Index onset_sample = 501;
    double cpv_threshold = 0.998;  // yields three components on this process
    LambdaConfig lambdas{};
    double alpha = 0.99;
    DcConfig dc{};
    Index n_scaler_samples = 200;  // normal window for new-mode scaler refresh
    double noise_variance = kDefaultNoiseVariance;
    double std_tol = kDefaultStdTol;
};

struct RunRecord {
    int run = 0;
    std::uint64_t seed = 0;
    int scenario = 0;
    int fault = 0;
    DetectionMetrics metrics;
};

struct CellStats {
    double mean = 0.0;
    double stddev = 0.0;
    int n = 0;
};

struct SummaryCell {
    CellStats fdr;
    CellStats far;
    CellStats dd;          // undetected runs excluded
    int dd_undetected = 0;
};

struct RepresentativeSeries {
    StatisticSeries series;
    ControlLimits limits;
    Index onset_sample = 0;
};

struct ExperimentSummary {
    std::vector<int> scenarios;
    std::vector<int> faults;
    int n_runs = 0;
    std::uint64_t base_seed = 0;
    std::map<std::pair<int, int>, SummaryCell> cells;  // (scenario, fault)
    std::map<std::pair<int, int>, RepresentativeSeries> representative;
    std::vector<RunRecord> runs;
};

namespace detail {

inline CellStats stats_of(const std::vector<double>& xs) {
    CellStats s;
    s.n = static_cast<int>(xs.size());
    if (xs.empty()) return s;
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return s;
}

struct RunModels {
    ModeModelState model_a;
    std::optional<ModeModelState> model_b;
    std::optional<ModeModelState> model_c;
};

inline RunModels build_run_models(const EvalConfig& cfg, std::uint64_t run_seed,
                                  bool need_b, bool need_c) {
    RunModels models{
        train_initial(generate_block(1, cfg.n_train, mix64(run_seed, kStreamTrain1),
                                     cfg.noise_variance),
                      cfg.cpv_threshold, cfg.lambdas, cfg.alpha),
        std::nullopt, std::nullopt};
    if (need_b || need_c) {
        const DataMatrix train2 = generate_block(2, cfg.n_train, mix64(run_seed, kStreamTrain2),
                                                 cfg.noise_variance);
        if (need_b)
            models.model_b = continual_update(models.model_a, train2, cfg.lambdas, cfg.dc);
        if (need_c)
            models.model_c =
                train_initial(train2, cfg.cpv_threshold, cfg.lambdas, cfg.alpha, "Model C");
    }
    return models;
}

/// Situation wiring: which model monitors which block, and whether the scaler
/// is refreshed from the block's leading normal window. The plain-PCA
/// comparison (Situation 4) keeps its own training scaler.
struct SituationWiring {
    const ModeModelState* model;
    bool refresh;
};

inline SituationWiring situation_wiring(int scenario, const RunModels& models) {
    switch (scenario) {
        case 1: return {&models.model_a, false};
        case 2: return {&*models.model_b, false};
        case 3: return {&*models.model_b, true};
        case 4: return {&*models.model_c, false};
        case 5: return {&*models.model_b, true};
        default: throw UnknownScenario("scenario must be 1..5");
    }
}

}  // namespace detail

/// Repeat the full situation matrix over independently seeded runs and
/// aggregate mean/std per (situation, fault) cell.
inline ExperimentSummary run_experiments(const EvalConfig& cfg, int n_runs,
                                         std::uint64_t base_seed) {
    if (n_runs < 1) throw Error("run_experiments: n_runs must be >= 1");
    const bool need_b = std::ranges::any_of(cfg.scenarios, [](int s) { return s == 2 || s == 3 || s == 5; });
    const bool need_c = std::ranges::any_of(cfg.scenarios, [](int s) { return s == 4; });

    ExperimentSummary summary;
    summary.scenarios = cfg.scenarios;
    summary.faults = cfg.faults;
    summary.n_runs = n_runs;
    summary.base_seed = base_seed;

    std::map<std::pair<int, int>, std::vector<DetectionMetrics>> cell_runs;

    for (int r = 0; r < n_runs; ++r) {
        const std::uint64_t run_seed = base_seed + static_cast<std::uint64_t>(r);
        try {
            const auto models = detail::build_run_models(cfg, run_seed, need_b, need_c);
            for (int f : cfg.faults) {
                const FaultSpec fault = fault_spec(f, cfg.onset_sample);
                std::map<int, std::pair<DataMatrix, std::vector<std::uint8_t>>> tests;
                for (int s : cfg.scenarios) {
                    const int id = scenario_test_data_id(s);
                    if (!tests.count(id)) {
                        DataMatrix clean = generate_block(
                            id, cfg.n_test, mix64(run_seed, kStreamTestBase + static_cast<std::uint64_t>(id)),
                            cfg.noise_variance);
                        tests.emplace(id, inject_fault(clean, fault));
                    }
                }
                for (int s : cfg.scenarios) {
                    const auto wiring = detail::situation_wiring(s, models);
                    const auto& [block, labels] = tests.at(scenario_test_data_id(s));
                    std::optional<Scaler> override;
                    if (wiring.refresh) {
                        const Index win = std::min(cfg.n_scaler_samples, cfg.onset_sample - 1);
                        override = refresh_scaler(wiring.model->scaler,
                                                  DataMatrix(block.values.topRows(win)),
                                                  cfg.std_tol);
                    }
                    StatisticSeries series = monitor_block(*wiring.model, block, override);
                    const DetectionMetrics m = compute_metrics(series.alarms, cfg.onset_sample);
                    cell_runs[{s, f}].push_back(m);
                    summary.runs.push_back({r, run_seed, s, f, m});
                    if (r == 0)
                        summary.representative[{s, f}] = {std::move(series),
                                                          wiring.model->limits, cfg.onset_sample};
                }
            }
        } catch (const Error& e) {
            throw Error("run " + std::to_string(r) + " (seed " + std::to_string(run_seed) +
                        ") failed: " + e.what());
        }
    }

    for (auto& [key, ms] : cell_runs) {
        SummaryCell cell;
        std::vector<double> fdr, far, dd;
        for (const auto& m : ms) {
            fdr.push_back(m.fdr);
            far.push_back(m.far);
            if (m.dd)
                dd.push_back(static_cast<double>(*m.dd));
            else
                ++cell.dd_undetected;
        }
        cell.fdr = detail::stats_of(fdr);
        cell.far = detail::stats_of(far);
        cell.dd = detail::stats_of(dd);
        summary.cells[key] = cell;
    }
    return summary;
}

namespace detail {

inline std::string fmt_fixed(double v, int digits = 4) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

/// One two-panel chart (T^2 on top, SPE below), log-scaled, with dashed
/// control-limit lines and the fault onset marked.
inline std::string render_statistic_svg(const RepresentativeSeries& rep,
                                        const std::string& title) {
    constexpr double kW = 900.0, kPanelH = 220.0, kTop = 30.0, kGap = 40.0;
    constexpr double kLeft = 60.0, kRight = 20.0;
    const double total_h = kTop + 2 * kPanelH + kGap + 30.0;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\""
        << total_h << "\" viewBox=\"0 0 " << kW << " " << total_h << "\">\n";
    svg << "<text x=\"" << kLeft << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">"
        << title << "</text>\n";

    const std::size_t n = rep.series.t2.size();
    struct Panel {
        const std::vector<double>* values;
        double limit;
        const char* name;
        double y0;
    };
    const Panel panels[2] = {{&rep.series.t2, rep.limits.t2_limit, "T2", kTop},
                             {&rep.series.spe, rep.limits.spe_limit, "SPE", kTop + kPanelH + kGap}};
    for (const Panel& p : panels) {
        double lo = p.limit, hi = p.limit;
        for (double v : *p.values) {
            if (v > 0.0) lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        lo = std::max(lo, hi * 1e-12);
        const double llo = std::log10(lo) - 0.2, lhi = std::log10(hi) + 0.2;
        auto ymap = [&](double v) {
            const double lv = std::log10(std::max(v, lo * 1e-3));
            return p.y0 + kPanelH - kPanelH * (lv - llo) / (lhi - llo);
        };
        auto xmap = [&](std::size_t i) {
            return kLeft + (kW - kLeft - kRight) * static_cast<double>(i) /
                               static_cast<double>(n > 1 ? n - 1 : 1);
        };
        svg << "<g class=\"panel\">\n";
        svg << "<rect x=\"" << kLeft << "\" y=\"" << p.y0 << "\" width=\"" << kW - kLeft - kRight
            << "\" height=\"" << kPanelH << "\" fill=\"none\" stroke=\"#888\"/>\n";
        svg << "<text x=\"10\" y=\"" << p.y0 + kPanelH / 2
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << p.name << "</text>\n";
        svg << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1\" points=\"";
        for (std::size_t i = 0; i < n; ++i) {
            if (i) svg << ' ';
            svg << fmt_fixed(xmap(i), 2) << ',' << fmt_fixed(ymap((*p.values)[i]), 2);
        }
        svg << "\"/>\n";
        const double ly = ymap(p.limit);
        svg << "<line class=\"limit-line\" x1=\"" << kLeft << "\" y1=\"" << fmt_fixed(ly, 2)
            << "\" x2=\"" << kW - kRight << "\" y2=\"" << fmt_fixed(ly, 2)
            << "\" stroke=\"#d62728\" stroke-dasharray=\"6,4\"/>\n";
        if (rep.onset_sample >= 1 && static_cast<std::size_t>(rep.onset_sample) <= n) {
            const double ox = xmap(static_cast<std::size_t>(rep.onset_sample - 1));
            svg << "<line class=\"onset-line\" x1=\"" << fmt_fixed(ox, 2) << "\" y1=\"" << p.y0
                << "\" x2=\"" << fmt_fixed(ox, 2) << "\" y2=\"" << p.y0 + kPanelH
                << "\" stroke=\"#2ca02c\" stroke-dasharray=\"2,3\"/>\n";
        }
        svg << "</g>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace detail

/// Write summary.csv (situation rows x fault-metric columns, mean and std
/// lines per situation), per-run metrics.csv, and one SVG chart per
/// situation/fault pair from the first run's series.
inline void emit_report(const ExperimentSummary& summary, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (!std::filesystem::is_directory(out_dir))
        throw IoFailure("output directory unavailable: " + out_dir.string());

    {
        auto out = detail::open_out(out_dir / "summary.csv");
        out << "situation,stat";
        for (int f : summary.faults)
            out << ",f" << f << "_fdr,f" << f << "_far,f" << f << "_dd";
        out << "\n";
        for (int s : summary.scenarios) {
            for (const char* stat : {"mean", "std"}) {
                out << s << "," << stat;
                for (int f : summary.faults) {
                    const auto it = summary.cells.find({s, f});
                    if (it == summary.cells.end()) {
                        out << ",,,";
                        continue;
                    }
                    const SummaryCell& c = it->second;
                    const bool mean = stat[0] == 'm';
                    out << "," << detail::fmt_fixed(mean ? c.fdr.mean : c.fdr.stddev);
                    out << "," << detail::fmt_fixed(mean ? c.far.mean : c.far.stddev);
                    if (c.dd.n > 0)
                        out << "," << detail::fmt_fixed(mean ? c.dd.mean : c.dd.stddev);
                    else
                        out << ",-";
                }
                out << "\n";
            }
        }
        if (!out) throw IoFailure("write failed: summary.csv");
    }

    {
        auto out = detail::open_out(out_dir / "metrics.csv");
        out << "run,seed,situation,fault,fdr,far,dd\n";
        for (const RunRecord& r : summary.runs) {
            out << r.run << "," << r.seed << "," << r.scenario << "," << r.fault << ","
                << detail::fmt_fixed(r.metrics.fdr) << "," << detail::fmt_fixed(r.metrics.far)
                << ",";
            if (r.metrics.dd) out << *r.metrics.dd;
            out << "\n";
        }
        if (!out) throw IoFailure("write failed: metrics.csv");
    }

    for (const auto& [key, rep] : summary.representative) {
        const auto [s, f] = key;
        const std::string name =
            "situation" + std::to_string(s) + "_fault" + std::to_string(f) + ".svg";
        auto out = detail::open_out(out_dir / name);
        out << detail::render_statistic_svg(
            rep, "Situation " + std::to_string(s) + ", Fault " + std::to_string(f));
        if (!out) throw IoFailure("write failed: " + name);
    }
}

// ---------------------------------------------------------------------------
// Gate: the evaluation-level bands checked by `evaluate --gate`.

struct GateCheck {
    std::string name;
    bool pass = false;
    std::string detail;
};

namespace detail {

inline const SummaryCell* find_cell(const ExperimentSummary& s, int scenario, int fault) {
    const auto it = s.cells.find({scenario, fault});
    return it == s.cells.end() ? nullptr : &it->second;
}

inline void check_cell(std::vector<GateCheck>& out, int scenario, int fault,
                       const std::string& what, double value_or_nan, bool pass) {
    GateCheck c;
    c.name = "situation " + std::to_string(scenario) + " fault " + std::to_string(fault) + ": " + what;
    c.pass = pass;
    c.detail = std::isnan(value_or_nan) ? "cell missing" : "measured " + fmt_fixed(value_or_nan);
    out.push_back(std::move(c));
}

}  // namespace detail

/// Benchmark bands for the five-situation, three-fault study.
inline std::vector<GateCheck> gate_checks(const ExperimentSummary& s) {
    std::vector<GateCheck> out;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto cell = [&](int sc, int f) { return detail::find_cell(s, sc, f); };

    for (int sc : {1, 2}) {
        for (int f : {1, 2}) {
            const auto* c = cell(sc, f);
            detail::check_cell(out, sc, f, "mean FDR >= 99.5", c ? c->fdr.mean : nan,
                               c && c->fdr.mean >= 99.5);
            detail::check_cell(out, sc, f, "mean FAR <= 1", c ? c->far.mean : nan,
                               c && c->far.mean <= 1.0);
            detail::check_cell(out, sc, f, "mean DD <= 1",
                               c && c->dd.n > 0 ? c->dd.mean : nan,
                               c && c->dd.n > 0 && c->dd.mean <= 1.0);
        }
    }
    for (int f : {1, 2}) {
        const auto* c = cell(3, f);
        detail::check_cell(out, 3, f, "mean FDR >= 99.5", c ? c->fdr.mean : nan,
                           c && c->fdr.mean >= 99.5);
    }
    for (int f : {1, 2, 3}) {
        const auto* c = cell(3, f);
        detail::check_cell(out, 3, f, "mean FAR <= 10", c ? c->far.mean : nan,
                           c && c->far.mean <= 10.0);
    }
    for (int f : {1, 2, 3}) {
        const auto* c = cell(4, f);
        detail::check_cell(out, 4, f, "mean FAR >= 20", c ? c->far.mean : nan,
                           c && c->far.mean >= 20.0);
    }
    for (int f : {1, 2}) {
        const auto* c = cell(5, f);
        detail::check_cell(out, 5, f, "mean FDR >= 99.5", c ? c->fdr.mean : nan,
                           c && c->fdr.mean >= 99.5);
    }
    for (int f : {1, 2, 3}) {
        const auto* c = cell(5, f);
        detail::check_cell(out, 5, f, "mean FAR <= 10", c ? c->far.mean : nan,
                           c && c->far.mean <= 10.0);
    }
    for (int sc : {1, 2}) {
        const auto* c = cell(sc, 3);
        const bool ok = c && c->dd.n > 0 && c->dd.mean >= 2.0 && c->dd.mean <= 12.0;
        detail::check_cell(out, sc, 3, "mean DD in [2, 12]",
                           c && c->dd.n > 0 ? c->dd.mean : nan, ok);
    }
    for (int sc : {3, 4, 5}) {
        const auto* c = cell(sc, 3);
        const bool ok = c && c->dd.n > 0 && c->dd.mean >= 8.0 && c->dd.mean <= 30.0;
        detail::check_cell(out, sc, 3, "mean DD in [8, 30]",
                           c && c->dd.n > 0 ? c->dd.mean : nan, ok);
    }
    return out;
}

}  // namespace pcaewc
