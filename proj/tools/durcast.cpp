// durcast: build recovery tables, run the limiting-case scenarios, ingest
// forecast submissions, recover priors, and analyze epidemic signals.
//
// Every run writes a manifest with the fully resolved configuration; running
// any subcommand again from that manifest reproduces the artifacts byte for
// byte. Exit codes: 0 success, 1 input error, 2 infeasible-model error,
// 3 internal error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "durcast/dates.hpp"
#include "durcast/duration_model.hpp"
#include "durcast/errors.hpp"
#include "durcast/forecast.hpp"
#include "durcast/prior_recovery.hpp"
#include "durcast/scenario.hpp"
#include "durcast/signal.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace durcast;

namespace {

struct RunConfig {
    std::string subcommand;

    // inputs and outputs
    std::string forecasts_path;
    std::string cases_path;
    std::string table_path;   // prebuilt table to reuse
    std::string pairs_path;   // (t_past, t_predicted) batch for `recover`
    std::string daily_path;   // aggregated series for `analyze`
    std::string out_dir;
    std::string date_column = "Report Date";
    std::string count_column = "Total Cases";

    // calendar anchors
    std::string t0 = "2021-11-29";
    std::string peak = "2022-01-13";
    std::string from = "2021-11-12";
    std::string to = "2022-01-14";

    // table parameters
    double lambda_min = 20.0;
    double lambda_max = 200.0;
    double lambda_step = 1.0;
    int samples = 1000;
    std::uint64_t seed = 7;
    std::string rule = "median";
    double t_past_min = 0.0;
    double t_past_max = -1.0;  // derived when negative
    unsigned threads = 0;

    // scenario parameters
    std::string mode;
    double fixed_value = -1.0;
    std::string unit = "days";
    double scenario_lambda = -1.0;

    // single recovery query
    double q_t_past = -1.0;
    double q_t_predicted = -1.0;

    // analysis parameters
    int degree = 6;
    double sdar_discount = 0.01;
    int sdar_order = 3;
    int sdar_smooth = 5;
    int top_k = 3;
    double threshold = -1.0;  // unset when negative
    int case_smooth_days = 7;
};

ordered_json config_to_json(const RunConfig& c) {
    ordered_json j;
    j["subcommand"] = c.subcommand;
    j["forecasts"] = c.forecasts_path;
    j["cases"] = c.cases_path;
    j["table"] = c.table_path;
    j["pairs"] = c.pairs_path;
    j["daily"] = c.daily_path;
    j["out"] = c.out_dir;
    j["date_column"] = c.date_column;
    j["count_column"] = c.count_column;
    j["t0"] = c.t0;
    j["peak"] = c.peak;
    j["from"] = c.from;
    j["to"] = c.to;
    j["lambda_min"] = c.lambda_min;
    j["lambda_max"] = c.lambda_max;
    j["lambda_step"] = c.lambda_step;
    j["samples"] = c.samples;
    j["seed"] = c.seed;
    j["rule"] = c.rule;
    j["t_past_min"] = c.t_past_min;
    j["t_past_max"] = c.t_past_max;
    j["threads"] = c.threads;
    j["mode"] = c.mode;
    j["fixed"] = c.fixed_value;
    j["unit"] = c.unit;
    j["scenario_lambda"] = c.scenario_lambda;
    j["t_past"] = c.q_t_past;
    j["t_predicted"] = c.q_t_predicted;
    j["degree"] = c.degree;
    j["sdar_discount"] = c.sdar_discount;
    j["sdar_order"] = c.sdar_order;
    j["sdar_smooth"] = c.sdar_smooth;
    j["top_k"] = c.top_k;
    j["threshold"] = c.threshold;
    j["case_smooth_days"] = c.case_smooth_days;
    return j;
}

void config_from_json(const ordered_json& j, RunConfig& c) {
    c.subcommand = j.value("subcommand", c.subcommand);
    c.forecasts_path = j.value("forecasts", c.forecasts_path);
    c.cases_path = j.value("cases", c.cases_path);
    c.table_path = j.value("table", c.table_path);
    c.pairs_path = j.value("pairs", c.pairs_path);
    c.daily_path = j.value("daily", c.daily_path);
    c.out_dir = j.value("out", c.out_dir);
    c.date_column = j.value("date_column", c.date_column);
    c.count_column = j.value("count_column", c.count_column);
    c.t0 = j.value("t0", c.t0);
    c.peak = j.value("peak", c.peak);
    c.from = j.value("from", c.from);
    c.to = j.value("to", c.to);
    c.lambda_min = j.value("lambda_min", c.lambda_min);
    c.lambda_max = j.value("lambda_max", c.lambda_max);
    c.lambda_step = j.value("lambda_step", c.lambda_step);
    c.samples = j.value("samples", c.samples);
    c.seed = j.value("seed", c.seed);
    c.rule = j.value("rule", c.rule);
    c.t_past_min = j.value("t_past_min", c.t_past_min);
    c.t_past_max = j.value("t_past_max", c.t_past_max);
    c.threads = j.value("threads", c.threads);
    c.mode = j.value("mode", c.mode);
    c.fixed_value = j.value("fixed", c.fixed_value);
    c.unit = j.value("unit", c.unit);
    c.scenario_lambda = j.value("scenario_lambda", c.scenario_lambda);
    c.q_t_past = j.value("t_past", c.q_t_past);
    c.q_t_predicted = j.value("t_predicted", c.q_t_predicted);
    c.degree = j.value("degree", c.degree);
    c.sdar_discount = j.value("sdar_discount", c.sdar_discount);
    c.sdar_order = j.value("sdar_order", c.sdar_order);
    c.sdar_smooth = j.value("sdar_smooth", c.sdar_smooth);
    c.top_k = j.value("top_k", c.top_k);
    c.threshold = j.value("threshold", c.threshold);
    c.case_smooth_days = j.value("case_smooth_days", c.case_smooth_days);
}

// ---- small helpers ---------------------------------------------------------

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

void parse_range(const std::string& text, double& lo, double& hi) {
    const auto pos = text.find("..");
    try {
        if (pos == std::string::npos) {
            lo = hi = std::stod(text);
            return;
        }
        lo = std::stod(text.substr(0, pos));
        hi = std::stod(text.substr(pos + 2));
    } catch (const std::exception&) {
        throw parse_error("cannot parse range '" + text + "' (expected A..B)");
    }
    if (hi < lo) throw parse_error("empty range '" + text + "'");
}

std::vector<double> unit_grid(double lo, double hi) {
    std::vector<double> g;
    for (double v = lo; v <= hi + 1e-9; v += 1.0) g.push_back(v);
    return g;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open input file", path, 0);
    return in;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

void write_json(const fs::path& path, const ordered_json& j) {
    write_file(path, j.dump(2) + "\n");
}

fs::path resolve_out_dir(RunConfig& config) {
    if (config.out_dir.empty()) {
        if (const char* env = std::getenv("DURCAST_OUT")) config.out_dir = env;
        if (config.out_dir.empty()) config.out_dir = ".";
    }
    fs::path dir(config.out_dir);
    fs::create_directories(dir);
    return dir;
}

void write_manifest(const fs::path& dir, const RunConfig& config) {
    ordered_json j;
    j["tool"] = "durcast";
    j["manifest_version"] = 1;
    j["config"] = config_to_json(config);
    write_json(dir / "manifest.json", j);
}

// ---- shared stages ---------------------------------------------------------

RecoveryTable obtain_table(const RunConfig& config, double needed_t_past_max,
                           const fs::path& dir, bool save_artifact) {
    if (!config.table_path.empty()) {
        auto in = open_input(config.table_path);
        return load_table(in);
    }
    double tp_max = config.t_past_max;
    if (tp_max < 0.0) tp_max = needed_t_past_max;
    RecoveryTable table = build_table(config.lambda_min, config.lambda_max, config.lambda_step,
                                      unit_grid(config.t_past_min, tp_max), config.samples,
                                      config.seed, decision_rule_from_string(config.rule),
                                      config.threads);
    if (save_artifact) {
        std::ostringstream buf;
        save_table(table, buf);
        write_file(dir / "table.txt", buf.str());
    }
    return table;
}

std::string trajectory_to_csv(const Trajectory& traj) {
    std::ostringstream out;
    write_trajectory_csv(traj, out);
    return out.str();
}

struct IngestResult {
    std::vector<ForecastRecord> records;
    std::vector<Prediction> all;        // one per record, same order
    std::vector<FilterOutcome> outcome; // parallel to all
    std::vector<Prediction> kept;
    FilterReport report;
};

IngestResult ingest_forecasts(const RunConfig& config) {
    IngestResult result;
    auto in = open_input(config.forecasts_path);
    result.records = read_forecasts_jsonl(in, config.forecasts_path);
    const CivilDate t0 = parse_date(config.t0);
    std::set<std::string> in_ids, out_ids;
    result.report.input_count = static_cast<std::int64_t>(result.records.size());
    for (const auto& rec : result.records) {
        const Prediction p = make_prediction(rec, t0);
        const FilterOutcome oc =
            classify_prediction(p, rec.window_start, rec.window_end, t0);
        result.all.push_back(p);
        result.outcome.push_back(oc);
        in_ids.insert(p.participant_id);
        switch (oc) {
            case FilterOutcome::endpoint: ++result.report.removed_endpoint; break;
            case FilterOutcome::pre_t0: ++result.report.removed_pre_t0; break;
            case FilterOutcome::impossible: ++result.report.removed_impossible; break;
            case FilterOutcome::keep:
                result.kept.push_back(p);
                out_ids.insert(p.participant_id);
                break;
        }
    }
    result.report.output_count = static_cast<std::int64_t>(result.kept.size());
    result.report.participants_in = static_cast<std::int64_t>(in_ids.size());
    result.report.participants_out = static_cast<std::int64_t>(out_ids.size());
    return result;
}

const char* outcome_name(FilterOutcome oc) {
    switch (oc) {
        case FilterOutcome::keep: return "keep";
        case FilterOutcome::endpoint: return "endpoint";
        case FilterOutcome::pre_t0: return "pre_t0";
        case FilterOutcome::impossible: return "impossible";
    }
    return "?";
}

ordered_json filter_report_json(const FilterReport& r) {
    ordered_json j;
    j["input_count"] = r.input_count;
    j["removed_endpoint"] = r.removed_endpoint;
    j["removed_pre_t0"] = r.removed_pre_t0;
    j["removed_impossible"] = r.removed_impossible;
    j["output_count"] = r.output_count;
    j["participants_in"] = r.participants_in;
    j["participants_out"] = r.participants_out;
    return j;
}

std::string predictions_csv(const IngestResult& ing) {
    std::ostringstream out;
    out << "participant_id,created_at,prediction_date,predicted_date,t_past,t_predicted,"
           "horizon,filter\n";
    for (std::size_t i = 0; i < ing.all.size(); ++i) {
        const auto& p = ing.all[i];
        out << p.participant_id << ',' << ing.records[i].created_at << ','
            << to_string(p.prediction_date) << ',' << to_string(p.predicted_date) << ','
            << p.t_past << ',' << p.t_predicted << ',' << p.horizon << ','
            << outcome_name(ing.outcome[i]) << '\n';
    }
    return out.str();
}

std::string daily_csv(const std::vector<DailyAggregate>& rows) {
    std::ostringstream out;
    out << "date,mean_t_predicted,mean_horizon,n\n";
    for (const auto& r : rows)
        out << to_string(r.date) << ',' << fmt(r.mean_t_predicted) << ',' << fmt(r.mean_horizon)
            << ',' << r.count << '\n';
    return out.str();
}

std::string ground_truth_csv(const std::vector<DailyAggregate>& rows, CivilDate peak) {
    std::vector<CivilDate> dates;
    for (const auto& r : rows) dates.push_back(r.date);
    const auto horizon = ground_truth_horizon(dates, peak);
    std::ostringstream out;
    out << "date,ground_truth_horizon\n";
    for (std::size_t i = 0; i < dates.size(); ++i)
        out << to_string(dates[i]) << ',' << horizon[i] << '\n';
    return out.str();
}

// ---- subcommand runners ----------------------------------------------------

int run_build_table(RunConfig& config) {
    const fs::path dir = resolve_out_dir(config);
    double tp_max = config.t_past_max;
    if (tp_max < 0.0) {
        tp_max = config.lambda_max;
        config.t_past_max = tp_max;
    }
    const RecoveryTable table = build_table(
        config.lambda_min, config.lambda_max, config.lambda_step,
        unit_grid(config.t_past_min, tp_max), config.samples, config.seed,
        decision_rule_from_string(config.rule), config.threads);
    std::ostringstream buf;
    save_table(table, buf);
    write_file(dir / "table.txt", buf.str());
    write_manifest(dir, config);
    std::cout << "table: " << (dir / "table.txt").string() << " (" << table.lambda_grid.size()
              << " x " << table.t_past_grid.size() << " cells)\n";
    return 0;
}

int run_simulate(RunConfig& config) {
    const fs::path dir = resolve_out_dir(config);
    if (config.fixed_value < 0.0)
        throw std::invalid_argument("simulate: --fixed is required");
    double lo = 0.0, hi = 0.0;
    if (config.t_past_max < 0.0)
        throw std::invalid_argument("simulate: --t-past A..B is required");
    lo = config.t_past_min;
    hi = config.t_past_max;

    Trajectory traj;
    if (config.mode == "invariant-prediction") {
        const RecoveryTable table = obtain_table(config, std::max(hi, config.fixed_value), dir,
                                                 /*save_artifact=*/false);
        ScenarioConfig sc;
        sc.mode = ScenarioMode::invariant_prediction;
        sc.fixed_value = config.fixed_value;
        sc.t_past_range = unit_grid(lo, hi);
        sc.unit = config.unit;
        sc.table = &table;
        traj = run_invariant_prediction(sc);
    } else if (config.mode == "invariant-prior") {
        const SampledPrior prior =
            sample_poisson_prior(config.fixed_value, config.samples, config.seed);
        ScenarioConfig sc;
        sc.mode = ScenarioMode::invariant_prior;
        sc.fixed_value = config.fixed_value;
        sc.t_past_range = unit_grid(lo, hi);
        sc.unit = config.unit;
        sc.rule = decision_rule_from_string(config.rule);
        sc.prior = &prior;
        traj = run_invariant_prior(sc);
    } else {
        throw std::invalid_argument(
            "simulate: --mode must be invariant-prediction or invariant-prior");
    }
    write_file(dir / "trajectory.csv", trajectory_to_csv(traj));
    write_manifest(dir, config);
    std::cout << "trajectory: " << (dir / "trajectory.csv").string() << " (" << traj.points.size()
              << " points)\n";
    return 0;
}

std::string recovered_csv_rows(const RecoveryTable& table,
                               const std::vector<std::pair<double, double>>& pairs) {
    const auto recs = recover_trajectory(table, pairs);
    std::ostringstream out;
    out << "t_past,t_predicted,lambda,prior_median,match_error,status\n";
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        out << fmt(pairs[i].first) << ',' << fmt(pairs[i].second) << ',';
        if (recs[i]) {
            out << fmt(recs[i]->lambda) << ',' << fmt(recs[i]->prior_median) << ','
                << fmt(recs[i]->match_error) << ",ok\n";
        } else {
            out << "nan,nan,nan,no_candidate\n";
        }
    }
    return out.str();
}

int run_recover(RunConfig& config) {
    const fs::path dir = resolve_out_dir(config);
    if (config.table_path.empty())
        throw std::invalid_argument("recover: --table is required");
    auto in = open_input(config.table_path);
    const RecoveryTable table = load_table(in);

    std::vector<std::pair<double, double>> pairs;
    if (!config.pairs_path.empty()) {
        auto pin = open_input(config.pairs_path);
        std::string line;
        long lineno = 0;
        while (std::getline(pin, line)) {
            ++lineno;
            if (line.empty() || line[0] == '#' || line.rfind("t_past", 0) == 0) continue;
            const auto comma = line.find(',');
            if (comma == std::string::npos)
                throw parse_error("pairs file: expected t_past,t_predicted", config.pairs_path,
                                  lineno);
            try {
                pairs.emplace_back(std::stod(line.substr(0, comma)),
                                   std::stod(line.substr(comma + 1)));
            } catch (const std::exception&) {
                throw parse_error("pairs file: bad numbers", config.pairs_path, lineno);
            }
        }
        const std::string csv = recovered_csv_rows(table, pairs);
        write_file(dir / "recovered.csv", csv);
        write_manifest(dir, config);
        return 0;
    }

    if (config.q_t_past < 0.0 || config.q_t_predicted < 0.0)
        throw std::invalid_argument("recover: need --pairs or both --t-past and --t-predicted");
    // single query: an infeasible recovery is a hard error (exit code 2)
    const RecoveredPrior rec = recover_prior(table, config.q_t_past, config.q_t_predicted);
    std::ostringstream out;
    out << "t_past,t_predicted,lambda,prior_median,match_error,status\n"
        << fmt(config.q_t_past) << ',' << fmt(config.q_t_predicted) << ',' << fmt(rec.lambda)
        << ',' << fmt(rec.prior_median) << ',' << fmt(rec.match_error) << ",ok\n";
    write_file(dir / "recovered.csv", out.str());
    write_manifest(dir, config);
    std::cout << out.str();
    return 0;
}

int run_ingest(RunConfig& config) {
    const fs::path dir = resolve_out_dir(config);
    if (config.forecasts_path.empty())
        throw std::invalid_argument("ingest: --forecasts is required");
    const IngestResult ing = ingest_forecasts(config);
    write_file(dir / "predictions.csv", predictions_csv(ing));
    write_json(dir / "filter_report.json", filter_report_json(ing.report));
    const auto rows = aggregate_daily(ing.kept);
    write_file(dir / "daily.csv", daily_csv(rows));
    if (!config.peak.empty())
        write_file(dir / "ground_truth.csv", ground_truth_csv(rows, parse_date(config.peak)));
    write_manifest(dir, config);
    std::cout << "predictions: " << ing.report.input_count << " in, " << ing.report.output_count
              << " kept\n";
    return 0;
}

struct CaseAnalysis {
    std::vector<CivilDate> dates;   // analysis window, daily
    std::vector<double> raw;        // daily new cases
    std::vector<double> smoothed;
    TrendFit fit;
    ChangePointReport cps;
};

CaseAnalysis analyze_cases(const RunConfig& config) {
    auto in = open_input(config.cases_path);
    const auto [dates, cumulative] =
        read_case_csv(in, config.date_column, config.count_column, config.cases_path);
    const CaseCountSeries series = transform_cases(dates, cumulative, config.case_smooth_days);

    const CivilDate from = parse_date(config.from);
    const CivilDate to = parse_date(config.to);
    CaseAnalysis out;
    for (std::size_t i = 0; i < series.daily.size(); ++i) {
        const CivilDate d = series.daily_date(i);
        if (d < from || d > to) continue;
        out.dates.push_back(d);
        out.raw.push_back(series.daily[i]);
        out.smoothed.push_back(series.smoothed[i]);
    }
    if (out.dates.empty())
        throw insufficient_data_error("analyze: no case data inside the requested window");
    out.fit = fit_trend(out.dates, out.smoothed, config.degree);
    const SdarParams params{config.sdar_discount, config.sdar_order, config.sdar_smooth};
    std::optional<double> threshold;
    if (config.threshold >= 0.0) threshold = config.threshold;
    out.cps = sdar_change_points(out.smoothed, params, config.top_k, threshold);
    return out;
}

std::string series_csv(const std::vector<CivilDate>& dates, const std::vector<double>& raw,
                       const std::vector<double>& smoothed, const TrendFit& fit,
                       const std::vector<double>* cp_scores) {
    std::ostringstream out;
    out << "date,raw,smoothed,fitted,d1,d2,cp_score\n";
    for (std::size_t i = 0; i < dates.size(); ++i) {
        out << to_string(dates[i]) << ',' << fmt(raw[i]) << ',' << fmt(smoothed[i]) << ','
            << fmt(fit.fitted[i]) << ',' << fmt(fit.d1[i]) << ',' << fmt(fit.d2[i]) << ','
            << (cp_scores ? fmt((*cp_scores)[i]) : "nan") << '\n';
    }
    return out.str();
}

ordered_json change_points_json(const CaseAnalysis& analysis, const RunConfig& config) {
    ordered_json j;
    j["params"] = {{"discount_rate", config.sdar_discount},
                   {"order", config.sdar_order},
                   {"smoothing_days", config.sdar_smooth}};
    j["top_k"] = config.top_k;
    if (config.threshold >= 0.0) j["threshold"] = config.threshold;
    j["detected"] = ordered_json::array();
    int rank = 1;
    for (const auto& cp : analysis.cps.detected) {
        ordered_json d;
        d["rank"] = rank++;
        d["index"] = cp.index;
        d["date"] = to_string(analysis.dates[cp.index]);
        d["score"] = cp.score;
        j["detected"].push_back(d);
    }
    return j;
}

std::pair<std::vector<CivilDate>, std::vector<double>> load_daily_csv(const std::string& path) {
    auto in = open_input(path);
    std::string line;
    long lineno = 0;
    std::vector<CivilDate> dates;
    std::vector<double> means;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.rfind("date,", 0) == 0) continue;
        const auto fields = durcast::detail::split_csv_line(line);
        if (fields.size() < 2) throw parse_error("daily series: short row", path, lineno);
        try {
            dates.push_back(parse_date(fields[0]));
            means.push_back(std::stod(fields[1]));
        } catch (const std::exception& e) {
            throw parse_error(std::string("daily series: ") + e.what(), path, lineno);
        }
    }
    return {dates, means};
}

std::string joint_csv(const JointDynamics& joint) {
    std::ostringstream out;
    out << "date,case_d1,prediction_d1,opposed\n";
    for (std::size_t i = 0; i < joint.dates.size(); ++i) {
        const bool opp = joint.case_d1[i] > 0.0 && joint.prediction_d1[i] < 0.0;
        out << to_string(joint.dates[i]) << ',' << fmt(joint.case_d1[i]) << ','
            << fmt(joint.prediction_d1[i]) << ',' << (opp ? 1 : 0) << '\n';
    }
    return out.str();
}

int run_analyze(RunConfig& config) {
    const fs::path dir = resolve_out_dir(config);
    if (config.cases_path.empty())
        throw std::invalid_argument("analyze: --cases is required");
    const CaseAnalysis analysis = analyze_cases(config);
    write_file(dir / "case_series.csv",
               series_csv(analysis.dates, analysis.raw, analysis.smoothed, analysis.fit,
                          &analysis.cps.scores));
    write_json(dir / "change_points.json", change_points_json(analysis, config));

    if (!config.daily_path.empty()) {
        const auto [pdates, pmeans] = load_daily_csv(config.daily_path);
        const TrendFit pred_fit = fit_trend(pdates, pmeans, config.degree);
        const auto pred_smoothed = rolling_mean_centered(pmeans, 4);
        write_file(dir / "prediction_series.csv",
                   series_csv(pdates, pmeans, pred_smoothed, pred_fit, nullptr));
        const JointDynamics joint = joint_dynamics(analysis.fit, pred_fit);
        write_file(dir / "joint.csv", joint_csv(joint));
        ordered_json js;
        js["overlap_days"] = joint.dates.size();
        js["sign_opposition_fraction"] = joint.sign_opposition_fraction;
        write_json(dir / "joint_summary.json", js);
    }
    write_manifest(dir, config);
    std::cout << "change points: " << analysis.cps.detected.size() << "\n";
    return 0;
}

int run_pipeline(RunConfig& config) {
    const fs::path dir = resolve_out_dir(config);
    if (config.forecasts_path.empty() || config.cases_path.empty())
        throw std::invalid_argument("pipeline: --forecasts and --cases are required");

    // forecast side: ingest, filter, aggregate
    const IngestResult ing = ingest_forecasts(config);
    write_file(dir / "predictions.csv", predictions_csv(ing));
    write_json(dir / "filter_report.json", filter_report_json(ing.report));
    const auto rows = aggregate_daily(ing.kept);
    write_file(dir / "daily.csv", daily_csv(rows));
    if (!config.peak.empty())
        write_file(dir / "ground_truth.csv", ground_truth_csv(rows, parse_date(config.peak)));

    // recovery table: reuse or build to cover every surviving t_past
    const CivilDate t0 = parse_date(config.t0);
    double needed = 0.0;
    for (const auto& rec : ing.records)
        needed = std::max(needed, static_cast<double>(rec.window_end - t0));
    const RecoveryTable table = obtain_table(config, needed, dir, /*save_artifact=*/true);

    // per-prediction prior recovery
    std::vector<std::pair<double, double>> pairs;
    for (const auto& p : ing.kept)
        pairs.emplace_back(static_cast<double>(p.t_past), static_cast<double>(p.t_predicted));
    const auto recs = recover_trajectory(table, pairs);
    {
        std::ostringstream out;
        out << "participant_id,prediction_date,t_past,t_predicted,lambda,prior_median,"
               "match_error,status\n";
        for (std::size_t i = 0; i < ing.kept.size(); ++i) {
            const auto& p = ing.kept[i];
            out << p.participant_id << ',' << to_string(p.prediction_date) << ',' << p.t_past
                << ',' << p.t_predicted << ',';
            if (recs[i]) {
                out << fmt(recs[i]->lambda) << ',' << fmt(recs[i]->prior_median) << ','
                    << fmt(recs[i]->match_error) << ",ok\n";
            } else {
                out << "nan,nan,nan,no_candidate\n";
            }
        }
        write_file(dir / "recovered.csv", out.str());
    }

    // limiting-case scenario comparisons around the observed data
    {
        std::vector<int> preds;
        for (const auto& p : ing.kept) preds.push_back(p.t_predicted);
        std::sort(preds.begin(), preds.end());
        double fixed = config.fixed_value;
        if (fixed < 0.0 && !preds.empty())
            fixed = static_cast<double>(preds[(preds.size() - 1) / 2]);
        if (fixed >= 0.0) {
            ScenarioConfig sc;
            sc.mode = ScenarioMode::invariant_prediction;
            sc.fixed_value = fixed;
            sc.t_past_range = unit_grid(0.0, fixed);
            sc.unit = config.unit;
            sc.table = &table;
            write_file(dir / "scenario_invariant_prediction.csv",
                       trajectory_to_csv(run_invariant_prediction(sc)));
        }
        std::vector<double> lambdas;
        for (const auto& rec : recs)
            if (rec) lambdas.push_back(rec->lambda);
        std::sort(lambdas.begin(), lambdas.end());
        double lam = config.scenario_lambda;
        if (lam < 0.0 && !lambdas.empty()) lam = lambdas[(lambdas.size() - 1) / 2];
        if (lam > 0.0) {
            const SampledPrior prior = sample_poisson_prior(lam, config.samples, config.seed);
            ScenarioConfig sc;
            sc.mode = ScenarioMode::invariant_prior;
            sc.fixed_value = lam;
            sc.t_past_range = unit_grid(0.0, std::floor(lam) + 30.0);
            sc.unit = config.unit;
            sc.rule = decision_rule_from_string(config.rule);
            sc.prior = &prior;
            write_file(dir / "scenario_invariant_prior.csv",
                       trajectory_to_csv(run_invariant_prior(sc)));
        }
    }

    // signal side: case-count analysis, prediction trend, joint dynamics
    const CaseAnalysis analysis = analyze_cases(config);
    write_file(dir / "case_series.csv",
               series_csv(analysis.dates, analysis.raw, analysis.smoothed, analysis.fit,
                          &analysis.cps.scores));
    write_json(dir / "change_points.json", change_points_json(analysis, config));

    std::vector<CivilDate> pdates;
    std::vector<double> pmeans;
    for (const auto& r : rows) {
        pdates.push_back(r.date);
        pmeans.push_back(r.mean_t_predicted);
    }
    const TrendFit pred_fit = fit_trend(pdates, pmeans, config.degree);
    write_file(dir / "prediction_series.csv",
               series_csv(pdates, pmeans, rolling_mean_centered(pmeans, 4), pred_fit, nullptr));
    const JointDynamics joint = joint_dynamics(analysis.fit, pred_fit);
    write_file(dir / "joint.csv", joint_csv(joint));
    {
        ordered_json js;
        js["overlap_days"] = joint.dates.size();
        js["sign_opposition_fraction"] = joint.sign_opposition_fraction;
        write_json(dir / "joint_summary.json", js);
    }

    write_manifest(dir, config);
    std::cout << "pipeline complete: " << ing.report.output_count << " predictions, "
              << analysis.cps.detected.size() << " change points\n";
    return 0;
}

// ---- wiring ----------------------------------------------------------------

void report_error(const char* kind, const std::exception& e, const parse_error* pe = nullptr) {
    ordered_json j;
    j["error"] = kind;
    j["message"] = e.what();
    if (pe) {
        if (!pe->source().empty()) j["source"] = pe->source();
        if (pe->line() > 0) j["line"] = pe->line();
    }
    std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian event-duration prediction: recovery tables, limiting-case "
                 "scenarios, forecast ingestion and epidemic-signal analysis"};
    app.require_subcommand(1);

    RunConfig config;
    std::string lambda_range, t_past_range, sdar_triple, manifest_path;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("-o,--out", config.out_dir,
                        "output directory (default: $DURCAST_OUT or .)");
        cmd->add_option("--from-manifest", manifest_path,
                        "re-run with the resolved configuration from a manifest");
    };
    auto add_table_params = [&](CLI::App* cmd) {
        cmd->add_option("--lambda", lambda_range, "prior expectation grid, e.g. 20..200");
        cmd->add_option("--step", config.lambda_step, "lambda grid step");
        cmd->add_option("--samples", config.samples, "Poisson draws per prior");
        cmd->add_option("--seed", config.seed, "base RNG seed");
        cmd->add_option("--rule", config.rule, "decision rule: median or mean");
        cmd->add_option("--threads", config.threads, "table build threads (0 = auto)");
    };
    auto add_analysis_params = [&](CLI::App* cmd) {
        cmd->add_option("--degree", config.degree, "polynomial trend degree");
        cmd->add_option("--sdar", sdar_triple, "SDAR discount,order,smoothing e.g. 0.01,3,5");
        cmd->add_option("--top-k", config.top_k, "change points to keep");
        cmd->add_option("--threshold", config.threshold, "absolute change-point threshold");
        cmd->add_option("--smooth-days", config.case_smooth_days, "case rolling-average window");
        cmd->add_option("--from", config.from, "analysis window start (YYYY-MM-DD)");
        cmd->add_option("--to", config.to, "analysis window end (YYYY-MM-DD)");
        cmd->add_option("--date-column", config.date_column, "case file date column");
        cmd->add_option("--count-column", config.count_column, "case file cumulative column");
    };

    CLI::App* build = app.add_subcommand("build-table", "precompute the recovery table");
    add_common(build);
    add_table_params(build);
    build->add_option("--t-past", t_past_range, "t_past grid, e.g. 0..200");

    CLI::App* simulate = app.add_subcommand("simulate", "run a limiting-case scenario");
    add_common(simulate);
    add_table_params(simulate);
    simulate->add_option("--mode", config.mode,
                         "invariant-prediction or invariant-prior");
    simulate->add_option("--fixed", config.fixed_value,
                         "held t_predicted (or lambda for invariant-prior)");
    simulate->add_option("--unit", config.unit, "duration unit label");
    simulate->add_option("--t-past", t_past_range, "t_past sweep, e.g. 30..49");
    simulate->add_option("--table", config.table_path, "reuse a prebuilt table");

    CLI::App* recover = app.add_subcommand("recover", "invert predictions to priors");
    add_common(recover);
    recover->add_option("--table", config.table_path, "prebuilt recovery table");
    recover->add_option("--t-past", config.q_t_past, "elapsed duration of one query");
    recover->add_option("--t-predicted", config.q_t_predicted, "observed prediction");
    recover->add_option("--pairs", config.pairs_path, "CSV of t_past,t_predicted queries");

    CLI::App* ingest = app.add_subcommand("ingest", "parse, filter and aggregate forecasts");
    add_common(ingest);
    ingest->add_option("--forecasts", config.forecasts_path, "forecast interchange file");
    ingest->add_option("--t0", config.t0, "wave start date");
    ingest->add_option("--peak", config.peak, "actual peak date for ground truth");

    CLI::App* analyze = app.add_subcommand("analyze", "case-count signal analysis");
    add_common(analyze);
    add_analysis_params(analyze);
    analyze->add_option("--cases", config.cases_path, "cumulative case-count CSV");
    analyze->add_option("--daily", config.daily_path,
                        "aggregated prediction series for joint dynamics");

    CLI::App* pipeline = app.add_subcommand("pipeline", "full forecast + signal pipeline");
    add_common(pipeline);
    add_table_params(pipeline);
    add_analysis_params(pipeline);
    pipeline->add_option("--forecasts", config.forecasts_path, "forecast interchange file");
    pipeline->add_option("--cases", config.cases_path, "cumulative case-count CSV");
    pipeline->add_option("--table", config.table_path, "reuse a prebuilt table");
    pipeline->add_option("--t0", config.t0, "wave start date");
    pipeline->add_option("--peak", config.peak, "actual peak date");
    pipeline->add_option("--fixed", config.fixed_value,
                         "invariant-prediction scenario value (default: observed median)");
    pipeline->add_option("--scenario-lambda", config.scenario_lambda,
                         "invariant-prior scenario lambda (default: recovered median)");
    pipeline->add_option("--unit", config.unit, "duration unit label");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        config.subcommand = sub->get_name();
        if (!manifest_path.empty()) {
            auto in = open_input(manifest_path);
            ordered_json j = ordered_json::parse(in, nullptr, true);
            if (!j.contains("config")) throw parse_error("manifest: missing config object");
            config_from_json(j["config"], config);
        } else {
            if (!lambda_range.empty())
                parse_range(lambda_range, config.lambda_min, config.lambda_max);
            if (!t_past_range.empty())
                parse_range(t_past_range, config.t_past_min, config.t_past_max);
            if (!sdar_triple.empty()) {
                double a = 0, b = 0, c = 0;
                if (std::sscanf(sdar_triple.c_str(), "%lf,%lf,%lf", &a, &b, &c) != 3)
                    throw parse_error("cannot parse --sdar '" + sdar_triple + "'");
                config.sdar_discount = a;
                config.sdar_order = static_cast<int>(b);
                config.sdar_smooth = static_cast<int>(c);
            }
        }

        if (config.subcommand == "build-table") return run_build_table(config);
        if (config.subcommand == "simulate") return run_simulate(config);
        if (config.subcommand == "recover") return run_recover(config);
        if (config.subcommand == "ingest") return run_ingest(config);
        if (config.subcommand == "analyze") return run_analyze(config);
        if (config.subcommand == "pipeline") return run_pipeline(config);
        throw std::runtime_error("unknown subcommand");
    } catch (const parse_error& e) {
        report_error("input", e, &e);
        return 1;
    } catch (const malformed_series_error& e) {
        report_error("input", e);
        return 1;
    } catch (const fit_error& e) {
        report_error("input", e);
        return 1;
    } catch (const insufficient_data_error& e) {
        report_error("input", e);
        return 1;
    } catch (const degenerate_distribution_error& e) {
        report_error("input", e);
        return 1;
    } catch (const std::invalid_argument& e) {
        report_error("input", e);
        return 1;
    } catch (const empty_posterior_error& e) {
        report_error("infeasible", e);
        return 2;
    } catch (const no_candidate_error& e) {
        report_error("infeasible", e);
        return 2;
    } catch (const alignment_error& e) {
        report_error("infeasible", e);
        return 2;
    } catch (const std::exception& e) {
        report_error("internal", e);
        return 3;
    }
}
