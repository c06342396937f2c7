// hydroflux command-line driver.
//
// Every subcommand writes its outputs plus config.ini (the fully resolved
// options, reusable with --config) and run.json into --out.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hydroflux/abcd.hpp"
#include "hydroflux/calibrate.hpp"
#include "hydroflux/error.hpp"
#include "hydroflux/forcing_prep.hpp"
#include "hydroflux/metrics.hpp"
#include "hydroflux/outputs.hpp"
#include "hydroflux/piml.hpp"
#include "hydroflux/regressors.hpp"
#include "hydroflux/rng.hpp"
#include "hydroflux/synth.hpp"
#include "hydroflux/timeseries.hpp"
#include "hydroflux/version.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace hydroflux;
using json = nlohmann::ordered_json;

namespace {

struct Common {
    std::string out;
    std::uint64_t seed = 0;
};

struct DataOptions {
    std::string forcing;
    std::string warmup = "1976-01:1978-12";
    std::string train = "1979-01:2008-12";
    std::string test = "2009-01:2014-12";
    double latitude = 1000.0;  // outside [-90, 90] means "not given"
};

struct AbcdOptions {
    double a = 0.95;
    double b = 350.0;
    double c = 0.6;
    double d = 0.4;
    double sm0 = 100.0;
    double gw0 = 2.0;
    std::string params;
};

struct CalibrateOptions {
    std::string cal_case = "q";
    int swarm = 40;
    int iters = 200;
    unsigned threads = 0;
    bool calibrate_init = false;
};

struct MlOptions {
    std::string model = "gpr";
    std::string inputs = "p,t_avg";
    std::string target = "q";
    std::vector<std::string> hyper;
};

struct PimlCliOptions {
    std::string et_model = "gpr";
    std::string q_model = "gpr";
    std::vector<std::string> et_hyper;
    std::vector<std::string> q_hyper;
    std::string layer2_train_et = "predicted";
    std::string states = "observed";
};

struct EvaluateOptions {
    std::vector<std::string> predictions;
};

struct BalanceOptions {
    double et_plus_q = -1.0;
    double observed = -1.0;
    double dsm = 0.0;
    double dgw = 0.0;
    double threshold = 1.0;
    std::string forcing;
    std::string et_pred;
    std::string q_pred;
};

struct SynthCliOptions {
    std::string start = "1976-01";
    std::size_t months = 468;
    double noise = 0.0;
    double noise_et = -1.0;
    double noise_sm = -1.0;
    double noise_gw = -1.0;
    double noise_q = -1.0;
    AbcdOptions truth;
    double latitude = 22.92;
};

// ------------------------------------------------------------------ data

struct Periods {
    MonthlyForcing forcing;  // warm-up start .. last scored month
    std::size_t warmup_len = 0;
    std::size_t train_begin = 0;
    std::size_t train_len = 0;
    std::size_t test_begin = 0;
    std::size_t test_len = 0;
};

MonthlyForcing load_with_pet(const DataOptions& opt) {
    if (opt.forcing.empty()) fail("UsageError", "--forcing is required");
    auto forcing = load_forcing_csv(opt.forcing);
    if (!forcing.has(Column::Pet) && std::abs(opt.latitude) <= 90.0) {
        forcing.set(Column::Pet, std::move(monthly_pet_from_means(forcing, opt.latitude).mutable_values()));
    }
    return forcing;
}

Periods resolve_periods(const MonthlyForcing& full, const DataOptions& opt) {
    SplitSpec spec{MonthRange::parse(opt.warmup), MonthRange::parse(opt.train), MonthRange::parse(opt.test)};
    validate_split(spec);
    if (spec.train.empty()) fail("InvalidSplit", "training period is empty");
    const MonthStamp first = spec.warmup.empty() ? spec.train.first : spec.warmup.first;
    const MonthStamp last = spec.test.empty() ? spec.train.last : spec.test.last;
    Periods p;
    p.forcing = full.slice(MonthRange{first, last});
    auto at = [&](const MonthStamp& m) { return static_cast<std::size_t>(months_between(first, m)); };
    p.warmup_len = spec.warmup.empty() ? 0 : at(spec.train.first);
    p.train_begin = at(spec.train.first);
    p.train_len = spec.train.size();
    p.test_begin = spec.test.empty() ? p.forcing.size() : at(spec.test.first);
    p.test_len = spec.test.size();
    return p;
}

std::vector<double> sub(std::span<const double> v, std::size_t begin, std::size_t len) {
    return {v.begin() + static_cast<std::ptrdiff_t>(begin), v.begin() + static_cast<std::ptrdiff_t>(begin + len)};
}

ml::Hyperparameters parse_hyper(const std::vector<std::string>& items) {
    ml::Hyperparameters h;
    for (const auto& item : items) {
        auto eq = item.find('=');
        auto value = eq == std::string::npos ? std::nullopt : parse_number(std::string_view(item).substr(eq + 1));
        if (!value) fail("UsageError", "hyperparameter '" + item + "' is not key=value");
        h[item.substr(0, eq)] = *value;
    }
    return h;
}

// ------------------------------------------------------------- reporting

struct Scored {
    std::string variable;
    std::string series;
    MonthStamp start;
    std::vector<double> observed;
    std::vector<double> predicted;
    std::optional<std::pair<std::vector<double>, std::vector<double>>> interval;
};

struct RunOutputs {
    std::vector<Scored> train;
    std::vector<Scored> test;
};

PredictionTable to_table(const Scored& s) {
    PredictionTable t{s.start, s.observed, s.predicted, std::nullopt, std::nullopt};
    if (s.interval) {
        t.lower = s.interval->first;
        t.upper = s.interval->second;
    }
    return t;
}

EvalReport make_report(const std::vector<Scored>& scored) {
    EvalReport r;
    for (const auto& s : scored) {
        if (s.observed.size() < 2) continue;
        auto v = score(s.observed, s.predicted);
        if (s.interval) v.coverage = interval_coverage(s.observed, s.interval->first, s.interval->second);
        r.variables[s.variable] = v;
    }
    return r;
}

void write_run_outputs(const fs::path& out, const RunOutputs& run) {
    json report;
    report["format_version"] = kFormatVersion;
    std::string table;
    std::vector<PlotSeries> plot;
    for (auto [name, list] : {std::pair{"train", &run.train}, std::pair{"test", &run.test}}) {
        const auto r = make_report(*list);
        report[name] = json::parse(r.to_json())["variables"];
        if (!r.variables.empty()) table += std::string("[") + name + "]\n" + r.to_table();
        for (const auto& s : *list) {
            write_text(out / (std::string(name) + "_" + s.variable + ".csv"), emit_prediction_csv(to_table(s)));
            plot.push_back({s.variable, "observed", s.start, s.observed});
            plot.push_back({s.variable, s.series, s.start, s.predicted});
            if (s.interval) {
                plot.push_back({s.variable, s.series + "_lower", s.start, s.interval->first});
                plot.push_back({s.variable, s.series + "_upper", s.start, s.interval->second});
            }
        }
    }
    write_json(out / "report.json", report);
    write_text(out / "report.txt", table);
    write_text(out / "plot.csv", emit_plot_csv(plot));
}

// ------------------------------------------------------------- abcd runs

RunOutputs score_trace(const AbcdTrace& trace, const Periods& p) {
    RunOutputs run;
    for (auto t : {Target::Q, Target::Et, Target::Sm, Target::Gw}) {
        const Column col = target_column(t);
        if (!p.forcing.has(col)) continue;
        const auto sim = trace.all(target_flux(t));
        const auto obs = p.forcing.column(col);
        const std::string var(target_label(t));
        run.train.push_back({var, "abcd", p.forcing.stamp(p.train_begin), sub(obs, p.train_begin, p.train_len),
                             sub(sim, p.train_begin, p.train_len), std::nullopt});
        if (p.test_len > 0) {
            run.test.push_back({var, "abcd", p.forcing.stamp(p.test_begin), sub(obs, p.test_begin, p.test_len),
                                sub(sim, p.test_begin, p.test_len), std::nullopt});
        }
    }
    return run;
}

json params_json(const AbcdParams& prm, const AbcdInit& init) {
    return {{"format_version", kFormatVersion},
            {"a", prm.a()},
            {"b", prm.b()},
            {"c", prm.c()},
            {"d", prm.d()},
            {"sm0", init.sm0},
            {"gw0", init.gw0}};
}

std::pair<AbcdParams, AbcdInit> resolve_params(const AbcdOptions& opt) {
    if (opt.params.empty()) return {AbcdParams(opt.a, opt.b, opt.c, opt.d), AbcdInit{opt.sm0, opt.gw0}};
    try {
        const auto j = json::parse(read_text(opt.params));
        AbcdInit init{j.at("sm0").get<double>(), j.at("gw0").get<double>()};
        init.validate();
        return {AbcdParams(j.at("a").get<double>(), j.at("b").get<double>(), j.at("c").get<double>(),
                           j.at("d").get<double>()),
                init};
    } catch (const json::exception& e) {
        fail("ModelFormat", "cannot read parameter file: " + std::string(e.what()));
    }
}

void run_simulate(const Common& common, const DataOptions& data, const AbcdOptions& abcd) {
    const auto p = resolve_periods(load_with_pet(data), data);
    const auto [prm, init] = resolve_params(abcd);
    const auto trace = simulate(prm, init, p.forcing, p.warmup_len);
    const fs::path out(common.out);
    write_text(out / "trace.csv", emit_trace_csv(trace));
    write_json(out / "params.json", params_json(prm, init));
    write_run_outputs(out, score_trace(trace, p));
}

void run_calibrate(const Common& common, const DataOptions& data, const AbcdOptions& abcd,
                   const CalibrateOptions& opt) {
    const auto p = resolve_periods(load_with_pet(data), data);
    PsoConfig config;
    config.pso.swarm_size = opt.swarm;
    config.pso.iterations = opt.iters;
    config.pso.seed = common.seed;
    config.pso.threads = opt.threads;
    config.calibrate_init = opt.calibrate_init;
    config.init = {abcd.sm0, abcd.gw0};
    const auto cal_case = CalibrationCase::parse(opt.cal_case);
    const auto calib_forcing = p.forcing.slice(0, p.train_begin + p.train_len);
    const auto result = pso_calibrate(calib_forcing, p.warmup_len, cal_case, config);

    const fs::path out(common.out);
    auto pj = params_json(result.params, result.init);
    pj["case"] = cal_case.name();
    pj["objective"] = result.best_objective;
    pj["evaluations"] = result.evaluations;
    write_json(out / "params.json", pj);
    std::string conv = "iteration,best_objective\n";
    for (std::size_t i = 0; i < result.convergence.size(); ++i) {
        conv += std::to_string(i + 1) + "," + format_number(result.convergence[i], 12) + "\n";
    }
    write_text(out / "convergence.csv", conv);
    const auto trace = simulate(result.params, result.init, p.forcing, p.warmup_len);
    write_text(out / "trace.csv", emit_trace_csv(trace));
    write_run_outputs(out, score_trace(trace, p));
}

// --------------------------------------------------------------- ML runs

std::vector<double> input_column(const MonthlyForcing& f, const std::string& name) {
    if (name == "t_avg") {
        auto tx = f.column(Column::Tmax);
        auto tn = f.column(Column::Tmin);
        std::vector<double> out(tx.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.5 * (tx[i] + tn[i]);
        return out;
    }
    for (auto c : kAllColumns) {
        if (column_label(c) == name) {
            auto v = f.column(c);
            return {v.begin(), v.end()};
        }
    }
    fail("UsageError", "unknown input '" + name + "' (use p, t_avg, tmax, tmin, pet, et, sm, gw, q)");
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        auto comma = text.find(',', pos);
        out.push_back(text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

ml::FeatureMatrix rows_of(const MonthlyForcing& f, const std::vector<std::string>& inputs, std::size_t begin,
                          std::size_t len) {
    ml::FeatureMatrix m{Eigen::MatrixXd(static_cast<Eigen::Index>(len), static_cast<Eigen::Index>(inputs.size())),
                        inputs};
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        const auto col = input_column(f, inputs[k]);
        for (std::size_t i = 0; i < len; ++i) {
            m.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = col[begin + i];
        }
    }
    return m;
}

Scored scored_rows(const std::string& var, const std::string& series, const MonthlyForcing& f, std::size_t begin,
                   std::span<const double> obs, const ml::Prediction& pred, std::size_t offset, std::size_t len) {
    Scored s{var, series, f.stamp(begin), sub(obs, begin, len), sub(pred.mean, offset, len), std::nullopt};
    if (pred.sd) {
        const auto [lo, hi] = pred.interval();
        s.interval = std::pair{sub(lo, offset, len), sub(hi, offset, len)};
    }
    return s;
}

void run_train_ml(const Common& common, const DataOptions& data, const MlOptions& opt) {
    const auto p = resolve_periods(load_with_pet(data), data);
    const auto inputs = split_list(opt.inputs);
    const auto target_col = column_from_name(opt.target + "_mm");
    if (!target_col) fail("UsageError", "unknown target '" + opt.target + "'");
    const auto y = p.forcing.column(*target_col);

    const auto train_x = rows_of(p.forcing, inputs, p.train_begin, p.train_len);
    ml::DesignMatrix dm{train_x.x, inputs, Eigen::Map<const Eigen::VectorXd>(y.data() + p.train_begin,
                                                                             static_cast<Eigen::Index>(p.train_len))};
    const ml::RegressorSpec spec{ml::parse_kind(opt.model), parse_hyper(opt.hyper), common.seed};
    const auto model = ml::fit(dm, spec);

    // Train and test rows are predicted as one sequence so windowed models keep their history.
    const std::size_t span_len = p.test_len > 0 ? p.test_begin + p.test_len - p.train_begin : p.train_len;
    const auto pred = model.predict(rows_of(p.forcing, inputs, p.train_begin, span_len));

    const fs::path out(common.out);
    model.save(out / "model.json");
    RunOutputs run;
    const std::string series(ml::to_string(spec.kind));
    run.train.push_back(scored_rows(opt.target, series, p.forcing, p.train_begin, y, pred, 0, p.train_len));
    if (p.test_len > 0) {
        run.test.push_back(scored_rows(opt.target, series, p.forcing, p.test_begin, y, pred,
                                       p.test_begin - p.train_begin, p.test_len));
    }
    write_run_outputs(out, run);
}

void run_train_piml(const Common& common, const DataOptions& data, const AbcdOptions& abcd,
                    const PimlCliOptions& opt) {
    auto p = resolve_periods(load_with_pet(data), data);
    if (opt.states == "simulated") {
        const auto [prm, init] = resolve_params(abcd);
        p.forcing = with_simulated_states(p.forcing, prm, init);
    } else if (opt.states != "observed") {
        fail("UsageError", "--states must be observed or simulated");
    }
    Layer2TrainEt layer2 = Layer2TrainEt::Predicted;
    if (opt.layer2_train_et == "observed") {
        layer2 = Layer2TrainEt::Observed;
    } else if (opt.layer2_train_et != "predicted") {
        fail("UsageError", "--layer2-train-et must be predicted or observed");
    }
    const Rng root(common.seed);
    PimlOptions po{{ml::parse_kind(opt.et_model), parse_hyper(opt.et_hyper), root.split("et").key()},
                   {ml::parse_kind(opt.q_model), parse_hyper(opt.q_hyper), root.split("q").key()},
                   layer2};

    // Feature rows need the previous month's storage, so slices start one month early when possible.
    const std::size_t base = p.train_begin > 0 ? p.train_begin - 1 : 0;
    const std::size_t first = p.train_begin - base > 0 ? p.train_begin - base : 1;
    const auto train_slice = p.forcing.slice(base, p.train_begin + p.train_len - base);
    const auto model = train_piml(train_slice, po, first);

    const std::size_t end = p.test_len > 0 ? p.test_begin + p.test_len : p.train_begin + p.train_len;
    const auto all = p.forcing.slice(base, end - base);
    const auto pred = predict_piml(model, all, 1);
    // pred row r is month base + 1 + r
    auto scored = [&](const std::string& var, Column col, const std::vector<double>& mean,
                      const std::optional<std::pair<std::vector<double>, std::vector<double>>>& iv, std::size_t begin,
                      std::size_t len) {
        const std::size_t skip = begin > base + 1 ? begin - base - 1 : 0;
        const std::size_t real_begin = base + 1 + skip;
        const std::size_t real_len = len - (real_begin - begin);
        Scored s{var, "piml", p.forcing.stamp(real_begin), sub(p.forcing.column(col), real_begin, real_len),
                 sub(mean, skip, real_len), std::nullopt};
        if (iv) s.interval = std::pair{sub(iv->first, skip, real_len), sub(iv->second, skip, real_len)};
        return s;
    };
    const fs::path out(common.out);
    model.save(out / "model.json");
    RunOutputs run;
    run.train.push_back(scored("et", Column::Et, pred.et_hat, pred.et_interval, p.train_begin, p.train_len));
    run.train.push_back(scored("q", Column::Q, pred.q_hat, pred.q_interval, p.train_begin, p.train_len));
    if (p.test_len > 0) {
        run.test.push_back(scored("et", Column::Et, pred.et_hat, pred.et_interval, p.test_begin, p.test_len));
        run.test.push_back(scored("q", Column::Q, pred.q_hat, pred.q_interval, p.test_begin, p.test_len));
    }
    write_run_outputs(out, run);
}

// ------------------------------------------------------ evaluate / balance

void run_evaluate(const Common& common, const EvaluateOptions& opt) {
    if (opt.predictions.empty()) fail("UsageError", "--predictions is required");
    EvalReport report;
    for (const auto& path : opt.predictions) {
        const auto t = read_prediction_csv(path);
        auto v = score(t.observed, t.predicted);
        if (t.lower) v.coverage = interval_coverage(t.observed, *t.lower, *t.upper);
        report.variables[fs::path(path).stem().string()] = v;
    }
    const fs::path out(common.out);
    write_text(out / "report.json", report.to_json());
    write_text(out / "report.txt", report.to_table());
}

void run_water_balance(const Common& common, const BalanceOptions& opt) {
    WaterBalanceReport r;
    if (!opt.forcing.empty()) {
        if (opt.et_pred.empty() || opt.q_pred.empty()) fail("UsageError", "--et-pred and --q-pred are required");
        const auto forcing = load_forcing_csv(opt.forcing);
        const auto et = read_prediction_csv(opt.et_pred);
        const auto q = read_prediction_csv(opt.q_pred);
        if (et.start != q.start || et.size() != q.size()) fail("AlignmentError", "ET and Q predictions differ in span");
        const auto window = forcing.slice(MonthRange{et.start, et.start.plus(static_cast<long>(et.size()) - 1)});
        AnnualInputs in{window.column(Column::P), et.predicted, q.predicted, et.observed, q.observed};
        const long before = months_between(forcing.start(), et.start) - 1;
        auto storage = [&](Column c, double& start, double& end) {
            if (!forcing.has(c) || before < 0) return;
            start = forcing.column(c)[static_cast<std::size_t>(before)];
            end = window.column(c).back();
        };
        storage(Column::Sm, in.sm_start, in.sm_end);
        storage(Column::Gw, in.gw_start, in.gw_end);
        r = annual_water_balance(in, opt.threshold);
    } else {
        if (opt.et_plus_q < 0.0 || opt.observed < 0.0) {
            fail("UsageError", "give --et-plus-q and --observed, or --forcing with --et-pred/--q-pred");
        }
        r = water_balance(0.0, opt.et_plus_q, 0.0, opt.observed, opt.dsm, opt.dgw, opt.threshold);
    }
    const fs::path out(common.out);
    write_json(out / "water_balance.json", water_balance_json(r));
    write_text(out / "water_balance.csv", emit_water_balance_csv(r));
}

void run_synth(const Common& common, const SynthCliOptions& opt) {
    SynthSpec spec;
    spec.start = MonthStamp::parse(opt.start);
    spec.months = opt.months;
    spec.seed = common.seed;
    spec.a = opt.truth.a;
    spec.b = opt.truth.b;
    spec.c = opt.truth.c;
    spec.d = opt.truth.d;
    spec.init = {opt.truth.sm0, opt.truth.gw0};
    spec.climate.latitude_deg = opt.latitude;
    auto pick = [&](double v) { return v >= 0.0 ? v : opt.noise; };
    spec.noise = {pick(opt.noise_et), pick(opt.noise_sm), pick(opt.noise_gw), pick(opt.noise_q)};
    const auto result = synth_generate(spec);
    const fs::path out(common.out);
    write_forcing_csv(out / "forcing.csv", result.forcing);
    write_text(out / "trace.csv", emit_trace_csv(result.trace));
    write_json(out / "truth.json", result.truth);
}

// ---------------------------------------------------------------- wiring

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--out", c.out, "Output directory")->required()->configurable(false);
    sub->add_option("--seed", c.seed, "Random seed")->envname("HYDROFLUX_SEED")->capture_default_str();
}

void add_data(CLI::App* sub, DataOptions& d) {
    sub->add_option("--forcing", d.forcing, "Monthly forcing CSV")->required();
    sub->add_option("--warmup", d.warmup, "Warm-up months, YYYY-MM:YYYY-MM (may be empty)")->capture_default_str();
    sub->add_option("--train", d.train, "Training/calibration months")->capture_default_str();
    sub->add_option("--test", d.test, "Test months (may be empty)")->capture_default_str();
    sub->add_option("--latitude", d.latitude, "Latitude (deg) for Hargreaves PET when the CSV has no pet_mm")
        ->capture_default_str();
}

void add_abcd(CLI::App* sub, AbcdOptions& a, bool with_file) {
    sub->add_option("--a", a.a, "abcd parameter a")->capture_default_str();
    sub->add_option("--b", a.b, "abcd parameter b (mm)")->capture_default_str();
    sub->add_option("--c", a.c, "abcd parameter c")->capture_default_str();
    sub->add_option("--d", a.d, "abcd parameter d")->capture_default_str();
    sub->add_option("--sm0", a.sm0, "Initial soil moisture (mm)")->capture_default_str();
    sub->add_option("--gw0", a.gw0, "Initial groundwater (mm)")->capture_default_str();
    if (with_file) sub->add_option("--params", a.params, "params.json from calibrate (overrides --a..--gw0)");
}

void prepare_out(const std::string& out) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) fail("IoError", "cannot create output directory " + out + ": " + ec.message());
    fs::remove(fs::path(out) / "error.json", ec);
}

bool is_usage_error(const std::string& code) {
    return code == "UsageError" || code == "UnknownModel" || code == "UnknownHyperparameter" || code == "InvalidCase";
}

std::string quote(const std::string& s) { return '"' + s + '"'; }

// Resolved options of the chosen subcommand as an INI section that --config reads back.
std::string resolved_config(const CLI::App& sub) {
    std::string out = "[" + sub.get_name() + "]\n";
    for (const CLI::Option* opt : sub.get_options()) {
        if (!opt->get_configurable() || opt->get_lnames().empty()) continue;
        const std::string key = opt->get_lnames().front();
        if (key == "help") continue;
        const bool flag = opt->get_expected_max() == 0;
        const bool vector = !flag && opt->get_expected_max() > 1;
        std::string value;
        if (flag) {
            value = opt->count() > 0 && opt->as<bool>() ? "true" : "false";
        } else if (vector) {
            // an empty list does not read back; leaving the key out keeps the default
            if (opt->count() == 0) continue;
            const auto& results = opt->results();
            value = "[";
            for (std::size_t i = 0; i < results.size(); ++i) value += (i ? "," : "") + quote(results[i]);
            value += "]";
        } else if (opt->count() > 0) {
            value = quote(opt->results().back());
        } else {
            value = quote(opt->get_default_str());
        }
        out += key + "=" + value + "\n";
    }
    return out;
}

void report_error(const std::string& out, const std::string& code, const std::string& message) {
    json j{{"format_version", kFormatVersion}, {"error", {{"code", code}, {"message", message}}}};
    std::cerr << j.dump() << "\n";
    if (!out.empty() && fs::is_directory(out)) {
        try {
            write_json(fs::path(out) / "error.json", j);
        } catch (const std::exception&) {
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hydroflux: abcd water-balance model, calibration and physics-informed ML"};
    app.set_version_flag("--version", std::string(kBuildId));
    app.set_config("--config", "", "INI file with [subcommand] sections; flags win");
    app.require_subcommand(1);
    app.fallthrough();

    Common common;
    DataOptions data;
    AbcdOptions abcd;
    CalibrateOptions cal;
    MlOptions mlo;
    PimlCliOptions piml;
    EvaluateOptions eval;
    BalanceOptions bal;
    SynthCliOptions syn;

    auto* simulate_cmd = app.add_subcommand("simulate", "Run the abcd model with given parameters");
    add_common(simulate_cmd, common);
    add_data(simulate_cmd, data);
    add_abcd(simulate_cmd, abcd, true);

    auto* calibrate_cmd = app.add_subcommand("calibrate", "Calibrate abcd parameters with particle swarm optimization");
    add_common(calibrate_cmd, common);
    add_data(calibrate_cmd, data);
    calibrate_cmd->add_option("--sm0", abcd.sm0, "Initial soil moisture (mm)")->capture_default_str();
    calibrate_cmd->add_option("--gw0", abcd.gw0, "Initial groundwater (mm)")->capture_default_str();
    calibrate_cmd->add_option("--case", cal.cal_case, "Scored variables: q, q+et, q+et+sm+gw, ...")
        ->capture_default_str();
    calibrate_cmd->add_option("--swarm", cal.swarm, "Swarm size")->capture_default_str();
    calibrate_cmd->add_option("--iters", cal.iters, "PSO iterations")->capture_default_str();
    calibrate_cmd->add_option("--threads", cal.threads, "Worker threads (0 = all cores); results do not depend on it")
        ->capture_default_str();
    calibrate_cmd->add_flag("--calibrate-init", cal.calibrate_init, "Also calibrate sm0 and gw0");

    auto* ml_cmd = app.add_subcommand("train-ml", "Train a pure data-driven regressor");
    add_common(ml_cmd, common);
    add_data(ml_cmd, data);
    ml_cmd->add_option("--model", mlo.model, "ridge, lasso, gpr, svr or lstm")->capture_default_str();
    ml_cmd->add_option("--inputs", mlo.inputs, "Comma-separated inputs, e.g. p,t_avg or p,et")->capture_default_str();
    ml_cmd->add_option("--target", mlo.target, "Target variable")->capture_default_str();
    ml_cmd->add_option("--hyper", mlo.hyper, "Hyperparameter override key=value (repeatable)");

    auto* piml_cmd = app.add_subcommand("train-piml", "Train the two-layer physics-informed model");
    add_common(piml_cmd, common);
    add_data(piml_cmd, data);
    add_abcd(piml_cmd, abcd, true);
    piml_cmd->add_option("--et-model", piml.et_model, "ET-layer regressor")->capture_default_str();
    piml_cmd->add_option("--q-model", piml.q_model, "Q-layer regressor")->capture_default_str();
    piml_cmd->add_option("--et-hyper", piml.et_hyper, "ET-layer override key=value (repeatable)");
    piml_cmd->add_option("--q-hyper", piml.q_hyper, "Q-layer override key=value (repeatable)");
    piml_cmd->add_option("--layer2-train-et", piml.layer2_train_et, "predicted or observed")->capture_default_str();
    piml_cmd->add_option("--states", piml.states, "observed or simulated (needs abcd parameters)")
        ->capture_default_str();

    auto* eval_cmd = app.add_subcommand("evaluate", "Score prediction CSVs");
    add_common(eval_cmd, common);
    eval_cmd->add_option("--predictions", eval.predictions, "date,observed,predicted[,lower,upper] files")
        ->required();

    auto* wb_cmd = app.add_subcommand("water-balance", "Percentage deviation of modeled ET+Q from observed ET+Q");
    add_common(wb_cmd, common);
    wb_cmd->add_option("--et-plus-q", bal.et_plus_q, "Modeled ET+Q (mm/year)")->capture_default_str();
    wb_cmd->add_option("--observed", bal.observed, "Observed ET+Q (mm/year)")->capture_default_str();
    wb_cmd->add_option("--dsm", bal.dsm, "Soil-moisture change (mm/year)")->capture_default_str();
    wb_cmd->add_option("--dgw", bal.dgw, "Groundwater change (mm/year)")->capture_default_str();
    wb_cmd->add_option("--threshold", bal.threshold, "Storage terms enter above this |dSM|+|dGW| (mm)")
        ->capture_default_str();
    wb_cmd->add_option("--forcing", bal.forcing, "Forcing CSV (P and storages)");
    wb_cmd->add_option("--et-pred", bal.et_pred, "ET prediction CSV");
    wb_cmd->add_option("--q-pred", bal.q_pred, "Q prediction CSV");

    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic catchment");
    add_common(synth_cmd, common);
    synth_cmd->add_option("--start", syn.start, "First month YYYY-MM")->capture_default_str();
    synth_cmd->add_option("--months", syn.months, "Number of months (>= 48)")->capture_default_str();
    synth_cmd->add_option("--noise", syn.noise, "Observation noise sd for et/sm/gw/q (mm)")->capture_default_str();
    synth_cmd->add_option("--noise-et", syn.noise_et, "ET noise sd (negative = use --noise)")->capture_default_str();
    synth_cmd->add_option("--noise-sm", syn.noise_sm, "SM noise sd")->capture_default_str();
    synth_cmd->add_option("--noise-gw", syn.noise_gw, "GW noise sd")->capture_default_str();
    synth_cmd->add_option("--noise-q", syn.noise_q, "Q noise sd")->capture_default_str();
    synth_cmd->add_option("--latitude", syn.latitude, "Latitude (deg) for PET")->capture_default_str();
    add_abcd(synth_cmd, syn.truth, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    auto* sub = app.get_subcommands().front();
    try {
        prepare_out(common.out);
        write_text(fs::path(common.out) / "config.ini", resolved_config(*sub));
        write_json(fs::path(common.out) / "run.json", run_metadata(sub->get_name(), common.seed));
        const std::string name = sub->get_name();
        if (name == "simulate") run_simulate(common, data, abcd);
        else if (name == "calibrate") run_calibrate(common, data, abcd, cal);
        else if (name == "train-ml") run_train_ml(common, data, mlo);
        else if (name == "train-piml") run_train_piml(common, data, abcd, piml);
        else if (name == "evaluate") run_evaluate(common, eval);
        else if (name == "water-balance") run_water_balance(common, bal);
        else if (name == "synth") run_synth(common, syn);
    } catch (const Error& e) {
        report_error(common.out, e.code(), e.what());
        return is_usage_error(e.code()) ? 2 : 1;
    } catch (const std::exception& e) {
        report_error(common.out, "InternalError", e.what());
        return 1;
    }
    return 0;
}
