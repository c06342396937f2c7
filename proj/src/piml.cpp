#include "hydroflux/piml.hpp"

#include <cmath>
#include <fstream>

#include "hydroflux/error.hpp"
#include "hydroflux/metrics.hpp"
#include "hydroflux/version.hpp"

namespace hydroflux {

namespace {

void check_first(const MonthlyForcing& forcing, std::size_t first) {
    if (first < 1) fail("AlignmentError", "first feature row must be >= 1 (lagged storage needs a prior month)");
    if (first > forcing.size()) fail("RangeOutOfBounds", "first feature row beyond forcing end");
}

Eigen::VectorXd tail(std::span<const double> v, std::size_t first) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size() - first));
    for (std::size_t i = first; i < v.size(); ++i) out(static_cast<Eigen::Index>(i - first)) = v[i];
    return out;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

const char* layer2_name(Layer2TrainEt m) { return m == Layer2TrainEt::Observed ? "observed" : "predicted"; }

}  // namespace

ml::FeatureMatrix et_features(const MonthlyForcing& forcing, std::size_t first) {
    check_first(forcing, first);
    auto p = forcing.column(Column::P);
    auto sm = forcing.column(Column::Sm);
    auto pet = forcing.column(Column::Pet);
    const auto rows = static_cast<Eigen::Index>(forcing.size() - first);
    ml::FeatureMatrix out{Eigen::MatrixXd(rows, 3), kEtFeatures};
    for (Eigen::Index r = 0; r < rows; ++r) {
        const std::size_t t = first + static_cast<std::size_t>(r);
        out.x(r, 0) = p[t];
        out.x(r, 1) = sm[t - 1];
        out.x(r, 2) = pet[t];
    }
    return out;
}

ml::DesignMatrix build_features_et(const MonthlyForcing& forcing, std::size_t first) {
    auto f = et_features(forcing, first);
    auto et = forcing.column(Column::Et);
    return {std::move(f.x), std::move(f.names), tail(et, first)};
}

ml::FeatureMatrix q_features(const MonthlyForcing& forcing, std::span<const double> et_hat, std::size_t first) {
    check_first(forcing, first);
    auto p = forcing.column(Column::P);
    auto sm = forcing.column(Column::Sm);
    auto gw = forcing.column(Column::Gw);
    const std::size_t rows = forcing.size() - first;
    if (et_hat.size() != rows) {
        fail("AlignmentError", "ET estimate has " + std::to_string(et_hat.size()) + " values for " +
                                   std::to_string(rows) + " feature rows");
    }
    ml::FeatureMatrix out{Eigen::MatrixXd(static_cast<Eigen::Index>(rows), 6), kQFeatures};
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t t = first + r;
        const auto i = static_cast<Eigen::Index>(r);
        out.x(i, 0) = p[t];
        out.x(i, 1) = et_hat[r];
        out.x(i, 2) = sm[t];
        out.x(i, 3) = sm[t - 1];
        out.x(i, 4) = gw[t];
        out.x(i, 5) = gw[t - 1];
    }
    return out;
}

ml::DesignMatrix build_features_q(const MonthlyForcing& forcing, std::span<const double> et_hat, std::size_t first) {
    auto f = q_features(forcing, et_hat, first);
    auto q = forcing.column(Column::Q);
    return {std::move(f.x), std::move(f.names), tail(q, first)};
}

PimlModel train_piml(const MonthlyForcing& forcing, const PimlOptions& options, std::size_t first) {
    const auto et_data = build_features_et(forcing, first);
    auto et_layer = ml::fit(et_data, options.et_spec);
    const auto et_in_sample = et_layer.predict(et_data.features());

    std::vector<double> et_column = options.layer2_train_et == Layer2TrainEt::Predicted
                                        ? et_in_sample.mean
                                        : to_vector(et_data.target);
    const auto q_data = build_features_q(forcing, et_column, first);
    auto q_layer = ml::fit(q_data, options.q_spec);
    const auto q_in_sample = q_layer.predict(q_data.features());

    std::map<std::string, double> diag;
    const auto et_obs = to_vector(et_data.target);
    const auto q_obs = to_vector(q_data.target);
    try {
        diag["train_nse_et"] = nse(et_obs, et_in_sample.mean);
        diag["train_nse_q"] = nse(q_obs, q_in_sample.mean);
    } catch (const Error&) {
        // constant observations: NSE undefined, diagnostics omitted
    }
    diag["train_rmse_et"] = rmse(et_obs, et_in_sample.mean);
    diag["train_rmse_q"] = rmse(q_obs, q_in_sample.mean);
    diag["train_rows"] = static_cast<double>(q_obs.size());
    return {std::move(et_layer), std::move(q_layer), options.layer2_train_et,
            MonthRange{forcing.stamp(first), forcing.last()}, std::move(diag)};
}

ml::Prediction predict_q_layer(const PimlModel& model, const MonthlyForcing& forcing, std::span<const double> et_all,
                               std::size_t first) {
    check_first(forcing, first);
    auto full = model.q_layer.predict(q_features(forcing, et_all, 1));
    const std::size_t skip = first - 1;
    ml::Prediction out;
    out.mean.assign(full.mean.begin() + static_cast<std::ptrdiff_t>(skip), full.mean.end());
    if (full.sd) out.sd = std::vector<double>(full.sd->begin() + static_cast<std::ptrdiff_t>(skip), full.sd->end());
    return out;
}

PimlPrediction predict_piml(const PimlModel& model, const MonthlyForcing& forcing, std::size_t first, double z) {
    check_first(forcing, first);
    forcing.column(Column::Gw);
    const auto et_all = model.et_layer.predict(et_features(forcing, 1));
    const auto q = predict_q_layer(model, forcing, et_all.mean, first);
    const std::size_t skip = first - 1;

    PimlPrediction out;
    out.start = forcing.stamp(first);
    ml::Prediction et;
    et.mean.assign(et_all.mean.begin() + static_cast<std::ptrdiff_t>(skip), et_all.mean.end());
    if (et_all.sd) et.sd = std::vector<double>(et_all.sd->begin() + static_cast<std::ptrdiff_t>(skip), et_all.sd->end());
    out.et_hat = et.mean;
    out.q_hat = q.mean;
    if (et.sd) out.et_interval = et.interval(z);
    if (q.sd) out.q_interval = q.interval(z);
    return out;
}

MonthlyForcing with_simulated_states(const MonthlyForcing& forcing, const AbcdParams& params, const AbcdInit& init) {
    const auto trace = simulate(params, init, forcing, 0);
    MonthlyForcing out = forcing;
    out.set(Column::Sm, trace.all(Flux::Sm));
    out.set(Column::Gw, trace.all(Flux::Gw));
    return out;
}

nlohmann::json PimlModel::to_json() const {
    nlohmann::json j;
    j["format_version"] = kFormatVersion;
    j["wiring"] = {{"et_features", kEtFeatures},
                   {"q_features", kQFeatures},
                   {"layer2_train_et", layer2_name(layer2_train_et)},
                   {"train_months", train_months.to_string()}};
    j["diagnostics"] = diagnostics;
    j["et_layer"] = et_layer.to_json();
    j["q_layer"] = q_layer.to_json();
    return j;
}

PimlModel PimlModel::from_json(const nlohmann::json& j) {
    try {
        if (j.at("format_version").get<int>() != kFormatVersion) fail("ModelFormat", "unsupported PIML format_version");
        const auto& w = j.at("wiring");
        if (w.at("et_features").get<std::vector<std::string>>() != kEtFeatures ||
            w.at("q_features").get<std::vector<std::string>>() != kQFeatures) {
            fail("ModelFormat", "PIML wiring does not match the ET/Q layer covariates");
        }
        return {ml::FittedRegressor::from_json(j.at("et_layer")), ml::FittedRegressor::from_json(j.at("q_layer")),
                w.at("layer2_train_et").get<std::string>() == "observed" ? Layer2TrainEt::Observed
                                                                         : Layer2TrainEt::Predicted,
                MonthRange::parse(w.at("train_months").get<std::string>()),
                j.at("diagnostics").get<std::map<std::string, double>>()};
    } catch (const nlohmann::json::exception& e) {
        fail("ModelFormat", std::string("malformed PIML model: ") + e.what());
    }
}

void PimlModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("IoError", "cannot write " + path.string());
    out << to_json().dump(1) << "\n";
}

PimlModel PimlModel::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("FileNotFound", "cannot open " + path.string());
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        fail("ModelFormat", std::string("cannot parse PIML model: ") + e.what());
    }
}

WaterBalanceReport water_balance(double p_total, double et_total, double q_total, double obs_et_plus_q, double dsm,
                                 double dgw, double storage_threshold) {
    if (!(obs_et_plus_q > 0.0)) fail("ZeroBenchmark", "observed ET+Q benchmark must be positive");
    WaterBalanceReport r;
    r.p = p_total;
    r.et = et_total;
    r.q = q_total;
    r.dsm = dsm;
    r.dgw = dgw;
    r.et_plus_q = et_total + q_total;
    r.obs_et_plus_q = obs_et_plus_q;
    r.storage_included = std::abs(dsm) + std::abs(dgw) >= storage_threshold;
    r.pct_deviation = (r.et_plus_q - obs_et_plus_q) / obs_et_plus_q * 100.0;
    if (p_total > 0.0) {
        const double out = r.et_plus_q + (r.storage_included ? dsm + dgw : 0.0);
        r.closure_pct = (out - p_total) / p_total * 100.0;
    }
    return r;
}

WaterBalanceReport annual_water_balance(const AnnualInputs& in, double storage_threshold) {
    const std::size_t n = in.p.size();
    if (n == 0 || in.et_model.size() != n || in.q_model.size() != n || in.et_obs.size() != n || in.q_obs.size() != n) {
        fail("LengthMismatch", "water-balance series must be non-empty and aligned");
    }
    const double years = static_cast<double>(n) / 12.0;
    auto annual = [years](std::span<const double> v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / years;
    };
    return water_balance(annual(in.p), annual(in.et_model), annual(in.q_model),
                         annual(in.et_obs) + annual(in.q_obs), (in.sm_end - in.sm_start) / years,
                         (in.gw_end - in.gw_start) / years, storage_threshold);
}

}  // namespace hydroflux
