#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hydroflux/abcd.hpp"
#include "hydroflux/regressors.hpp"
#include "hydroflux/timeseries.hpp"

namespace hydroflux {

// Feature layouts of the two layers, in column order.
inline const std::vector<std::string> kEtFeatures = {"P_t", "SM_t-1", "PET_t"};
inline const std::vector<std::string> kQFeatures = {"P_t", "ET_t", "SM_t", "SM_t-1", "GW_t", "GW_t-1"};

/// ET-layer covariates for months first..N-1 (first >= 1 so SM_{t-1} exists).
/// Requires p, sm, pet (MissingObservation / MissingPET).
ml::FeatureMatrix et_features(const MonthlyForcing& forcing, std::size_t first = 1);
/// et_features plus observed ET as the target.
ml::DesignMatrix build_features_et(const MonthlyForcing& forcing, std::size_t first = 1);

/// Q-layer covariates for months first..N-1. `et_hat` holds one value per
/// row (N - first values); anything else is an AlignmentError.
ml::FeatureMatrix q_features(const MonthlyForcing& forcing, std::span<const double> et_hat, std::size_t first = 1);
/// q_features plus observed Q as the target.
ml::DesignMatrix build_features_q(const MonthlyForcing& forcing, std::span<const double> et_hat,
                                  std::size_t first = 1);

/// Which ET column the Q layer is trained on.
enum class Layer2TrainEt { Predicted, Observed };

struct PimlOptions {
    ml::RegressorSpec et_spec;
    ml::RegressorSpec q_spec;
    Layer2TrainEt layer2_train_et = Layer2TrainEt::Predicted;
};

struct PimlModel {
    ml::FittedRegressor et_layer;
    ml::FittedRegressor q_layer;
    Layer2TrainEt layer2_train_et = Layer2TrainEt::Predicted;
    MonthRange train_months;
    std::map<std::string, double> diagnostics;

    nlohmann::json to_json() const;
    static PimlModel from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static PimlModel load(const std::filesystem::path& path);
};

/// Fits the ET layer on observed ET, then the Q layer on (by default) the ET
/// layer's in-sample predictions. Rows are months first..N-1 of `forcing`.
PimlModel train_piml(const MonthlyForcing& forcing, const PimlOptions& options, std::size_t first = 1);

struct PimlPrediction {
    MonthStamp start;
    std::vector<double> et_hat;
    std::vector<double> q_hat;
    std::optional<std::pair<std::vector<double>, std::vector<double>>> et_interval;
    std::optional<std::pair<std::vector<double>, std::vector<double>>> q_interval;
};

/// Predicts months first..N-1. Both layers see every month from the second
/// one onward, so sequence models keep their history; results are then
/// trimmed to start at `first`. Requires p, pet, sm, gw.
PimlPrediction predict_piml(const PimlModel& model, const MonthlyForcing& forcing, std::size_t first = 1,
                            double z = 1.645);

/// Q-layer prediction for months first..N-1 given an explicit ET series for
/// months 1..N-1 (the composition path used by predict_piml).
ml::Prediction predict_q_layer(const PimlModel& model, const MonthlyForcing& forcing, std::span<const double> et_all,
                               std::size_t first = 1);

/// Replaces the sm/gw columns with abcd-simulated storages.
MonthlyForcing with_simulated_states(const MonthlyForcing& forcing, const AbcdParams& params, const AbcdInit& init);

struct WaterBalanceReport {
    double p = 0.0;
    double et = 0.0;
    double q = 0.0;
    double dsm = 0.0;
    double dgw = 0.0;
    double et_plus_q = 0.0;
    double obs_et_plus_q = 0.0;
    bool storage_included = false;
    double pct_deviation = 0.0;
    /// (ET + Q [+ dSM + dGW] - P) / P * 100, storage only when included; 0 when P is 0.
    double closure_pct = 0.0;
};

/// Percentage deviation of modeled ET+Q from the observed ET+Q benchmark.
/// Storage changes are reported and enter the closure check against P only
/// when |dsm| + |dgw| reaches `storage_threshold` mm. Throws ZeroBenchmark.
WaterBalanceReport water_balance(double p_total, double et_total, double q_total, double obs_et_plus_q, double dsm,
                                 double dgw, double storage_threshold = 1.0);

/// Mean annual totals over aligned monthly series (length a multiple of 12
/// is not required; totals are scaled by 12 / months).
struct AnnualInputs {
    std::span<const double> p;
    std::span<const double> et_model;
    std::span<const double> q_model;
    std::span<const double> et_obs;
    std::span<const double> q_obs;
    double sm_start = 0.0;
    double sm_end = 0.0;
    double gw_start = 0.0;
    double gw_end = 0.0;
};
WaterBalanceReport annual_water_balance(const AnnualInputs& in, double storage_threshold = 1.0);

}  // namespace hydroflux
