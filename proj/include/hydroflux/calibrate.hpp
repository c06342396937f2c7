#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hydroflux/abcd.hpp"
#include "hydroflux/timeseries.hpp"

namespace hydroflux {

enum class Target { Q, Et, Sm, Gw };
std::string_view target_label(Target t);
Column target_column(Target t);
Flux target_flux(Target t);

/// Which simulated variables are scored against observations, and how heavily.
struct CalibrationCase {
    std::vector<Target> targets;
    std::vector<double> weights;  // one per target, > 0

    /// "q", "q+et", "q+et+sm+gw" (any '+'-joined subset); weights default to 1.
    static CalibrationCase parse(std::string_view text);
    std::string name() const;
    void validate() const;
};

struct Bounds {
    double lower = 0.0;
    double upper = 1.0;
};

/// Global-best PSO settings. Defaults are the Clerc-Kennedy constriction values.
struct PsoSettings {
    int swarm_size = 40;
    int iterations = 200;
    double inertia = 0.729;
    double cognitive = 1.494;
    double social = 1.494;
    std::uint64_t seed = 0;
    unsigned threads = 0;  // 0 = hardware concurrency
    /// Called after every iteration with the swarm positions (test hook).
    std::function<void(int, std::span<const std::vector<double>>)> observer;
};

struct PsoResult {
    std::vector<double> best_position;
    double best_value = 0.0;
    std::vector<double> convergence;  // gbest value after each iteration
    std::size_t evaluations = 0;
};

/// Minimizes `objective` over a box. Particle random draws are keyed by
/// (iteration, particle), so results do not depend on evaluation order or
/// thread count. `objective` must be safe to call concurrently.
PsoResult pso_minimize(const std::function<double(std::span<const double>)>& objective,
                       std::span<const Bounds> bounds, const PsoSettings& settings);

struct PsoConfig {
    PsoSettings pso;
    Bounds a{1e-3, 1.0};
    Bounds b{1e-3, 1000.0};
    Bounds c{0.0, 1.0};
    Bounds d{0.0, 1.0};
    bool calibrate_init = false;
    Bounds sm0_fraction{0.0, 1.0};  // sm0 = fraction * b, i.e. sm0 in [0, b]
    Bounds gw0{0.0, 500.0};
    AbcdInit init;  // used when calibrate_init is false

    void validate() const;
};

/// Returned when a simulation cannot be scored.
inline constexpr double kObjectiveFailure = 1e10;

/// Sum over targets of weight * (1 - NSE) on the months after `warmup_len`.
/// `forcing` holds warm-up followed by the calibration period.
/// Throws MissingObservation when a target column is absent.
double objective(const AbcdParams& params, const AbcdInit& init, const MonthlyForcing& forcing,
                 std::size_t warmup_len, const CalibrationCase& cal_case);

struct CalibrationResult {
    AbcdParams params;
    AbcdInit init;
    double best_objective = 0.0;
    std::vector<double> convergence;
    std::size_t evaluations = 0;
};

CalibrationResult pso_calibrate(const MonthlyForcing& forcing, std::size_t warmup_len,
                                const CalibrationCase& cal_case, const PsoConfig& config);

}  // namespace hydroflux
