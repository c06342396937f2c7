#include "hydroflux/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "hydroflux/error.hpp"
#include "hydroflux/metrics.hpp"
#include "hydroflux/rng.hpp"

namespace hydroflux {

std::string_view target_label(Target t) {
    switch (t) {
        case Target::Q: return "q";
        case Target::Et: return "et";
        case Target::Sm: return "sm";
        case Target::Gw: return "gw";
    }
    return "";
}

Column target_column(Target t) {
    switch (t) {
        case Target::Q: return Column::Q;
        case Target::Et: return Column::Et;
        case Target::Sm: return Column::Sm;
        case Target::Gw: return Column::Gw;
    }
    return Column::Q;
}

Flux target_flux(Target t) {
    switch (t) {
        case Target::Q: return Flux::Q;
        case Target::Et: return Flux::Et;
        case Target::Sm: return Flux::Sm;
        case Target::Gw: return Flux::Gw;
    }
    return Flux::Q;
}

CalibrationCase CalibrationCase::parse(std::string_view text) {
    CalibrationCase out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto plus = text.find('+', pos);
        auto token = text.substr(pos, plus == std::string_view::npos ? std::string_view::npos : plus - pos);
        bool found = false;
        for (auto t : {Target::Q, Target::Et, Target::Sm, Target::Gw}) {
            if (token == target_label(t)) {
                if (std::find(out.targets.begin(), out.targets.end(), t) != out.targets.end()) {
                    fail("InvalidCase", "target '" + std::string(token) + "' listed twice");
                }
                out.targets.push_back(t);
                found = true;
            }
        }
        if (!found) fail("InvalidCase", "unknown calibration target '" + std::string(token) + "'");
        if (plus == std::string_view::npos) break;
        pos = plus + 1;
    }
    out.weights.assign(out.targets.size(), 1.0);
    return out;
}

std::string CalibrationCase::name() const {
    std::string s;
    for (auto t : targets) s += (s.empty() ? "" : "+") + std::string(target_label(t));
    return s;
}

void CalibrationCase::validate() const {
    if (targets.empty()) fail("InvalidCase", "calibration case has no targets");
    if (weights.size() != targets.size()) fail("InvalidCase", "one weight per target required");
    for (double w : weights) {
        if (!(w > 0.0) || !std::isfinite(w)) fail("InvalidCase", "calibration weights must be positive");
    }
}

void PsoConfig::validate() const {
    if (pso.swarm_size < 1 || pso.iterations < 0) fail("InvalidConfig", "PSO swarm size must be >= 1");
    for (const Bounds* bnd : {&a, &b, &c, &d, &sm0_fraction, &gw0}) {
        if (!std::isfinite(bnd->lower) || !std::isfinite(bnd->upper) || !(bnd->lower < bnd->upper)) {
            fail("InvalidConfig", "PSO bounds must be finite with lower < upper");
        }
    }
    if (!(a.lower > 0.0) || a.upper > 1.0 || !(b.lower > 0.0) || c.lower < 0.0 || c.upper > 1.0 || d.lower < 0.0 ||
        d.upper > 1.0 || sm0_fraction.lower < 0.0 || gw0.lower < 0.0) {
        fail("InvalidConfig", "PSO bounds exceed the admissible abcd parameter ranges");
    }
}

// -------------------------------------------------------------------- PSO

namespace {

void reflect(double& x, double& v, const Bounds& bnd) {
    for (int k = 0; k < 4 && (x < bnd.lower || x > bnd.upper); ++k) {
        if (x < bnd.lower) x = 2.0 * bnd.lower - x;
        if (x > bnd.upper) x = 2.0 * bnd.upper - x;
        v = -v;
    }
    x = std::clamp(x, bnd.lower, bnd.upper);
}

void evaluate_all(const std::function<double(std::span<const double>)>& objective,
                  const std::vector<std::vector<double>>& positions, std::vector<double>& values, unsigned threads) {
    const std::size_t n = positions.size();
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            double v = kObjectiveFailure;
            try {
                v = objective(positions[i]);
            } catch (const std::exception&) {
                v = kObjectiveFailure;
            }
            values[i] = std::isfinite(v) ? v : kObjectiveFailure;
        }
    };
    if (threads <= 1 || n < 2) {
        work(0, n);
        return;
    }
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t begin = 0; begin < n; begin += chunk) pool.emplace_back(work, begin, std::min(n, begin + chunk));
}

}  // namespace

PsoResult pso_minimize(const std::function<double(std::span<const double>)>& objective,
                       std::span<const Bounds> bounds, const PsoSettings& settings) {
    const std::size_t dim = bounds.size();
    const auto swarm = static_cast<std::size_t>(settings.swarm_size);
    if (dim == 0 || swarm == 0) fail("InvalidConfig", "PSO needs at least one dimension and one particle");
    for (const auto& b : bounds) {
        if (!std::isfinite(b.lower) || !std::isfinite(b.upper) || !(b.lower < b.upper)) {
            fail("InvalidConfig", "PSO bounds must be finite with lower < upper");
        }
    }
    const unsigned threads = settings.threads != 0 ? settings.threads : std::max(1u, std::thread::hardware_concurrency());

    const Rng root = Rng(settings.seed).split("pso");
    const Rng init_rng = root.split("init");
    const Rng step_rng = root.split("step");

    std::vector<std::vector<double>> x(swarm, std::vector<double>(dim));
    std::vector<std::vector<double>> v(swarm, std::vector<double>(dim));
    for (std::size_t p = 0; p < swarm; ++p) {
        Rng r = init_rng.split(p);
        for (std::size_t d = 0; d < dim; ++d) {
            const double span = bounds[d].upper - bounds[d].lower;
            x[p][d] = bounds[d].lower + r.uniform() * span;
            v[p][d] = (r.uniform() - 0.5) * 0.2 * span;
        }
    }
    std::vector<double> values(swarm);
    evaluate_all(objective, x, values, threads);

    PsoResult result;
    result.evaluations = swarm;
    auto pbest = x;
    auto pbest_val = values;
    std::size_t g = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
    std::vector<double> gbest = x[g];
    double gbest_val = values[g];

    for (int it = 0; it < settings.iterations; ++it) {
        const Rng it_rng = step_rng.split(static_cast<std::uint64_t>(it));
        for (std::size_t p = 0; p < swarm; ++p) {
            Rng r = it_rng.split(p);
            for (std::size_t d = 0; d < dim; ++d) {
                const double span = bounds[d].upper - bounds[d].lower;
                const double r1 = r.uniform();
                const double r2 = r.uniform();
                double vel = settings.inertia * v[p][d] + settings.cognitive * r1 * (pbest[p][d] - x[p][d]) +
                             settings.social * r2 * (gbest[d] - x[p][d]);
                vel = std::clamp(vel, -span, span);
                double pos = x[p][d] + vel;
                reflect(pos, vel, bounds[d]);
                x[p][d] = pos;
                v[p][d] = vel;
            }
        }
        if (settings.observer) settings.observer(it, x);
        evaluate_all(objective, x, values, threads);
        result.evaluations += swarm;
        for (std::size_t p = 0; p < swarm; ++p) {
            if (values[p] < pbest_val[p]) {
                pbest_val[p] = values[p];
                pbest[p] = x[p];
            }
            if (values[p] < gbest_val) {
                gbest_val = values[p];
                gbest = x[p];
            }
        }
        result.convergence.push_back(gbest_val);
    }
    result.best_position = gbest;
    result.best_value = gbest_val;
    return result;
}

// -------------------------------------------------------------- calibration

double objective(const AbcdParams& params, const AbcdInit& init, const MonthlyForcing& forcing,
                 std::size_t warmup_len, const CalibrationCase& cal_case) {
    cal_case.validate();
    std::vector<std::span<const double>> observed;
    for (auto t : cal_case.targets) observed.push_back(forcing.column(target_column(t)));
    if (warmup_len >= forcing.size()) fail("RangeOutOfBounds", "warm-up covers the whole calibration forcing");

    AbcdTrace trace;
    try {
        trace = simulate(params, init, forcing, warmup_len);
    } catch (const Error& e) {
        if (e.code() == "MissingPET" || e.code() == "MissingObservation") throw;
        return kObjectiveFailure;
    }
    double total = 0.0;
    for (std::size_t k = 0; k < cal_case.targets.size(); ++k) {
        const auto sim = trace.scored(target_flux(cal_case.targets[k]));
        const auto obs = observed[k].subspan(warmup_len);
        double value = 0.0;
        try {
            value = nse(obs, sim);
        } catch (const Error&) {
            return kObjectiveFailure;
        }
        if (!std::isfinite(value)) return kObjectiveFailure;
        total += cal_case.weights[k] * (1.0 - value);
    }
    return total;
}

CalibrationResult pso_calibrate(const MonthlyForcing& forcing, std::size_t warmup_len,
                                const CalibrationCase& cal_case, const PsoConfig& config) {
    config.validate();
    cal_case.validate();
    config.init.validate();
    forcing.column(Column::P);
    forcing.column(Column::Pet);
    for (auto t : cal_case.targets) forcing.column(target_column(t));

    std::vector<Bounds> bounds{config.a, config.b, config.c, config.d};
    if (config.calibrate_init) {
        bounds.push_back(config.sm0_fraction);
        bounds.push_back(config.gw0);
    }
    auto decode = [&](std::span<const double> x) {
        AbcdParams p(x[0], x[1], x[2], x[3]);
        AbcdInit init = config.init;
        if (config.calibrate_init) init = {x[4] * x[1], x[5]};
        return std::pair{p, init};
    };
    auto f = [&](std::span<const double> x) {
        auto [p, init] = decode(x);
        return objective(p, init, forcing, warmup_len, cal_case);
    };
    auto r = pso_minimize(f, bounds, config.pso);
    auto [best, init] = decode(r.best_position);
    return {best, init, r.best_value, std::move(r.convergence), r.evaluations};
}

}  // namespace hydroflux
