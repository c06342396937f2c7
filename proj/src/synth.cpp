#include "hydroflux/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hydroflux/error.hpp"
#include "hydroflux/forcing_prep.hpp"
#include "hydroflux/rng.hpp"
#include "hydroflux/version.hpp"

namespace hydroflux {

void SynthSpec::validate() const {
    if (months < 48) fail("InvalidSynthSpec", "synthetic series needs at least 48 months");
    for (double s : {noise.et, noise.sm, noise.gw, noise.q, climate.p_sigma, climate.t_noise}) {
        if (!(s >= 0.0) || !std::isfinite(s)) fail("InvalidSynthSpec", "noise standard deviations must be >= 0");
    }
    if (!(climate.t_range >= 0.0)) fail("InvalidSynthSpec", "temperature range must be >= 0");
    try {
        (void)params();
        init.validate();
    } catch (const Error& e) {
        fail("InvalidSynthSpec", e.what());
    }
}

nlohmann::ordered_json SynthSpec::to_json() const {
    nlohmann::ordered_json j;
    j["format_version"] = kFormatVersion;
    j["start"] = start.to_string();
    j["months"] = months;
    j["seed"] = seed;
    j["true_params"] = {{"a", a}, {"b", b}, {"c", c}, {"d", d}};
    j["init"] = {{"sm0", init.sm0}, {"gw0", init.gw0}};
    j["climate"] = {{"p_mean", climate.p_mean},           {"p_amplitude", climate.p_amplitude},
                    {"p_peak_month", climate.p_peak_month}, {"p_sigma", climate.p_sigma},
                    {"t_mean", climate.t_mean},           {"t_amplitude", climate.t_amplitude},
                    {"t_peak_month", climate.t_peak_month}, {"t_range", climate.t_range},
                    {"t_noise", climate.t_noise},         {"latitude_deg", climate.latitude_deg}};
    j["noise_sd"] = {{"et", noise.et}, {"sm", noise.sm}, {"gw", noise.gw}, {"q", noise.q}};
    return j;
}

namespace {

double seasonal(int month, int peak) {
    return std::cos(2.0 * std::numbers::pi * static_cast<double>(month - peak) / 12.0);
}

std::vector<double> noisy(const std::vector<double>& clean, double sd, Rng rng) {
    std::vector<double> out(clean.size());
    for (std::size_t i = 0; i < clean.size(); ++i) {
        const double z = rng.normal();
        out[i] = sd > 0.0 ? std::max(0.0, clean[i] + sd * z) : clean[i];
    }
    return out;
}

}  // namespace

SynthOutput synth_generate(const SynthSpec& spec) {
    spec.validate();
    const auto& cl = spec.climate;
    const Rng root = Rng(spec.seed).split("synth");
    Rng p_rng = root.split("precip");
    Rng t_rng = root.split("temperature");

    const std::size_t n = spec.months;
    std::vector<double> p(n), tmax(n), tmin(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int month = spec.start.plus(static_cast<long>(i)).month;
        const double base = std::max(0.0, cl.p_mean + cl.p_amplitude * seasonal(month, cl.p_peak_month));
        const double z = p_rng.normal();
        p[i] = base * std::exp(cl.p_sigma * z - 0.5 * cl.p_sigma * cl.p_sigma);
        const double tavg = cl.t_mean + cl.t_amplitude * seasonal(month, cl.t_peak_month) + cl.t_noise * t_rng.normal();
        tmax[i] = tavg + 0.5 * cl.t_range;
        tmin[i] = tavg - 0.5 * cl.t_range;
    }

    SynthOutput out;
    out.forcing = MonthlyForcing(spec.start, n);
    out.forcing.set(Column::P, std::move(p));
    out.forcing.set(Column::Tmax, std::move(tmax));
    out.forcing.set(Column::Tmin, std::move(tmin));
    out.forcing.set(Column::Pet, std::move(monthly_pet_from_means(out.forcing, cl.latitude_deg).mutable_values()));

    out.trace = simulate(spec.params(), spec.init, out.forcing, 0);
    const Rng obs = root.split("observation");
    out.forcing.set(Column::Et, noisy(out.trace.all(Flux::Et), spec.noise.et, obs.split("et")));
    out.forcing.set(Column::Sm, noisy(out.trace.all(Flux::Sm), spec.noise.sm, obs.split("sm")));
    out.forcing.set(Column::Gw, noisy(out.trace.all(Flux::Gw), spec.noise.gw, obs.split("gw")));
    out.forcing.set(Column::Q, noisy(out.trace.all(Flux::Q), spec.noise.q, obs.split("q")));
    out.truth = spec.to_json();
    return out;
}

}  // namespace hydroflux
