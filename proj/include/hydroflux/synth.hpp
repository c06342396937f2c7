#pragma once

#include <cstdint>
#include <string>

#include "hydroflux/abcd.hpp"
#include "hydroflux/timeseries.hpp"
#include "json.hpp"

namespace hydroflux {

struct SynthClimate {
    double p_mean = 80.0;       // mm/month
    double p_amplitude = 70.0;  // seasonal amplitude before clipping at zero
    int p_peak_month = 8;
    double p_sigma = 0.5;       // lognormal multiplicative noise
    double t_mean = 25.0;       // monthly mean of daily mean temperature, degC
    double t_amplitude = 6.0;
    int t_peak_month = 5;
    double t_range = 12.0;      // Tmax - Tmin
    double t_noise = 0.5;
    double latitude_deg = 22.92;
};

struct SynthNoise {
    double et = 0.0;
    double sm = 0.0;
    double gw = 0.0;
    double q = 0.0;
};

struct SynthSpec {
    MonthStamp start{1976, 1};
    std::size_t months = 468;
    std::uint64_t seed = 0;
    double a = 0.95;
    double b = 350.0;
    double c = 0.6;
    double d = 0.4;
    AbcdInit init;
    SynthClimate climate;
    SynthNoise noise;

    AbcdParams params() const { return {a, b, c, d}; }
    /// months >= 48, noise sds >= 0, parameters admissible (InvalidSynthSpec).
    void validate() const;
    nlohmann::ordered_json to_json() const;
};

struct SynthOutput {
    MonthlyForcing forcing;  // p, tmax, tmin, pet, et, sm, gw, q
    AbcdTrace trace;         // noiseless truth
    nlohmann::ordered_json truth;
};

SynthOutput synth_generate(const SynthSpec& spec);

}  // namespace hydroflux
