#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "hydroflux/timeseries.hpp"

namespace hydroflux {

/// The four abcd parameters. Construction rejects values outside
/// a in (0,1], b > 0, c in [0,1], d in [0,1] (InvalidParameter).
class AbcdParams {
public:
    AbcdParams(double a, double b, double c, double d);

    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }
    double c() const noexcept { return c_; }
    double d() const noexcept { return d_; }

    friend bool operator==(const AbcdParams&, const AbcdParams&) = default;

private:
    double a_;
    double b_;
    double c_;
    double d_;
};

/// Initial soil-moisture and groundwater storages (mm).
struct AbcdInit {
    double sm0 = 100.0;
    double gw0 = 2.0;

    void validate() const;
};

/// Fluxes and states of one month, mm or mm/month.
struct AbcdMonth {
    double w = 0.0;   // available water
    double y = 0.0;   // evapotranspiration opportunity
    double et = 0.0;
    double sm = 0.0;
    double dr = 0.0;  // direct runoff
    double gr = 0.0;  // groundwater recharge
    double gw = 0.0;
    double gd = 0.0;  // groundwater discharge
    double q = 0.0;

    friend bool operator==(const AbcdMonth&, const AbcdMonth&) = default;
};

enum class Flux { W, Y, Et, Sm, Dr, Gr, Gw, Gd, Q };
std::string_view flux_name(Flux f);
double flux_value(const AbcdMonth& m, Flux f);

struct AbcdTrace {
    MonthStamp start;
    std::size_t warmup_len = 0;  // leading months excluded from scoring
    std::vector<AbcdMonth> months;

    std::size_t size() const noexcept { return months.size(); }
    std::size_t scored_size() const noexcept { return months.size() - warmup_len; }
    /// Values of one flux over the scored (post warm-up) months.
    std::vector<double> scored(Flux f) const;
    std::vector<double> all(Flux f) const;
};

/// Evapotranspiration opportunity Y(W). Uses the rationalised form of the
/// smaller quadratic root, which avoids cancellation for small W.
double y_function(double w, double a, double b);

AbcdMonth abcd_step(const AbcdParams& params, double sm_prev, double gw_prev, double p, double pet);

/// Residuals of the soil-moisture and groundwater balances of one month.
struct BalanceResidual {
    double soil = 0.0;
    double ground = 0.0;
};
BalanceResidual balance_residual(const AbcdMonth& m, double sm_prev, double gw_prev, double p);

AbcdTrace simulate(const AbcdParams& params, const AbcdInit& init, std::span<const double> p,
                   std::span<const double> pet, std::size_t warmup_len = 0, MonthStamp start = {});
/// Requires P and PET columns (MissingPET).
AbcdTrace simulate(const AbcdParams& params, const AbcdInit& init, const MonthlyForcing& forcing,
                   std::size_t warmup_len = 0);

/// `date,W,Y,ET,SM,DR,GR,GW,GD,Q` rows for every month including warm-up.
std::string emit_trace_csv(const AbcdTrace& trace);

}  // namespace hydroflux
