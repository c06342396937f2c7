#include "hydroflux/abcd.hpp"

#include <cmath>

#include "hydroflux/error.hpp"

namespace hydroflux {

AbcdParams::AbcdParams(double a, double b, double c, double d) : a_(a), b_(b), c_(c), d_(d) {
    auto bad = [](const char* what, double v) {
        fail("InvalidParameter", std::string("abcd parameter ") + what + " = " + format_number(v, 9) + " out of bounds");
    };
    if (!(a > 0.0 && a <= 1.0)) bad("a", a);
    if (!(b > 0.0) || !std::isfinite(b)) bad("b", b);
    if (!(c >= 0.0 && c <= 1.0)) bad("c", c);
    if (!(d >= 0.0 && d <= 1.0)) bad("d", d);
}

void AbcdInit::validate() const {
    if (!(sm0 >= 0.0) || !std::isfinite(sm0) || !(gw0 >= 0.0) || !std::isfinite(gw0)) {
        fail("InvalidParameter", "initial storages must be finite and nonnegative");
    }
}

std::string_view flux_name(Flux f) {
    switch (f) {
        case Flux::W: return "W";
        case Flux::Y: return "Y";
        case Flux::Et: return "ET";
        case Flux::Sm: return "SM";
        case Flux::Dr: return "DR";
        case Flux::Gr: return "GR";
        case Flux::Gw: return "GW";
        case Flux::Gd: return "GD";
        case Flux::Q: return "Q";
    }
    return "";
}

double flux_value(const AbcdMonth& m, Flux f) {
    switch (f) {
        case Flux::W: return m.w;
        case Flux::Y: return m.y;
        case Flux::Et: return m.et;
        case Flux::Sm: return m.sm;
        case Flux::Dr: return m.dr;
        case Flux::Gr: return m.gr;
        case Flux::Gw: return m.gw;
        case Flux::Gd: return m.gd;
        case Flux::Q: return m.q;
    }
    return 0.0;
}

std::vector<double> AbcdTrace::scored(Flux f) const {
    std::vector<double> out;
    out.reserve(scored_size());
    for (std::size_t i = warmup_len; i < months.size(); ++i) out.push_back(flux_value(months[i], f));
    return out;
}

std::vector<double> AbcdTrace::all(Flux f) const {
    std::vector<double> out;
    out.reserve(months.size());
    for (const auto& m : months) out.push_back(flux_value(m, f));
    return out;
}

double y_function(double w, double a, double b) {
    if (w <= 0.0) return 0.0;
    // Y is the smaller root of a*Y^2 - (W+b)*Y + b*W = 0:
    //   h - sqrt(h^2 - bW/a) == (bW/a) / (h + sqrt(h^2 - bW/a)),  h = (W+b)/(2a).
    const double h = (w + b) / (2.0 * a);
    const double bw = b * w / a;
    const double radicand = std::max(h * h - bw, 0.0);
    return bw / (h + std::sqrt(radicand));
}

AbcdMonth abcd_step(const AbcdParams& params, double sm_prev, double gw_prev, double p, double pet) {
    if (!std::isfinite(sm_prev) || !std::isfinite(gw_prev) || !std::isfinite(p) || !std::isfinite(pet) || p < 0.0 ||
        pet < 0.0 || sm_prev < 0.0 || gw_prev < 0.0) {
        fail("NonFiniteInput", "abcd step requires finite nonnegative inputs");
    }
    AbcdMonth m;
    m.w = sm_prev + p;
    m.y = std::min(y_function(m.w, params.a(), params.b()), m.w);
    m.et = m.y * (1.0 - std::exp(-pet / params.b()));
    m.sm = m.y - m.et;
    const double surplus = m.w - m.y;
    m.gr = params.c() * surplus;
    m.dr = surplus - m.gr;
    m.gw = (gw_prev + m.gr) / (1.0 + params.d());
    m.gd = params.d() * m.gw;
    m.q = m.dr + m.gd;
    return m;
}

BalanceResidual balance_residual(const AbcdMonth& m, double sm_prev, double gw_prev, double p) {
    return {m.sm + m.et + m.dr + m.gr - sm_prev - p, m.gw + m.gd - gw_prev - m.gr};
}

AbcdTrace simulate(const AbcdParams& params, const AbcdInit& init, std::span<const double> p,
                   std::span<const double> pet, std::size_t warmup_len, MonthStamp start) {
    init.validate();
    if (p.size() != pet.size()) fail("LengthMismatch", "precipitation and PET lengths differ");
    if (warmup_len > p.size()) fail("RangeOutOfBounds", "warm-up longer than forcing");
    AbcdTrace trace{start, warmup_len, {}};
    trace.months.reserve(p.size());
    double sm = init.sm0;
    double gw = init.gw0;
    for (std::size_t t = 0; t < p.size(); ++t) {
        const auto m = abcd_step(params, sm, gw, p[t], pet[t]);
        sm = m.sm;
        gw = m.gw;
        trace.months.push_back(m);
    }
    return trace;
}

AbcdTrace simulate(const AbcdParams& params, const AbcdInit& init, const MonthlyForcing& forcing,
                   std::size_t warmup_len) {
    return simulate(params, init, forcing.column(Column::P), forcing.column(Column::Pet), warmup_len,
                    forcing.start());
}

std::string emit_trace_csv(const AbcdTrace& trace) {
    std::string out = "date";
    constexpr Flux order[] = {Flux::W, Flux::Y, Flux::Et, Flux::Sm, Flux::Dr, Flux::Gr, Flux::Gw, Flux::Gd, Flux::Q};
    for (auto f : order) out += "," + std::string(flux_name(f));
    out += "\n";
    for (std::size_t i = 0; i < trace.months.size(); ++i) {
        out += trace.start.plus(static_cast<long>(i)).to_string();
        for (auto f : order) out += "," + format_number(flux_value(trace.months[i], f));
        out += "\n";
    }
    return out;
}

}  // namespace hydroflux
