#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hydroflux/timeseries.hpp"

namespace hydroflux {

struct CalendarDay {
    int year = 1970;
    int month = 1;
    int day = 1;

    static CalendarDay parse(std::string_view text);  // YYYY-MM-DD
    int day_of_year() const;
    CalendarDay next() const;
    bool is_last_of_month() const;
    std::string to_string() const;

    friend bool operator==(const CalendarDay&, const CalendarDay&) = default;
};

struct ClimateRecordDaily {
    CalendarDay date;
    double p_mm = 0.0;
    double tmax_c = 0.0;
    double tmin_c = 0.0;
    std::optional<double> ra_mj;  // overrides the computed radiation when present
};

/// Daily basin-average climate at a single (centroid) latitude.
struct DailyClimate {
    double latitude_deg = 0.0;
    std::vector<ClimateRecordDaily> days;
};

inline constexpr double kMaxAbsLatitude = 66.5;

/// Top-of-atmosphere radiation, MJ m^-2 day^-1 (FAO-56 solar geometry).
double extraterrestrial_radiation(double latitude_deg, int day_of_year);

/// Hargreaves reference evapotranspiration, mm/day. Clamped at 0 for Tavg < -17.8 C.
double hargreaves_pet_daily(double tmax_c, double tmin_c, double ra_mj);

/// Sum of daily Hargreaves PET per calendar month. Throws PartialMonth.
MonthlySeries monthly_pet(const DailyClimate& daily);

/// Monthly P (summed) and Tmax/Tmin (averaged), plus PET. Throws PartialMonth.
MonthlyForcing aggregate_daily(const DailyClimate& daily);

/// PET for a monthly forcing that only has monthly-mean temperatures: each day
/// of the month uses the monthly Tmax/Tmin with that day's radiation.
MonthlySeries monthly_pet_from_means(const MonthlyForcing& forcing, double latitude_deg);

/// Reads `date(YYYY-MM-DD),p_mm,tmax_c,tmin_c[,ra_mj]`.
DailyClimate load_daily_csv(const std::filesystem::path& path, double latitude_deg);
DailyClimate parse_daily_csv(std::string_view text, double latitude_deg);

}  // namespace hydroflux
