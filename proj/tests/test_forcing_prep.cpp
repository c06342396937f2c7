#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "hydroflux/forcing_prep.hpp"
#include "test_util.hpp"

using namespace hydroflux;

namespace {

// Closed-form radiation re-evaluated in long double, independent of the library code.
long double ra_oracle(long double lat_deg, int doy) {
    const long double pi = 3.141592653589793238462643383279502884L;
    const long double phi = lat_deg * pi / 180.0L;
    const long double x = 2.0L * pi * doy / 365.0L;
    const long double dr = 1.0L + 0.033L * cosl(x);
    const long double decl = 0.409L * sinl(x - 1.39L);
    const long double ws = acosl(-tanl(phi) * tanl(decl));
    return (1440.0L / pi) * 0.0820L * dr * (ws * sinl(phi) * sinl(decl) + cosl(phi) * cosl(decl) * sinl(ws));
}

DailyClimate month_of(int year, int month, double lat, double p, double tmax, double tmin) {
    DailyClimate d{lat, {}};
    CalendarDay day{year, month, 1};
    while (day.month == month) {
        d.days.push_back({day, p, tmax, tmin, std::nullopt});
        day = day.next();
    }
    return d;
}

}  // namespace

TEST_CASE("calendar days") {
    CHECK(CalendarDay::parse("2008-12-31").day_of_year() == 366);
    CHECK(CalendarDay::parse("2009-12-31").day_of_year() == 365);
    CHECK(CalendarDay::parse("2009-06-21").day_of_year() == 172);
    CHECK(CalendarDay::parse("2009-02-28").next() == CalendarDay{2009, 3, 1});
    CHECK(CalendarDay::parse("2008-02-29").is_last_of_month());
    CHECK_ERROR_CODE(CalendarDay::parse("2009-02-29"), "InvalidDate");
}

TEST_CASE("extraterrestrial radiation at the gauge latitude") {
    // 40.096929235886... from a 40-digit evaluation of the same closed form
    CHECK(extraterrestrial_radiation(22.92, 172) == doctest::Approx(40.09692923588649).epsilon(1e-12));
    CHECK(extraterrestrial_radiation(22.92, 172) ==
          doctest::Approx(static_cast<double>(ra_oracle(22.92L, 172))).epsilon(1e-12));
}

TEST_CASE("radiation matches long-double re-evaluation across the year and band") {
    for (double lat : {-60.0, -30.0, -5.0, 0.0, 10.0, 22.92, 45.0, 66.0}) {
        for (int doy = 1; doy <= 366; ++doy) {
            const long double expect = std::max(0.0L, ra_oracle(lat, doy));
            CHECK(extraterrestrial_radiation(lat, doy) == doctest::Approx(static_cast<double>(expect)).epsilon(1e-11));
        }
    }
}

TEST_CASE("equatorial radiation is positive and symmetric about the solstices") {
    for (int doy = 1; doy <= 365; ++doy) CHECK(extraterrestrial_radiation(0.0, doy) > 0.0);
    for (int k = 1; k <= 60; ++k) {
        const double before = extraterrestrial_radiation(0.0, 172 - k);
        const double after = extraterrestrial_radiation(0.0, 172 + k);
        CHECK(std::abs(before - after) / after < 0.02);
        const double wb = extraterrestrial_radiation(0.0, 355 - k);
        const double wa = extraterrestrial_radiation(0.0, ((355 + k - 1) % 365) + 1);
        CHECK(std::abs(wb - wa) / wa < 0.02);
    }
}

TEST_CASE("radiation is continuous and periodic at mid latitudes") {
    for (double lat : {-45.0, -30.0, 30.0, 45.0}) {
        for (int doy = 1; doy < 365; ++doy) {
            CHECK(std::abs(extraterrestrial_radiation(lat, doy + 1) - extraterrestrial_radiation(lat, doy)) < 0.5);
        }
        CHECK(std::abs(extraterrestrial_radiation(lat, 365) - extraterrestrial_radiation(lat, 1)) < 0.5);
    }
}

TEST_CASE("latitude band") {
    CHECK_ERROR_CODE(extraterrestrial_radiation(70.0, 100), "LatitudeOutOfRange");
    CHECK_ERROR_CODE(extraterrestrial_radiation(-66.6, 100), "LatitudeOutOfRange");
    CHECK_NOTHROW(extraterrestrial_radiation(66.5, 100));
}

TEST_CASE("Hargreaves daily PET") {
    CHECK(hargreaves_pet_daily(20.0, 20.0, 30.0) == 0.0);
    CHECK(hargreaves_pet_daily(30.0, 20.0, 30.0) == doctest::Approx(9.338838386009258).epsilon(1e-12));
    CHECK(hargreaves_pet_daily(-10.0, -25.6, 30.0) == 0.0);  // Tavg = -17.8
    CHECK(hargreaves_pet_daily(-20.0, -40.0, 30.0) == 0.0);  // clamped
    CHECK_ERROR_CODE(hargreaves_pet_daily(10.0, 12.0, 30.0), "TmaxBelowTmin");
}

TEST_CASE("PET is nonnegative and nondecreasing in the temperature range") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> tav(-30.0, 40.0), ra(0.0, 45.0), rng_range(0.0, 25.0);
    for (int i = 0; i < 2000; ++i) {
        const double t = tav(rng), r = ra(rng);
        double d1 = rng_range(rng), d2 = rng_range(rng);
        if (d1 > d2) std::swap(d1, d2);
        const double p1 = hargreaves_pet_daily(t + d1 / 2, t - d1 / 2, r);
        const double p2 = hargreaves_pet_daily(t + d2 / 2, t - d2 / 2, r);
        CHECK(p1 >= 0.0);
        CHECK(p2 >= p1 - 1e-12);
    }
}

TEST_CASE("monthly PET sums daily values") {
    auto d = month_of(2009, 1, 22.92, 1.0, 30.0, 20.0);
    for (auto& r : d.days) r.ra_mj = 2.0 / (0.0023 * std::sqrt(10.0) * 42.8);
    const auto s = monthly_pet(d);
    REQUIRE(s.size() == 1);
    CHECK(s[0] == doctest::Approx(62.0).epsilon(1e-12));

    auto partial = d;
    partial.days.erase(partial.days.begin() + 10);
    CHECK_ERROR_CODE(monthly_pet(partial), "PartialMonth");
    auto truncated = d;
    truncated.days.pop_back();
    CHECK_ERROR_CODE(monthly_pet(truncated), "PartialMonth");
}

TEST_CASE("constant daily PET over n days gives n times c exactly") {
    for (int month = 1; month <= 12; ++month) {
        auto d = month_of(2008, month, 10.0, 0.0, 25.0, 15.0);
        const double c = hargreaves_pet_daily(25.0, 15.0, 20.0);
        for (auto& r : d.days) r.ra_mj = 20.0;
        double expect = 0.0;
        for (std::size_t k = 0; k < d.days.size(); ++k) expect += c;
        CHECK(monthly_pet(d)[0] == expect);
    }
}

TEST_CASE("synthetic year: monthly sums match an independent accumulation") {
    DailyClimate year{22.92, {}};
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> tmin(5.0, 25.0), range(2.0, 15.0);
    for (CalendarDay d{2010, 1, 1}; d.year == 2010; d = d.next()) {
        const double lo = tmin(rng);
        year.days.push_back({d, 0.0, lo + range(rng), lo, std::nullopt});
    }
    const auto s = monthly_pet(year);
    REQUIRE(s.size() == 12);
    std::vector<long double> acc(12, 0.0L);
    for (const auto& r : year.days) {
        const long double ra = ra_oracle(22.92L, r.date.day_of_year());
        const long double tavg = (r.tmax_c + r.tmin_c) / 2.0L;
        acc[static_cast<std::size_t>(r.date.month - 1)] +=
            0.0023L * ra * sqrtl(static_cast<long double>(r.tmax_c) - r.tmin_c) * (tavg + 17.8L);
    }
    for (int m = 0; m < 12; ++m) CHECK(s[static_cast<std::size_t>(m)] == doctest::Approx(static_cast<double>(acc[m])).epsilon(1e-10));
}

TEST_CASE("daily aggregation") {
    auto june = month_of(2009, 6, 22.92, 1.0, 30.0, 20.0);
    for (std::size_t i = 0; i < june.days.size(); ++i) june.days[i].tmax_c = i % 2 == 0 ? 20.0 : 30.0;
    for (auto& r : june.days) r.tmin_c = 10.0;
    const auto f = aggregate_daily(june);
    CHECK(f.size() == 1);
    CHECK(f.column(Column::P)[0] == 30.0);
    CHECK(f.column(Column::Tmax)[0] == doctest::Approx(25.0).epsilon(1e-15));
    CHECK(f.column(Column::Pet)[0] == monthly_pet(june)[0]);
}

TEST_CASE("randomized month matches brute-force re-sum") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 80.0);
    auto m = month_of(2012, 2, 0.0, 0.0, 30.0, 20.0);
    long double p = 0.0L, tx = 0.0L;
    for (auto& r : m.days) {
        r.p_mm = u(rng);
        r.tmax_c = 20.0 + u(rng) / 8.0;
        p += r.p_mm;
        tx += r.tmax_c;
    }
    const auto f = aggregate_daily(m);
    CHECK(std::abs(f.column(Column::P)[0] - static_cast<double>(p)) < 1e-12 * static_cast<double>(p));
    CHECK(std::abs(f.column(Column::Tmax)[0] - static_cast<double>(tx / m.days.size())) < 1e-12 * 30.0);
}

TEST_CASE("daily CSV parsing") {
    std::string text = "date,p_mm,tmax_c,tmin_c,ra_mj\n";
    CalendarDay d{2009, 4, 1};
    for (int i = 0; i < 30; ++i, d = d.next()) text += d.to_string() + ",2,30,20,30\n";
    const auto daily = parse_daily_csv(text, 22.92);
    CHECK(daily.days.size() == 30);
    CHECK(monthly_pet(daily)[0] == doctest::Approx(30 * 9.338838386009258).epsilon(1e-12));
    CHECK_ERROR_CODE(parse_daily_csv("date,p_mm,tmax_c,tmin_c\n2009-04-01,1,10,20\n", 0.0), "TmaxBelowTmin");
    CHECK_ERROR_CODE(parse_daily_csv("date,p_mm,tmin_c\n", 0.0), "MissingColumn");
}

TEST_CASE("PET from monthly means uses each calendar day") {
    MonthlyForcing f(MonthStamp(2009, 6), 1);
    f.set(Column::P, {0.0});
    f.set(Column::Tmax, {30.0});
    f.set(Column::Tmin, {20.0});
    long double expect = 0.0L;
    for (int doy = 152; doy < 182; ++doy) expect += 0.0023L * ra_oracle(22.92L, doy) * sqrtl(10.0L) * 42.8L;
    CHECK(monthly_pet_from_means(f, 22.92)[0] == doctest::Approx(static_cast<double>(expect)).epsilon(1e-11));
}
