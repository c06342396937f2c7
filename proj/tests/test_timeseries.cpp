#include <cmath>
#include <random>

#include "doctest.h"
#include "hydroflux/timeseries.hpp"
#include "test_util.hpp"

using namespace hydroflux;

namespace {

std::string csv_for(MonthStamp start, int months) {
    std::string s = "date,p_mm,tmax_c,tmin_c\n";
    for (int i = 0; i < months; ++i) {
        s += start.plus(i).to_string() + "," + std::to_string(10 + i) + ",30,20\n";
    }
    return s;
}

MonthlyForcing filled(MonthStamp start, std::size_t n) {
    MonthlyForcing f(start, n);
    std::vector<double> p(n), tx(n), tn(n);
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = static_cast<double>(i);
        tx[i] = 30.0;
        tn[i] = 20.0;
    }
    f.set(Column::P, p);
    f.set(Column::Tmax, tx);
    f.set(Column::Tmin, tn);
    return f;
}

}  // namespace

TEST_CASE("month stamps order and step") {
    const auto m = MonthStamp::parse("2009-12");
    CHECK(m.plus(1) == MonthStamp(2010, 1));
    CHECK(m.plus(-12) == MonthStamp(2008, 12));
    CHECK(MonthStamp(2008, 2).days() == 29);
    CHECK(MonthStamp(2009, 2).days() == 28);
    CHECK(MonthStamp(1900, 2).days() == 28);
    CHECK(MonthStamp(2000, 2).days() == 29);
    CHECK(MonthStamp(1999, 12) < MonthStamp(2000, 1));
    CHECK(months_between(MonthStamp(1976, 1), MonthStamp(2014, 12)) == 467);
    CHECK_ERROR_CODE(MonthStamp::parse("2009-13"), "InvalidDate");
    CHECK_ERROR_CODE(MonthStamp::parse("2009/01"), "InvalidDate");
}

TEST_CASE("month ranges") {
    CHECK(MonthRange::parse("1979:2008").size() == 360);
    CHECK(MonthRange::parse("2009").size() == 12);
    CHECK(MonthRange::parse("").empty());
    CHECK(MonthRange::parse("2009-03:2009-05").to_string() == "2009-03:2009-05");
}

TEST_CASE("72-row file loads with length 72") {
    const auto f = parse_forcing_csv(csv_for(MonthStamp(2009, 1), 72));
    CHECK(f.size() == 72);
    CHECK(f.start() == MonthStamp(2009, 1));
    CHECK(f.last() == MonthStamp(2014, 12));
    CHECK(f.column(Column::P)[5] == 15.0);
    CHECK_FALSE(f.has(Column::Q));
    CHECK_ERROR_CODE(f.column(Column::Q), "MissingObservation");
    CHECK_ERROR_CODE(f.column(Column::Pet), "MissingPET");
}

TEST_CASE("calendar gap is reported with the missing month") {
    std::string s = "date,p_mm,tmax_c,tmin_c\n2009-01,1,30,20\n2009-02,1,30,20\n2009-04,1,30,20\n";
    try {
        parse_forcing_csv(s);
        FAIL("expected GapInCalendar");
    } catch (const Error& e) {
        CHECK(e.code() == "GapInCalendar");
        CHECK(std::string(e.what()).find("2009-03") != std::string::npos);
    }
}

TEST_CASE("negative precipitation names its row") {
    std::string s = "date,p_mm,tmax_c,tmin_c\n2009-01,1,30,20\n2009-02,-5,30,20\n";
    try {
        parse_forcing_csv(s);
        FAIL("expected NegativeValue");
    } catch (const Error& e) {
        CHECK(e.code() == "NegativeValue");
        CHECK(std::string(e.what()).find("row") != std::string::npos);
    }
}

TEST_CASE("ingestion errors") {
    CHECK_ERROR_CODE(parse_forcing_csv("date,p_mm,tmax_c\n2009-01,1,30\n"), "MissingColumn");
    CHECK_ERROR_CODE(parse_forcing_csv("date,p_mm,tmax_c,tmin_c\n2009-01,nan,30,20\n"), "NonFiniteValue");
    CHECK_ERROR_CODE(parse_forcing_csv("date,p_mm,tmax_c,tmin_c\n2009-01,inf,30,20\n"), "NonFiniteValue");
    CHECK_ERROR_CODE(parse_forcing_csv("date,p_mm,tmax_c,tmin_c\n2009-02,1,30,20\n2009-01,1,30,20\n"),
                     "UnsortedDates");
    CHECK_ERROR_CODE(parse_forcing_csv("date,p_mm,tmax_c,tmin_c\n2009-01,1,30\n"), "MalformedRow");
    CHECK_ERROR_CODE(load_forcing_csv("/nonexistent/forcing.csv"), "FileNotFound");
}

TEST_CASE("custom schema maps header names") {
    CsvSchema schema{{Column::P, "precip"}};
    const auto f = parse_forcing_csv("date,precip,tmax_c,tmin_c\n2009-01,4.5,30,20\n", schema);
    CHECK(f.column(Column::P)[0] == 4.5);
}

TEST_CASE("csv round trip keeps 12 significant digits") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 500.0);
    MonthlyForcing f(MonthStamp(1990, 1), 40);
    for (auto c : kAllColumns) {
        std::vector<double> v(40);
        // six decimals is the emitted precision; inputs with more decimals are rounded
        for (auto& x : v) x = std::round(u(rng) * 1e6) / 1e6;
        f.set(c, v);
    }
    const auto text = emit_forcing_csv(f);
    const auto g = parse_forcing_csv(text);
    CHECK(emit_forcing_csv(g) == text);
    for (auto c : kAllColumns) {
        for (std::size_t i = 0; i < 40; ++i) {
            const double a = f.column(c)[i];
            const double b = g.column(c)[i];
            CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
        }
    }
}

TEST_CASE("paper split lengths") {
    const auto f = filled(MonthStamp(1976, 1), 468);
    const auto parts = split(f, SplitSpec::paper_default());
    CHECK(parts.warmup.size() == 36);
    CHECK(parts.train.size() == 360);
    CHECK(parts.test.size() == 72);
    // the three views partition the input
    std::vector<double> joined;
    for (const auto* part : {&parts.warmup, &parts.train, &parts.test}) {
        auto p = part->column(Column::P);
        joined.insert(joined.end(), p.begin(), p.end());
    }
    auto orig = f.column(Column::P);
    CHECK(std::equal(joined.begin(), joined.end(), orig.begin(), orig.end()));
    CHECK(parts.train.start() == MonthStamp(1979, 1));
    CHECK(parts.test.start() == MonthStamp(2009, 1));
}

TEST_CASE("split errors and degenerate warm-up") {
    const auto f = filled(MonthStamp(2000, 1), 24);
    SplitSpec overlap{MonthRange::parse(""), MonthRange::parse("2000-01:2000-12"), MonthRange::parse("2000-12:2001-12")};
    CHECK_ERROR_CODE(split(f, overlap), "OverlapError");
    SplitSpec outside{MonthRange::parse(""), MonthRange::parse("2000"), MonthRange::parse("2001-01:2002-06")};
    CHECK_ERROR_CODE(split(f, outside), "RangeOutOfBounds");
    SplitSpec degenerate{MonthRange::empty_at(MonthStamp(2000, 1)), MonthRange::parse("2000-01:2001-06"),
                         MonthRange::parse("2001-07:2001-12")};
    const auto parts = split(f, degenerate);
    CHECK(parts.warmup.size() == 0);
    CHECK(parts.train.size() == 18);
    CHECK(parts.test.size() == 6);
}

TEST_CASE("discharge to depth") {
    MonthlySeries zero(MonthStamp(2009, 1), {0.0, 0.0, 0.0});
    const auto depth = discharge_to_depth(zero, 100.0);
    for (double v : depth.values()) CHECK(v == 0.0);

    MonthlySeries one(MonthStamp(2009, 1), {1.0});
    CHECK(discharge_to_depth(one, 1.0)[0] == doctest::Approx(2678.4).epsilon(1e-12));

    MonthlySeries hundred(MonthStamp(2009, 4), {100.0});
    CHECK(discharge_to_depth(hundred, 38571.0)[0] == doctest::Approx(6.720).epsilon(1e-3));

    MonthlySeries leap(MonthStamp(2008, 2), {1.0});
    CHECK(discharge_to_depth(leap, 1.0)[0] == doctest::Approx(29 * 86400.0 / 1000.0));

    CHECK_ERROR_CODE(discharge_to_depth(one, 0.0), "NonPositiveArea");
    CHECK_ERROR_CODE(discharge_to_depth(one, -3.0), "NonPositiveArea");
}

TEST_CASE("discharge conversion is linear in q and inverse in area") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.1, 1000.0);
    std::vector<double> q(24);
    for (auto& x : q) x = u(rng);
    MonthlySeries s(MonthStamp(2001, 1), q);
    const double k = 3.7;
    const double area = 1234.5;
    std::vector<double> qk(q);
    for (auto& x : qk) x *= k;
    const auto base = discharge_to_depth(s, area);
    const auto scaled = discharge_to_depth(MonthlySeries(s.start(), qk), area);
    const auto wider = discharge_to_depth(s, area * k);
    for (std::size_t i = 0; i < q.size(); ++i) {
        CHECK(scaled[i] == doctest::Approx(k * base[i]).epsilon(1e-12));
        CHECK(wider[i] == doctest::Approx(base[i] / k).epsilon(1e-12));
    }
}

TEST_CASE("forcing validates columns on set") {
    MonthlyForcing f(MonthStamp(2000, 1), 3);
    CHECK_ERROR_CODE(f.set(Column::P, {1.0, 2.0}), "LengthMismatch");
    CHECK_ERROR_CODE(f.set(Column::Q, {1.0, -2.0, 0.0}), "NegativeValue");
    CHECK_ERROR_CODE(f.set(Column::Tmax, {1.0, NAN, 0.0}), "NonFiniteValue");
    f.set(Column::Tmin, {-5.0, -2.0, 0.0});  // temperatures may be negative
    CHECK(f.has(Column::Tmin));
}

TEST_CASE("number formatting") {
    CHECK(format_number(1.5) == "1.5");
    CHECK(format_number(2.0) == "2");
    CHECK(format_number(-0.0000001) == "0");
    CHECK(format_number(0.1234567) == "0.123457");
    CHECK_FALSE(parse_number("nan").has_value());
    CHECK_FALSE(parse_number("1.5x").has_value());
    CHECK(parse_number("-2.25").value() == -2.25);
}
