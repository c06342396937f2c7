#include "hydroflux/forcing_prep.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "hydroflux/error.hpp"

namespace hydroflux {

namespace {

constexpr double kSolarConstant = 0.0820;  // MJ m^-2 min^-1

std::chrono::year_month_day to_ymd(const CalendarDay& d) {
    return std::chrono::year(d.year) / std::chrono::month(static_cast<unsigned>(d.month)) /
           std::chrono::day(static_cast<unsigned>(d.day));
}

void check_latitude(double latitude_deg) {
    if (!std::isfinite(latitude_deg) || std::abs(latitude_deg) > kMaxAbsLatitude) {
        fail("LatitudeOutOfRange", "latitude " + format_number(latitude_deg) + " outside [-66.5, 66.5]");
    }
}

struct MonthBlock {
    MonthStamp month;
    std::size_t begin = 0;
    std::size_t end = 0;
};

// Groups contiguous whole months. Throws PartialMonth.
std::vector<MonthBlock> whole_months(const std::vector<ClimateRecordDaily>& days) {
    std::vector<MonthBlock> blocks;
    if (days.empty()) return blocks;
    if (days.front().date.day != 1) {
        fail("PartialMonth", "daily record starts mid-month at " + days.front().date.to_string());
    }
    for (std::size_t i = 0; i < days.size(); ++i) {
        const auto& d = days[i].date;
        if (i > 0 && !(days[i - 1].date.next() == d)) {
            fail("PartialMonth", "daily record not contiguous: " + days[i - 1].date.to_string() + " then " +
                                     d.to_string());
        }
        if (d.day == 1) blocks.push_back({MonthStamp(d.year, d.month), i, i});
        blocks.back().end = i + 1;
    }
    if (!days.back().date.is_last_of_month()) {
        fail("PartialMonth", "daily record ends mid-month at " + days.back().date.to_string());
    }
    return blocks;
}

double day_pet(const ClimateRecordDaily& r, double latitude_deg) {
    double ra = r.ra_mj ? *r.ra_mj : extraterrestrial_radiation(latitude_deg, r.date.day_of_year());
    return hargreaves_pet_daily(r.tmax_c, r.tmin_c, ra);
}

}  // namespace

CalendarDay CalendarDay::parse(std::string_view text) {
    int y = 0;
    int m = 0;
    int d = 0;
    auto num = [](std::string_view s, int& out) {
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        return ec == std::errc() && p == s.data() + s.size();
    };
    while (!text.empty() && (text.back() == '\r' || text.back() == ' ')) text.remove_suffix(1);
    if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !num(text.substr(0, 4), y) ||
        !num(text.substr(5, 2), m) || !num(text.substr(8, 2), d)) {
        fail("InvalidDate", "expected YYYY-MM-DD, got '" + std::string(text) + "'");
    }
    CalendarDay out{y, m, d};
    if (!to_ymd(out).ok()) fail("InvalidDate", "no such day " + std::string(text));
    return out;
}

int CalendarDay::day_of_year() const {
    using namespace std::chrono;
    auto jan1 = sys_days(std::chrono::year(year) / January / 1);
    return static_cast<int>((sys_days(to_ymd(*this)) - jan1).count()) + 1;
}

CalendarDay CalendarDay::next() const {
    using namespace std::chrono;
    year_month_day n(sys_days(to_ymd(*this)) + days(1));
    return {static_cast<int>(n.year()), static_cast<int>(static_cast<unsigned>(n.month())),
            static_cast<int>(static_cast<unsigned>(n.day()))};
}

bool CalendarDay::is_last_of_month() const { return next().day == 1; }

std::string CalendarDay::to_string() const {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
    return buf;
}

double extraterrestrial_radiation(double latitude_deg, int day_of_year) {
    check_latitude(latitude_deg);
    if (day_of_year < 1 || day_of_year > 366) {
        fail("InvalidDate", "day of year " + std::to_string(day_of_year) + " outside 1..366");
    }
    using std::numbers::pi;
    const double phi = latitude_deg * pi / 180.0;
    const double j = static_cast<double>(day_of_year);
    const double dr = 1.0 + 0.033 * std::cos(2.0 * pi * j / 365.0);
    const double delta = 0.409 * std::sin(2.0 * pi * j / 365.0 - 1.39);
    const double omega = std::acos(std::clamp(-std::tan(phi) * std::tan(delta), -1.0, 1.0));
    const double ra = (24.0 * 60.0 / pi) * kSolarConstant * dr *
                      (omega * std::sin(phi) * std::sin(delta) + std::cos(phi) * std::cos(delta) * std::sin(omega));
    return std::max(ra, 0.0);
}

double hargreaves_pet_daily(double tmax_c, double tmin_c, double ra_mj) {
    if (!(tmax_c >= tmin_c)) {
        fail("TmaxBelowTmin", "tmax " + format_number(tmax_c) + " below tmin " + format_number(tmin_c));
    }
    const double tavg = 0.5 * (tmax_c + tmin_c);
    const double pet = 0.0023 * ra_mj * std::sqrt(tmax_c - tmin_c) * (tavg + 17.8);
    return pet > 0.0 ? pet : 0.0;
}

MonthlySeries monthly_pet(const DailyClimate& daily) {
    check_latitude(daily.latitude_deg);
    auto blocks = whole_months(daily.days);
    std::vector<double> sums;
    sums.reserve(blocks.size());
    for (const auto& b : blocks) {
        double s = 0.0;
        for (std::size_t i = b.begin; i < b.end; ++i) s += day_pet(daily.days[i], daily.latitude_deg);
        sums.push_back(s);
    }
    return {blocks.empty() ? MonthStamp() : blocks.front().month, std::move(sums)};
}

MonthlyForcing aggregate_daily(const DailyClimate& daily) {
    auto blocks = whole_months(daily.days);
    if (blocks.empty()) return {};
    std::vector<double> p;
    std::vector<double> tmax;
    std::vector<double> tmin;
    for (const auto& b : blocks) {
        double sp = 0.0;
        double sx = 0.0;
        double sn = 0.0;
        for (std::size_t i = b.begin; i < b.end; ++i) {
            const auto& r = daily.days[i];
            if (!(r.tmax_c >= r.tmin_c)) {
                fail("TmaxBelowTmin", "tmax below tmin on " + r.date.to_string());
            }
            sp += r.p_mm;
            sx += r.tmax_c;
            sn += r.tmin_c;
        }
        const double n = static_cast<double>(b.end - b.begin);
        p.push_back(sp);
        tmax.push_back(sx / n);
        tmin.push_back(sn / n);
    }
    MonthlyForcing out(blocks.front().month, blocks.size());
    out.set(Column::P, std::move(p));
    out.set(Column::Tmax, std::move(tmax));
    out.set(Column::Tmin, std::move(tmin));
    auto pet = monthly_pet(daily);
    out.set(Column::Pet, std::move(pet.mutable_values()));
    return out;
}

MonthlySeries monthly_pet_from_means(const MonthlyForcing& forcing, double latitude_deg) {
    check_latitude(latitude_deg);
    auto tmax = forcing.column(Column::Tmax);
    auto tmin = forcing.column(Column::Tmin);
    std::vector<double> out(forcing.size());
    for (std::size_t i = 0; i < forcing.size(); ++i) {
        auto m = forcing.stamp(i);
        CalendarDay d{m.year, m.month, 1};
        double s = 0.0;
        for (int k = 0; k < m.days(); ++k, d = d.next()) {
            s += hargreaves_pet_daily(tmax[i], tmin[i], extraterrestrial_radiation(latitude_deg, d.day_of_year()));
        }
        out[i] = s;
    }
    return {forcing.start(), std::move(out)};
}

DailyClimate parse_daily_csv(std::string_view text, double latitude_deg) {
    DailyClimate out{latitude_deg, {}};
    std::istringstream in{std::string(text)};
    std::string line;
    std::vector<std::string> header;
    auto split = [](const std::string& l) {
        std::vector<std::string> f;
        std::stringstream ss(l);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
            f.push_back(cell);
        }
        return f;
    };
    if (!std::getline(in, line)) fail("MissingColumn", "daily CSV has no header");
    header = split(line);
    auto idx = [&](const std::string& name) -> int {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return static_cast<int>(i);
        }
        return -1;
    };
    int i_date = idx("date");
    int i_p = idx("p_mm");
    int i_tx = idx("tmax_c");
    int i_tn = idx("tmin_c");
    int i_ra = idx("ra_mj");
    for (auto [name, i] : {std::pair{"date", i_date}, {"p_mm", i_p}, {"tmax_c", i_tx}, {"tmin_c", i_tn}}) {
        if (i < 0) fail("MissingColumn", std::string("daily CSV lacks '") + name + "'");
    }
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \r\t") == std::string::npos) continue;
        auto f = split(line);
        if (f.size() != header.size()) fail("MalformedRow", "daily CSV row " + std::to_string(row) + " field count");
        auto num = [&](int i) {
            auto v = parse_number(f[static_cast<std::size_t>(i)]);
            if (!v) {
                fail("NonFiniteValue", "daily CSV row " + std::to_string(row) + " column " +
                                           header[static_cast<std::size_t>(i)]);
            }
            return *v;
        };
        ClimateRecordDaily r;
        r.date = CalendarDay::parse(f[static_cast<std::size_t>(i_date)]);
        r.p_mm = num(i_p);
        r.tmax_c = num(i_tx);
        r.tmin_c = num(i_tn);
        if (i_ra >= 0) r.ra_mj = num(i_ra);
        if (r.p_mm < 0.0) fail("NegativeValue", "negative p_mm at daily row " + std::to_string(row));
        if (!(r.tmax_c >= r.tmin_c)) fail("TmaxBelowTmin", "tmax below tmin at daily row " + std::to_string(row));
        out.days.push_back(r);
    }
    return out;
}

DailyClimate load_daily_csv(const std::filesystem::path& path, double latitude_deg) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("FileNotFound", "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_daily_csv(ss.str(), latitude_deg);
}

}  // namespace hydroflux
