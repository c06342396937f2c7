#include "hydroflux/timeseries.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hydroflux/error.hpp"

namespace hydroflux {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        auto comma = line.find(',', pos);
        out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

bool parse_int(std::string_view s, int& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

bool must_be_nonnegative(Column c) {
    return c == Column::P || c == Column::Pet || c == Column::Et || c == Column::Q;
}

}  // namespace

// ---------------------------------------------------------------- MonthStamp

MonthStamp::MonthStamp(int y, int m) : year(y), month(m) {
    if (m < 1 || m > 12) fail("InvalidDate", "month " + std::to_string(m) + " outside 1..12");
}

MonthStamp MonthStamp::parse(std::string_view text) {
    text = trim(text);
    int y = 0;
    int m = 0;
    if (text.size() < 6 || text[4] != '-' || !parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5), m) ||
        text.size() != 7) {
        fail("InvalidDate", "expected YYYY-MM, got '" + std::string(text) + "'");
    }
    return MonthStamp(y, m);
}

MonthStamp MonthStamp::from_ordinal(long ordinal) {
    long y = ordinal >= 0 ? ordinal / 12 : -((-ordinal + 11) / 12);
    return MonthStamp(static_cast<int>(y), static_cast<int>(ordinal - y * 12 + 1));
}

int MonthStamp::days() const {
    using namespace std::chrono;
    auto ym = std::chrono::year(year) / std::chrono::month(static_cast<unsigned>(month));
    return static_cast<int>(static_cast<unsigned>((ym / last).day()));
}

std::string MonthStamp::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
    return buf;
}

MonthRange MonthRange::parse(std::string_view text) {
    text = trim(text);
    if (text.empty()) return empty_at(MonthStamp(1970, 1));
    auto colon = text.find(':');
    auto endpoint = [](std::string_view s, bool is_start) {
        s = trim(s);
        int y = 0;
        if (s.size() == 4 && parse_int(s, y)) return MonthStamp(y, is_start ? 1 : 12);
        return MonthStamp::parse(s);
    };
    if (colon == std::string_view::npos) return {endpoint(text, true), endpoint(text, false)};
    return {endpoint(text.substr(0, colon), true), endpoint(text.substr(colon + 1), false)};
}

std::string MonthRange::to_string() const {
    if (empty()) return "";
    return first.to_string() + ":" + last.to_string();
}

// ------------------------------------------------------------ MonthlySeries

MonthlySeries MonthlySeries::slice(std::size_t offset, std::size_t count) const {
    if (offset + count > values_.size()) fail("RangeOutOfBounds", "series slice exceeds length");
    return {stamp(offset), std::vector<double>(values_.begin() + static_cast<std::ptrdiff_t>(offset),
                                               values_.begin() + static_cast<std::ptrdiff_t>(offset + count))};
}

// ------------------------------------------------------------------ columns

std::string_view column_name(Column c) {
    switch (c) {
        case Column::P: return "p_mm";
        case Column::Tmax: return "tmax_c";
        case Column::Tmin: return "tmin_c";
        case Column::Pet: return "pet_mm";
        case Column::Et: return "et_mm";
        case Column::Sm: return "sm_mm";
        case Column::Gw: return "gw_mm";
        case Column::Q: return "q_mm";
    }
    return "";
}

std::string_view column_label(Column c) {
    switch (c) {
        case Column::P: return "p";
        case Column::Tmax: return "tmax";
        case Column::Tmin: return "tmin";
        case Column::Pet: return "pet";
        case Column::Et: return "et";
        case Column::Sm: return "sm";
        case Column::Gw: return "gw";
        case Column::Q: return "q";
    }
    return "";
}

std::optional<Column> column_from_name(std::string_view name) {
    for (auto c : kAllColumns) {
        if (name == column_name(c) || name == column_label(c)) return c;
    }
    return std::nullopt;
}

void validate_column(Column c, std::span<const double> values, std::size_t row_offset) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            fail("NonFiniteValue", "non-finite value in column " + std::string(column_name(c)) + " at row " +
                                       std::to_string(i + row_offset));
        }
        if (must_be_nonnegative(c) && values[i] < 0.0) {
            fail("NegativeValue", "negative value " + format_number(values[i]) + " in column " +
                                      std::string(column_name(c)) + " at row " + std::to_string(i + row_offset));
        }
    }
}

// ----------------------------------------------------------- MonthlyForcing

std::span<const double> MonthlyForcing::column(Column c) const {
    const auto& col = columns_[index(c)];
    if (!col) {
        if (c == Column::Pet) fail("MissingPET", "forcing has no pet_mm column");
        fail("MissingObservation", "forcing has no " + std::string(column_label(c)) + " column");
    }
    return *col;
}

void MonthlyForcing::set(Column c, std::vector<double> values) {
    if (values.size() != months_) {
        fail("LengthMismatch", "column " + std::string(column_name(c)) + " has " + std::to_string(values.size()) +
                                   " values, forcing spans " + std::to_string(months_) + " months");
    }
    validate_column(c, values);
    columns_[index(c)] = std::move(values);
}

MonthlyForcing MonthlyForcing::slice(std::size_t offset, std::size_t count) const {
    if (offset + count > months_) fail("RangeOutOfBounds", "forcing slice exceeds span " + span().to_string());
    MonthlyForcing out(stamp(offset), count);
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (!columns_[i]) continue;
        const auto& src = *columns_[i];
        out.columns_[i] = std::vector<double>(src.begin() + static_cast<std::ptrdiff_t>(offset),
                                              src.begin() + static_cast<std::ptrdiff_t>(offset + count));
    }
    return out;
}

MonthlyForcing MonthlyForcing::slice(const MonthRange& range) const {
    if (range.empty()) {
        MonthlyForcing out(range.first, 0);
        for (std::size_t i = 0; i < columns_.size(); ++i) {
            if (columns_[i]) out.columns_[i] = std::vector<double>{};
        }
        return out;
    }
    if (range.first < start_ || range.last > last()) {
        fail("RangeOutOfBounds", "range " + range.to_string() + " outside forcing span " + span().to_string());
    }
    return slice(static_cast<std::size_t>(months_between(start_, range.first)), range.size());
}

std::vector<Column> MonthlyForcing::present_columns() const {
    std::vector<Column> out;
    for (auto c : kAllColumns) {
        if (has(c)) out.push_back(c);
    }
    return out;
}

// -------------------------------------------------------------------- split

SplitSpec SplitSpec::paper_default() {
    return {MonthRange{{1976, 1}, {1978, 12}}, MonthRange{{1979, 1}, {2008, 12}}, MonthRange{{2009, 1}, {2014, 12}}};
}

void validate_split(const SplitSpec& spec) {
    const MonthRange* ranges[] = {&spec.warmup, &spec.train, &spec.test};
    const char* names[] = {"warmup", "train", "test"};
    const MonthRange* prev = nullptr;
    const char* prev_name = nullptr;
    for (int i = 0; i < 3; ++i) {
        if (ranges[i]->empty()) continue;
        if (prev != nullptr && !(prev->last < ranges[i]->first)) {
            fail("OverlapError", std::string(prev_name) + " range " + prev->to_string() + " does not precede " +
                                     names[i] + " range " + ranges[i]->to_string());
        }
        prev = ranges[i];
        prev_name = names[i];
    }
}

SplitForcing split(const MonthlyForcing& forcing, const SplitSpec& spec) {
    validate_split(spec);
    return {forcing.slice(spec.warmup), forcing.slice(spec.train), forcing.slice(spec.test)};
}

// ---------------------------------------------------------------------- CSV

std::optional<double> parse_number(std::string_view text) {
    text = trim(text);
    if (text.empty()) return std::nullopt;
    if (text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::string format_number(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    std::string s(buf);
    if (s.find('.') != std::string::npos) {
        while (s.back() == '0') s.pop_back();
        if (s.back() == '.') s.pop_back();
    }
    if (s == "-0") s = "0";
    return s;
}

MonthlyForcing parse_forcing_csv(std::string_view text, const CsvSchema& schema) {
    std::vector<std::string_view> lines;
    {
        std::size_t pos = 0;
        while (pos < text.size()) {
            auto nl = text.find('\n', pos);
            auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
            if (!trim(line).empty()) lines.push_back(line);
            if (nl == std::string_view::npos) break;
            pos = nl + 1;
        }
    }
    if (lines.empty()) fail("MissingColumn", "forcing CSV has no header row");
    if (lines[0].substr(0, 3) == "\xEF\xBB\xBF") lines[0].remove_prefix(3);

    auto header = split_fields(lines[0]);
    auto find_header = [&](std::string_view name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        return std::nullopt;
    };
    auto date_idx = find_header("date");
    if (!date_idx) fail("MissingColumn", "forcing CSV lacks 'date' column");

    std::vector<std::pair<Column, std::size_t>> present;
    for (auto c : kAllColumns) {
        auto it = schema.find(c);
        std::string name = it != schema.end() ? it->second : std::string(column_name(c));
        auto idx = find_header(name);
        if (idx) {
            present.emplace_back(c, *idx);
        } else if (c == Column::P || c == Column::Tmax || c == Column::Tmin) {
            fail("MissingColumn", "forcing CSV lacks required column '" + name + "'");
        }
    }

    std::vector<MonthStamp> dates;
    std::vector<std::vector<double>> values(present.size());
    for (std::size_t r = 1; r < lines.size(); ++r) {
        auto fields = split_fields(lines[r]);
        if (fields.size() != header.size()) {
            fail("MalformedRow", "row " + std::to_string(r) + " has " + std::to_string(fields.size()) +
                                     " fields, header has " + std::to_string(header.size()));
        }
        dates.push_back(MonthStamp::parse(fields[*date_idx]));
        for (std::size_t k = 0; k < present.size(); ++k) {
            auto v = parse_number(fields[present[k].second]);
            if (!v) {
                fail("NonFiniteValue", "row " + std::to_string(r) + " column " + std::string(header[present[k].second]) +
                                           ": '" + std::string(fields[present[k].second]) + "' is not a finite number");
            }
            values[k].push_back(*v);
        }
    }
    if (dates.empty()) fail("MissingColumn", "forcing CSV has no data rows");

    std::vector<std::string> missing;
    for (std::size_t i = 1; i < dates.size(); ++i) {
        if (!(dates[i - 1] < dates[i])) {
            fail("UnsortedDates", "row " + std::to_string(i + 1) + " date " + dates[i].to_string() +
                                      " does not follow " + dates[i - 1].to_string());
        }
        for (auto m = dates[i - 1].plus(1); m < dates[i]; m = m.plus(1)) missing.push_back(m.to_string());
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ",") + m;
        fail("GapInCalendar", "missing months: " + list);
    }

    MonthlyForcing out(dates.front(), dates.size());
    for (std::size_t k = 0; k < present.size(); ++k) {
        validate_column(present[k].first, values[k], 1);
        out.set(present[k].first, std::move(values[k]));
    }
    return out;
}

MonthlyForcing load_forcing_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("FileNotFound", "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_forcing_csv(ss.str(), schema);
}

std::string emit_forcing_csv(const MonthlyForcing& forcing) {
    auto cols = forcing.present_columns();
    std::string out = "date";
    for (auto c : cols) out += "," + std::string(column_name(c));
    out += "\n";
    for (std::size_t i = 0; i < forcing.size(); ++i) {
        out += forcing.stamp(i).to_string();
        for (auto c : cols) out += "," + format_number(forcing.column(c)[i]);
        out += "\n";
    }
    return out;
}

void write_forcing_csv(const std::filesystem::path& path, const MonthlyForcing& forcing) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("IoError", "cannot write " + path.string());
    out << emit_forcing_csv(forcing);
}

MonthlySeries discharge_to_depth(const MonthlySeries& q_cms, double area_km2) {
    if (!(area_km2 > 0.0) || !std::isfinite(area_km2)) {
        fail("NonPositiveArea", "basin area must be positive, got " + format_number(area_km2));
    }
    std::vector<double> out(q_cms.size());
    for (std::size_t i = 0; i < q_cms.size(); ++i) {
        double seconds = 86400.0 * q_cms.stamp(i).days();
        out[i] = q_cms[i] * seconds / (area_km2 * 1e6) * 1000.0;
    }
    return {q_cms.start(), std::move(out)};
}

}  // namespace hydroflux
