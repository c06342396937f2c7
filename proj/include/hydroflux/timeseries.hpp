#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hydroflux {

/// Calendar month. Ordered lexicographically by (year, month).
struct MonthStamp {
    int year = 1970;
    int month = 1;

    MonthStamp() = default;
    MonthStamp(int y, int m);

    /// Parses "YYYY-MM". Throws InvalidDate.
    static MonthStamp parse(std::string_view text);

    /// Months since year 0, January.
    long ordinal() const noexcept { return static_cast<long>(year) * 12 + (month - 1); }
    static MonthStamp from_ordinal(long ordinal);

    MonthStamp plus(long months) const { return from_ordinal(ordinal() + months); }
    int days() const;
    std::string to_string() const;

    friend bool operator==(const MonthStamp&, const MonthStamp&) = default;
    friend auto operator<=>(const MonthStamp& l, const MonthStamp& r) { return l.ordinal() <=> r.ordinal(); }
};

/// Number of months from `from` to `to` (negative when `to` precedes `from`).
inline long months_between(const MonthStamp& from, const MonthStamp& to) { return to.ordinal() - from.ordinal(); }

/// Inclusive month range. A range whose last month precedes its first is empty.
struct MonthRange {
    MonthStamp first;
    MonthStamp last;

    static MonthRange empty_at(const MonthStamp& where) { return {where, where.plus(-1)}; }
    /// Parses "YYYY-MM:YYYY-MM", a bare "YYYY" ("YYYY-01:YYYY-12"), "YYYY:YYYY", or "" (empty).
    static MonthRange parse(std::string_view text);

    bool empty() const noexcept { return last < first; }
    std::size_t size() const noexcept { return empty() ? 0 : static_cast<std::size_t>(months_between(first, last) + 1); }
    bool contains(const MonthStamp& m) const noexcept { return !empty() && first <= m && m <= last; }
    std::string to_string() const;
};

/// Contiguous monthly series: value i belongs to start.plus(i).
class MonthlySeries {
public:
    MonthlySeries() = default;
    MonthlySeries(MonthStamp start, std::vector<double> values) : start_(start), values_(std::move(values)) {}

    const MonthStamp& start() const noexcept { return start_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }
    MonthStamp stamp(std::size_t i) const { return start_.plus(static_cast<long>(i)); }
    MonthStamp last() const { return start_.plus(static_cast<long>(values_.size()) - 1); }

    double operator[](std::size_t i) const { return values_[i]; }
    std::span<const double> values() const noexcept { return values_; }
    std::vector<double>& mutable_values() noexcept { return values_; }

    MonthlySeries slice(std::size_t offset, std::size_t count) const;

private:
    MonthStamp start_;
    std::vector<double> values_;
};

enum class Column { P, Tmax, Tmin, Pet, Et, Sm, Gw, Q };
inline constexpr std::array<Column, 8> kAllColumns = {Column::P,  Column::Tmax, Column::Tmin, Column::Pet,
                                                      Column::Et, Column::Sm,   Column::Gw,   Column::Q};

/// CSV header name of a column, e.g. "p_mm".
std::string_view column_name(Column c);
/// Short variable name used in reports and errors, e.g. "sm".
std::string_view column_label(Column c);
std::optional<Column> column_from_name(std::string_view name);

/// Aligned monthly forcing and observations in basin-average depth units.
///
/// Every present column has the same start and length. P, PET, ET and Q are
/// nonnegative; all values are finite. Columns other than P/Tmax/Tmin are
/// optional, and accessors for a missing column throw MissingObservation.
class MonthlyForcing {
public:
    MonthlyForcing() = default;
    MonthlyForcing(MonthStamp start, std::size_t months) : start_(start), months_(months) {}

    const MonthStamp& start() const noexcept { return start_; }
    std::size_t size() const noexcept { return months_; }
    MonthStamp stamp(std::size_t i) const { return start_.plus(static_cast<long>(i)); }
    MonthStamp last() const { return start_.plus(static_cast<long>(months_) - 1); }
    MonthRange span() const { return {start_, last()}; }

    bool has(Column c) const noexcept { return columns_[index(c)].has_value(); }
    /// Values of a column; throws MissingObservation (or MissingPET for PET) if absent.
    std::span<const double> column(Column c) const;
    MonthlySeries series(Column c) const { return {start_, std::vector<double>(column(c).begin(), column(c).end())}; }

    /// Installs a column after validating length, finiteness and sign.
    void set(Column c, std::vector<double> values);
    void erase(Column c) noexcept { columns_[index(c)].reset(); }

    /// Sub-range view copied out as a new forcing. Throws RangeOutOfBounds.
    MonthlyForcing slice(const MonthRange& range) const;
    MonthlyForcing slice(std::size_t offset, std::size_t count) const;

    std::vector<Column> present_columns() const;

private:
    static std::size_t index(Column c) noexcept { return static_cast<std::size_t>(c); }

    MonthStamp start_;
    std::size_t months_ = 0;
    std::array<std::optional<std::vector<double>>, 8> columns_;
};

/// Checks the value-level invariants of a column (finite; nonnegative for P/PET/ET/Q).
/// `row_offset` is added to reported row numbers.
void validate_column(Column c, std::span<const double> values, std::size_t row_offset = 0);

struct SplitSpec {
    MonthRange warmup;
    MonthRange train;
    MonthRange test;

    /// Warm-up 1976-1978, training 1979-2008, testing 2009-2014.
    static SplitSpec paper_default();
};

struct SplitForcing {
    MonthlyForcing warmup;
    MonthlyForcing train;
    MonthlyForcing test;
};

/// Checks ordering/disjointness (OverlapError).
void validate_split(const SplitSpec& spec);
/// Slices a forcing into the three periods. Throws OverlapError, RangeOutOfBounds.
SplitForcing split(const MonthlyForcing& forcing, const SplitSpec& spec);

/// Column-name map: which CSV header holds each column. Defaults to column_name().
using CsvSchema = std::map<Column, std::string>;

/// Reads a forcing CSV: header `date,p_mm,tmax_c,tmin_c[,pet_mm][,et_mm][,sm_mm][,gw_mm][,q_mm]`.
/// Throws MissingColumn, GapInCalendar, NonFiniteValue, NegativeValue, UnsortedDates.
MonthlyForcing load_forcing_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
MonthlyForcing parse_forcing_csv(std::string_view text, const CsvSchema& schema = {});

/// Writes the same schema; floats with at most 6 decimals, trailing zeros trimmed.
std::string emit_forcing_csv(const MonthlyForcing& forcing);
void write_forcing_csv(const std::filesystem::path& path, const MonthlyForcing& forcing);

/// Gauge discharge (m^3/s, monthly mean) to basin depth (mm/month) using calendar-month seconds.
MonthlySeries discharge_to_depth(const MonthlySeries& q_cms, double area_km2);

/// Fixed-point rendering with up to `decimals` places and trailing zeros removed ("-0" normalised to "0").
std::string format_number(double value, int decimals = 6);
/// Strict finite-number parse; returns nullopt for anything else.
std::optional<double> parse_number(std::string_view text);

}  // namespace hydroflux
