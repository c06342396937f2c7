#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hydroflux/piml.hpp"
#include "hydroflux/timeseries.hpp"
#include "json.hpp"

namespace hydroflux {

/// Observed vs. predicted series of one variable over consecutive months.
struct PredictionTable {
    MonthStamp start;
    std::vector<double> observed;
    std::vector<double> predicted;
    std::optional<std::vector<double>> lower;
    std::optional<std::vector<double>> upper;

    std::size_t size() const noexcept { return predicted.size(); }
    void validate() const;
};

/// `date,observed,predicted[,lower,upper]`.
std::string emit_prediction_csv(const PredictionTable& table);
PredictionTable parse_prediction_csv(std::string_view text);
PredictionTable read_prediction_csv(const std::filesystem::path& path);

/// One (variable, series) pair of a long-format plot file.
struct PlotSeries {
    std::string variable;  // "q", "et", ...
    std::string series;    // "observed", "abcd", "gpr", ...
    MonthStamp start;
    std::vector<double> values;
};

/// `date,variable,series,value`, rows grouped by variable then series.
std::string emit_plot_csv(std::span<const PlotSeries> series);

nlohmann::ordered_json water_balance_json(const WaterBalanceReport& r);
/// `quantity,value` rows of the water-balance report.
std::string emit_water_balance_csv(const WaterBalanceReport& r);

/// Contents of run.json: command, seed, format_version and build id.
nlohmann::ordered_json run_metadata(const std::string& command, std::uint64_t seed);

void write_text(const std::filesystem::path& path, std::string_view text);
/// Pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j);
std::string read_text(const std::filesystem::path& path);

}  // namespace hydroflux
