#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace hydroflux {

/// Nash-Sutcliffe efficiency. Throws LengthMismatch, InsufficientData, ConstantObserved.
double nse(std::span<const double> obs, std::span<const double> sim);

/// Percent bias; positive means the simulation underpredicts. Throws ZeroObservedSum.
double pbias(std::span<const double> obs, std::span<const double> sim);

double rmse(std::span<const double> obs, std::span<const double> sim);

enum class MoriasiClass { VeryGood, Good, Satisfactory, Unsatisfactory, Unacceptable };

/// Monthly NSE bands: > 0.8, (0.7, 0.8], (0.5, 0.7], [0, 0.5], < 0.
MoriasiClass moriasi_class(double nse_value);
std::string_view to_string(MoriasiClass c);

/// Fraction of observations inside [lower, upper]. Throws CrossedBounds.
double interval_coverage(std::span<const double> obs, std::span<const double> lower, std::span<const double> upper);

struct VariableScore {
    double nse = 0.0;
    double pbias = 0.0;
    double rmse = 0.0;
    MoriasiClass moriasi = MoriasiClass::Unacceptable;
    std::size_t n = 0;
    std::optional<double> coverage;  // 90% interval coverage when bounds were supplied
};

VariableScore score(std::span<const double> obs, std::span<const double> sim);

/// Per-variable scores keyed by variable label ("q", "et", ...).
struct EvalReport {
    std::map<std::string, VariableScore> variables;

    /// `{"format_version":..,"variables":{"q":{"nse":..,...}}}`
    std::string to_json() const;
    /// Aligned plain-text table.
    std::string to_table() const;
};

}  // namespace hydroflux
