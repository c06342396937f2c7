#include "hydroflux/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "json.hpp"

#include "hydroflux/error.hpp"
#include "hydroflux/version.hpp"

namespace hydroflux {

namespace {

void check_lengths(std::span<const double> obs, std::span<const double> sim, std::size_t min_n) {
    if (obs.size() != sim.size()) {
        fail("LengthMismatch", "observed has " + std::to_string(obs.size()) + " values, simulated has " +
                                   std::to_string(sim.size()));
    }
    if (obs.size() < min_n) {
        fail("InsufficientData", "metric needs at least " + std::to_string(min_n) + " values, got " +
                                     std::to_string(obs.size()));
    }
}

}  // namespace

double nse(std::span<const double> obs, std::span<const double> sim) {
    check_lengths(obs, sim, 2);
    double mean = 0.0;
    for (double o : obs) mean += o;
    mean /= static_cast<double>(obs.size());
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        num += (obs[i] - sim[i]) * (obs[i] - sim[i]);
        den += (obs[i] - mean) * (obs[i] - mean);
    }
    if (den == 0.0) fail("ConstantObserved", "NSE undefined for constant observations");
    return 1.0 - num / den;
}

double pbias(std::span<const double> obs, std::span<const double> sim) {
    check_lengths(obs, sim, 1);
    double diff = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        diff += obs[i] - sim[i];
        total += obs[i];
    }
    if (total == 0.0) fail("ZeroObservedSum", "PBIAS undefined when observations sum to zero");
    return diff / total * 100.0;
}

double rmse(std::span<const double> obs, std::span<const double> sim) {
    check_lengths(obs, sim, 1);
    double ss = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) ss += (obs[i] - sim[i]) * (obs[i] - sim[i]);
    return std::sqrt(ss / static_cast<double>(obs.size()));
}

MoriasiClass moriasi_class(double v) {
    if (v > 0.8) return MoriasiClass::VeryGood;
    if (v > 0.7) return MoriasiClass::Good;
    if (v > 0.5) return MoriasiClass::Satisfactory;
    if (v >= 0.0) return MoriasiClass::Unsatisfactory;
    return MoriasiClass::Unacceptable;
}

std::string_view to_string(MoriasiClass c) {
    switch (c) {
        case MoriasiClass::VeryGood: return "VeryGood";
        case MoriasiClass::Good: return "Good";
        case MoriasiClass::Satisfactory: return "Satisfactory";
        case MoriasiClass::Unsatisfactory: return "Unsatisfactory";
        case MoriasiClass::Unacceptable: return "Unacceptable";
    }
    return "";
}

double interval_coverage(std::span<const double> obs, std::span<const double> lower, std::span<const double> upper) {
    if (obs.size() != lower.size() || obs.size() != upper.size()) {
        fail("LengthMismatch", "interval bounds and observations differ in length");
    }
    if (obs.empty()) fail("InsufficientData", "coverage of an empty series");
    std::size_t inside = 0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        if (lower[i] > upper[i]) fail("CrossedBounds", "lower bound exceeds upper bound at index " + std::to_string(i));
        if (lower[i] <= obs[i] && obs[i] <= upper[i]) ++inside;
    }
    return static_cast<double>(inside) / static_cast<double>(obs.size());
}

VariableScore score(std::span<const double> obs, std::span<const double> sim) {
    VariableScore s;
    s.nse = nse(obs, sim);
    s.pbias = pbias(obs, sim);
    s.rmse = rmse(obs, sim);
    s.moriasi = moriasi_class(s.nse);
    s.n = obs.size();
    return s;
}

std::string EvalReport::to_json() const {
    nlohmann::ordered_json j;
    j["format_version"] = kFormatVersion;
    j["variables"] = nlohmann::ordered_json::object();
    for (const auto& [name, s] : variables) {
        nlohmann::ordered_json v;
        v["nse"] = s.nse;
        v["pbias"] = s.pbias;
        v["rmse"] = s.rmse;
        v["moriasi_class"] = std::string(to_string(s.moriasi));
        v["n"] = s.n;
        if (s.coverage) v["coverage_90"] = *s.coverage;
        j["variables"][name] = v;
    }
    return j.dump(2) + "\n";
}

std::string EvalReport::to_table() const {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof line, "%-8s %10s %10s %10s %-15s %6s %10s\n", "variable", "NSE", "PBIAS(%)", "RMSE",
                  "class", "n", "cov90");
    out += line;
    for (const auto& [name, s] : variables) {
        std::string cov = s.coverage ? std::to_string(*s.coverage).substr(0, 5) : "-";
        std::snprintf(line, sizeof line, "%-8s %10.3f %10.3f %10.3f %-15s %6zu %10s\n", name.c_str(), s.nse, s.pbias,
                      s.rmse, std::string(to_string(s.moriasi)).c_str(), s.n, cov.c_str());
        out += line;
    }
    return out;
}

}  // namespace hydroflux
