#include "hydroflux/outputs.hpp"

#include <fstream>
#include <sstream>

#include "hydroflux/error.hpp"
#include "hydroflux/version.hpp"

namespace hydroflux {

void PredictionTable::validate() const {
    const std::size_t n = predicted.size();
    if (observed.size() != n || (lower && lower->size() != n) || (upper && upper->size() != n) ||
        lower.has_value() != upper.has_value()) {
        fail("LengthMismatch", "prediction table columns are not aligned");
    }
}

std::string emit_prediction_csv(const PredictionTable& t) {
    t.validate();
    std::string out = t.lower ? "date,observed,predicted,lower,upper\n" : "date,observed,predicted\n";
    for (std::size_t i = 0; i < t.size(); ++i) {
        out += t.start.plus(static_cast<long>(i)).to_string();
        out += ',' + format_number(t.observed[i]) + ',' + format_number(t.predicted[i]);
        if (t.lower) out += ',' + format_number((*t.lower)[i]) + ',' + format_number((*t.upper)[i]);
        out += '\n';
    }
    return out;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        auto comma = line.find(',', pos);
        out.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

}  // namespace

PredictionTable parse_prediction_csv(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) lines.push_back(line);
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    if (lines.empty()) fail("MissingColumn", "prediction CSV is empty");
    const auto header = split_fields(lines[0]);
    const bool with_interval = header.size() == 5;
    if (header.size() < 3 || header[0] != "date" || header[1] != "observed" || header[2] != "predicted" ||
        (with_interval && (header[3] != "lower" || header[4] != "upper")) || (header.size() != 3 && !with_interval)) {
        fail("MissingColumn", "prediction CSV header must be date,observed,predicted[,lower,upper]");
    }
    PredictionTable t;
    if (with_interval) {
        t.lower.emplace();
        t.upper.emplace();
    }
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto f = split_fields(lines[r]);
        if (f.size() != header.size()) fail("MalformedRow", "row " + std::to_string(r + 1) + " has wrong field count");
        const auto stamp = MonthStamp::parse(f[0]);
        if (r == 1) {
            t.start = stamp;
        } else if (stamp != t.start.plus(static_cast<long>(r - 1))) {
            fail("GapInCalendar", "prediction CSV months are not consecutive at row " + std::to_string(r + 1));
        }
        std::vector<double> v;
        for (std::size_t k = 1; k < f.size(); ++k) {
            auto x = parse_number(f[k]);
            if (!x) fail("NonFiniteValue", "row " + std::to_string(r + 1) + ": '" + std::string(f[k]) + "'");
            v.push_back(*x);
        }
        t.observed.push_back(v[0]);
        t.predicted.push_back(v[1]);
        if (with_interval) {
            t.lower->push_back(v[2]);
            t.upper->push_back(v[3]);
        }
    }
    return t;
}

PredictionTable read_prediction_csv(const std::filesystem::path& path) { return parse_prediction_csv(read_text(path)); }

std::string emit_plot_csv(std::span<const PlotSeries> series) {
    std::string out = "date,variable,series,value\n";
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            out += s.start.plus(static_cast<long>(i)).to_string() + ',' + s.variable + ',' + s.series + ',' +
                   format_number(s.values[i]) + '\n';
        }
    }
    return out;
}

nlohmann::ordered_json water_balance_json(const WaterBalanceReport& r) {
    nlohmann::ordered_json j;
    j["format_version"] = kFormatVersion;
    j["p_mm_per_year"] = r.p;
    j["et_mm_per_year"] = r.et;
    j["q_mm_per_year"] = r.q;
    j["dsm_mm_per_year"] = r.dsm;
    j["dgw_mm_per_year"] = r.dgw;
    j["et_plus_q"] = r.et_plus_q;
    j["observed_et_plus_q"] = r.obs_et_plus_q;
    j["storage_included"] = r.storage_included;
    j["pct_deviation"] = r.pct_deviation;
    j["closure_pct"] = r.closure_pct;
    return j;
}

std::string emit_water_balance_csv(const WaterBalanceReport& r) {
    std::string out = "quantity,value\n";
    auto row = [&](const char* k, double v) { out += std::string(k) + ',' + format_number(v) + '\n'; };
    row("p", r.p);
    row("et", r.et);
    row("q", r.q);
    row("dsm", r.dsm);
    row("dgw", r.dgw);
    row("et_plus_q", r.et_plus_q);
    row("observed_et_plus_q", r.obs_et_plus_q);
    row("storage_included", r.storage_included ? 1.0 : 0.0);
    row("pct_deviation", r.pct_deviation);
    row("closure_pct", r.closure_pct);
    return out;
}

nlohmann::ordered_json run_metadata(const std::string& command, std::uint64_t seed) {
    nlohmann::ordered_json j;
    j["format_version"] = kFormatVersion;
    j["command"] = command;
    j["seed"] = seed;
    j["build"] = kBuildId;
    return j;
}

void write_text(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("IoError", "cannot write " + path.string());
    out << text;
    if (!out) fail("IoError", "write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
    write_text(path, j.dump(2) + "\n");
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("FileNotFound", "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace hydroflux
