#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "errors.hpp"
#include "log_scalar.hpp"

namespace warpcert {

// 17 significant digits; log-domain values outside double range keep a decimal exponent
inline std::string fmt17(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt17(const LogScalar& v) {
    if (v.sign == 0) return "0";
    if (std::isnan(v.logmag)) return "nan";
    if (std::isinf(v.logmag)) return v.logmag < 0 ? "0" : (v.sign < 0 ? "-inf" : "inf");
    if (std::fabs(v.logmag) < 700) return fmt17(v.value());
    // past ~1e15 the decimal mantissa carries no digits; keep the logarithm instead
    if (std::fabs(v.logmag) > 1e15) return std::string(v.sign < 0 ? "-" : "") + "exp(" + fmt17(v.logmag) + ")";
    const double l10 = v.logmag / std::log(10.0);
    double e = std::floor(l10);
    double m = std::pow(10.0, l10 - e);
    if (m >= 10) {
        m /= 10;
        e += 1;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.16f", m);
    if (buf[0] == '1' && buf[1] == '0') { // rounding carried into a second digit
        m /= 10;
        e += 1;
    }
    std::snprintf(buf, sizeof buf, "%s%.16fe%+.0f", v.sign < 0 ? "-" : "", m, e);
    return buf;
}

// sign * exp(L) for a magnitude whose logarithm L is itself outside double range
inline std::string fmt17_exp(const LogScalar& L, int sign = 1) {
    return std::string(sign < 0 ? "-" : "") + "exp(" + fmt17(L) + ")";
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    template <class... Cells>
    void add(const Cells&... cells) {
        rows.push_back({cell(cells)...});
    }
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(double v) { return fmt17(v); }
    static std::string cell(const LogScalar& v) { return fmt17(v); }
    bool empty() const { return header.empty(); }

    std::string text() const {
        std::string out;
        auto line = [&out](const std::vector<std::string>& cells) {
            for (std::size_t k = 0; k < cells.size(); ++k) {
                if (k) out += ',';
                out += cells[k];
            }
            out += '\n';
        };
        line(header);
        for (const auto& r : rows) line(r);
        return out;
    }
};

enum class CheckStatus { Pass, Fail, Open };

inline const char* status_name(CheckStatus s) {
    switch (s) {
        case CheckStatus::Pass: return "pass";
        case CheckStatus::Fail: return "fail";
        default: return "open";
    }
}

struct Check {
    std::string name;
    std::string anchor; // which statement of the construction the margin certifies
    double margin = 0.0;
    long grid_size = 0;
    CheckStatus status = CheckStatus::Fail;
    CsvTable csv;
};

struct Assembly {
    nlohmann::ordered_json config_echo;
    nlohmann::ordered_json periods = nlohmann::ordered_json::array();
    std::vector<Check> checks;
    nlohmann::ordered_json growth = nlohmann::ordered_json::object();
    std::vector<std::string> assumptions;
    std::vector<std::string> open_flags;
    std::string failed_stage; // set when a stage threw; later stages did not run
    std::string failure_message;

    const Check* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
    const Check* first_failure() const {
        for (const auto& c : checks)
            if (c.status == CheckStatus::Fail) return &c;
        return nullptr;
    }
    bool has_open() const {
        return std::any_of(checks.begin(), checks.end(), [](const Check& c) { return c.status == CheckStatus::Open; });
    }
    // 0 pass, 1 some margin <= 0 (or an open flag under --strict), 3 a stage threw
    int exit_code(bool strict) const {
        if (!failed_stage.empty()) return 3;
        if (first_failure()) return 1;
        if (strict && (has_open() || !open_flags.empty())) return 1;
        return 0;
    }
};

// margins are saturated so the report never carries a non-finite number
inline double finite_margin(double m) {
    if (std::isnan(m)) return -1e300;
    return std::clamp(m, -1e300, 1e300);
}

inline nlohmann::ordered_json report_json(const Assembly& a) {
    nlohmann::ordered_json j;
    j["config_echo"] = a.config_echo;
    j["periods"] = a.periods;
    auto& checks = j["checks"] = nlohmann::ordered_json::array();
    for (const auto& c : a.checks) {
        nlohmann::ordered_json e;
        e["name"] = c.name;
        e["paper_anchor"] = c.anchor;
        e["margin"] = finite_margin(c.margin);
        e["grid_size"] = c.grid_size;
        e["status"] = status_name(c.status);
        checks.push_back(e);
    }
    j["growth"] = a.growth;
    j["assumptions"] = a.assumptions;
    j["open_flags"] = a.open_flags;
    return j;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + p.string());
    out << text;
    if (!out) throw Error("write failed for " + p.string());
}

inline std::string dump_json(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

// report.json, csv/<check>.csv and cache.json under dir
inline void emit_report(const Assembly& a, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir / "csv", ec);
    if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
    const auto rep = report_json(a);
    write_text(dir / "report.json", dump_json(rep));
    nlohmann::ordered_json files = nlohmann::ordered_json::array();
    for (const auto& c : a.checks) {
        if (c.csv.empty()) continue;
        write_text(dir / "csv" / (c.name + ".csv"), c.csv.text());
        files.push_back("csv/" + c.name + ".csv");
    }
    nlohmann::ordered_json cache;
    cache["report"] = rep;
    cache["csv_files"] = files;
    cache["failed_stage"] = a.failed_stage;
    write_text(dir / "cache.json", dump_json(cache));
}

inline nlohmann::ordered_json load_cache(const std::filesystem::path& dir) {
    std::ifstream in(dir / "cache.json", std::ios::binary);
    if (!in) throw ConfigError("no verify cache in " + dir.string() + "; run verify first");
    try {
        return nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("corrupt verify cache: " + std::string(e.what()));
    }
}

} // namespace warpcert
