#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"

#include "errors.hpp"

namespace warpcert {

struct GridConfig {
    int u = 256;
    int x = 10000;
    int neck_t = 512;
    int neck_x = 257;
};

struct ToleranceConfig {
    double jet_fd = 1e-6;
    double c1_continuity = 1e-10;
    double margin_min = 0.0; // a check passes when margin > margin_min
};

struct Config {
    double gamma = 0.25;
    double c1 = 0.9;
    double c2 = 0.85;
    int n = 2;
    int i_max = 3;
    double eps0 = 1e-4;
    GridConfig grid;
    ToleranceConfig tolerances;
    std::string out_dir = "warpcert_out";

    void validate() const {
        auto bad = [](const std::string& m) { throw ConfigError(m); };
        if (!(c2 < c1)) bad("c2 must be smaller than c1");
        if (!(c2 > 0 && c1 < 1)) bad("need 0 < c2 < c1 < 1");
        if (!(gamma > 0 && gamma < 0.5)) bad("gamma must lie in (0, 1/2)");
        if (n < 2) bad("n must be at least 2");
        if (i_max < 1 || i_max > 40) bad("i_max must lie in [1, 40]");
        if (!(eps0 > 0 && eps0 < 0.1)) bad("eps0 must lie in (0, 0.1)");
        if (grid.u < 2) bad("grid.u must be at least 2");
        if (grid.x < 16) bad("grid.x must be at least 16");
        if (grid.neck_t < 2) bad("grid.neck_t must be at least 2");
        if (grid.neck_x < 3) bad("grid.neck_x must be at least 3");
        if (!(tolerances.jet_fd > 0)) bad("tolerances.jet_fd must be positive");
        if (!(tolerances.c1_continuity > 0)) bad("tolerances.c1_continuity must be positive");
        if (!(tolerances.margin_min >= 0)) bad("tolerances.margin_min must be non-negative");
        if (out_dir.empty()) bad("output.dir must not be empty");
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["gamma"] = gamma;
        j["c1"] = c1;
        j["c2"] = c2;
        j["n"] = n;
        j["i_max"] = i_max;
        j["eps0"] = eps0;
        j["grid"] = {{"u", grid.u}, {"x", grid.x}, {"neck_t", grid.neck_t}, {"neck_x", grid.neck_x}};
        j["tolerances"] = {{"jet_fd", tolerances.jet_fd},
                           {"c1_continuity", tolerances.c1_continuity},
                           {"margin_min", tolerances.margin_min}};
        j["output"] = {{"dir", out_dir}};
        return j;
    }
};

namespace detail {

inline void check_keys(const nlohmann::json& obj, const std::string& where, const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError(where.empty() ? "config must be an object" : where + " must be an object");
    for (const auto& [k, v] : obj.items()) {
        (void)v;
        if (!allowed.count(k)) throw ConfigError("unknown config key: " + (where.empty() ? k : where + "." + k));
    }
}

template <class T>
void read_key(const nlohmann::json& obj, const std::string& key, const std::string& path, T& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if constexpr (std::is_same_v<T, int>) {
        if (!v.is_number_integer()) throw ConfigError(path + " must be an integer");
        out = v.get<int>();
    } else if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError(path + " must be a number");
        out = v.get<double>();
    } else {
        if (!v.is_string()) throw ConfigError(path + " must be a string");
        out = v.get<std::string>();
    }
}

} // namespace detail

inline Config parse_config(const nlohmann::json& j) {
    using detail::read_key;
    detail::check_keys(j, "", {"gamma", "c1", "c2", "n", "i_max", "eps0", "grid", "tolerances", "output"});
    Config c;
    read_key(j, "gamma", "gamma", c.gamma);
    read_key(j, "c1", "c1", c.c1);
    read_key(j, "c2", "c2", c.c2);
    read_key(j, "n", "n", c.n);
    read_key(j, "i_max", "i_max", c.i_max);
    read_key(j, "eps0", "eps0", c.eps0);
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        detail::check_keys(g, "grid", {"u", "x", "neck_t", "neck_x"});
        read_key(g, "u", "grid.u", c.grid.u);
        read_key(g, "x", "grid.x", c.grid.x);
        read_key(g, "neck_t", "grid.neck_t", c.grid.neck_t);
        read_key(g, "neck_x", "grid.neck_x", c.grid.neck_x);
    }
    if (j.contains("tolerances")) {
        const auto& t = j.at("tolerances");
        detail::check_keys(t, "tolerances", {"jet_fd", "c1_continuity", "margin_min"});
        read_key(t, "jet_fd", "tolerances.jet_fd", c.tolerances.jet_fd);
        read_key(t, "c1_continuity", "tolerances.c1_continuity", c.tolerances.c1_continuity);
        read_key(t, "margin_min", "tolerances.margin_min", c.tolerances.margin_min);
    }
    if (j.contains("output")) {
        const auto& o = j.at("output");
        detail::check_keys(o, "output", {"dir"});
        read_key(o, "dir", "output.dir", c.out_dir);
    }
    c.validate();
    return c;
}

inline Config parse_config_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

} // namespace warpcert
