#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "warpcert/pipeline.hpp"

namespace fs = std::filesystem;
using namespace warpcert;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInternal = 3;

struct Flags {
    std::string config_path;
    std::string out_dir;
    std::optional<int> periods;
    std::string seed_profile;
    bool strict = false;
};

Config resolve_config(const Flags& f) {
    Config c = f.config_path.empty() ? Config{} : load_config(f.config_path);
    if (!f.out_dir.empty()) c.out_dir = f.out_dir;
    if (f.periods) c.i_max = *f.periods;
    c.validate();
    return c;
}

void print_summary(const Assembly& a, std::ostream& os) {
    int pass = 0, fail = 0, open = 0;
    for (const auto& c : a.checks) {
        if (c.status == CheckStatus::Pass) ++pass;
        else if (c.status == CheckStatus::Fail) ++fail;
        else ++open;
    }
    for (const auto& c : a.checks)
        if (c.status != CheckStatus::Pass)
            os << status_name(c.status) << ": " << c.name << " margin " << fmt17(c.margin) << " (" << c.anchor << ")\n";
    if (!a.failed_stage.empty()) os << "stage " << a.failed_stage << " failed: " << a.failure_message << "\n";
    os << a.checks.size() << " checks: " << pass << " pass, " << fail << " fail, " << open << " open\n";
}

int finish(const Assembly& a, const fs::path& dir, bool strict) {
    emit_report(a, dir);
    print_summary(a, std::cout);
    std::cout << "report: " << (dir / "report.json").string() << "\n";
    return a.exit_code(strict);
}

int cmd_construct(const Flags& f) {
    const Config cfg = resolve_config(f);
    const Assembly a = run_pipeline(cfg, RunMode::Construct);
    const fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create " + dir.string() + ": " + ec.message());
    nlohmann::ordered_json j;
    j["config_echo"] = a.config_echo;
    j["periods"] = a.periods;
    write_text(dir / "construct.json", dump_json(j));
    if (!a.failed_stage.empty()) {
        std::cerr << "stage " << a.failed_stage << " failed: " << a.failure_message << "\n";
        return kExitInternal;
    }
    std::cout << a.periods.size() << " periods written to " << (dir / "construct.json").string() << "\n";
    return 0;
}

int cmd_verify(const Flags& f) {
    const Config cfg = resolve_config(f);
    return finish(run_pipeline(cfg, RunMode::Verify), cfg.out_dir, f.strict);
}

int cmd_neck(const Flags& f) {
    if (f.seed_profile.empty()) throw ConfigError("neck needs --seed-profile PATH");
    const Config cfg = resolve_config(f);
    const Assembly a = run_neck(cfg, load_seed_profile(f.seed_profile));
    const fs::path dir = fs::path(cfg.out_dir) / "neck";
    return finish(a, dir, f.strict);
}

// refits growth against the verified tables in the cache; the config must match the cached one
int cmd_growth(const Flags& f) {
    const Config cfg = resolve_config(f);
    const fs::path dir(cfg.out_dir);
    nlohmann::ordered_json cache = load_cache(dir);
    if (cache["report"]["config_echo"] != cfg.to_json())
        throw ConfigError("verify cache in " + dir.string() + " was produced with a different config");
    const Assembly a = run_pipeline(cfg, RunMode::Growth);
    nlohmann::ordered_json j;
    j["config_echo"] = a.config_echo;
    j["growth"] = a.growth;
    nlohmann::ordered_json checks = nlohmann::ordered_json::array();
    for (const auto& c : report_json(a)["checks"]) checks.push_back(c);
    j["checks"] = checks;
    write_text(dir / "growth.json", dump_json(j));
    print_summary(a, std::cout);
    if (a.growth.contains("vol_slope"))
        std::cout << "vol slope " << fmt17(a.growth["vol_slope"].get<double>()) << " (target "
                  << fmt17(a.growth["targets"]["vol"].get<double>()) << "), diam slope "
                  << fmt17(a.growth["diam_slope"].get<double>()) << " (target "
                  << fmt17(a.growth["targets"]["diam"].get<double>()) << ")\n";
    return a.exit_code(false);
}

// rewrites report.json from the cache and returns the exit code the cached run had
int cmd_report(const Flags& f) {
    const Config cfg = resolve_config(f);
    const fs::path dir(cfg.out_dir);
    const nlohmann::ordered_json cache = load_cache(dir);
    const auto& rep = cache.at("report");
    write_text(dir / "report.json", dump_json(rep));
    if (!cache.value("failed_stage", std::string()).empty()) return kExitInternal;
    bool fail = false, open = false;
    for (const auto& c : rep.at("checks")) {
        fail = fail || c.at("status") == "fail";
        open = open || c.at("status") == "open";
    }
    std::cout << "report: " << (dir / "report.json").string() << "\n";
    if (fail) return 1;
    if (f.strict && (open || !rep.at("open_flags").empty())) return 1;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical certificates for a warped-product construction of positive Ricci curvature"};
    app.require_subcommand(1);
    app.fallthrough();
    Flags f;
    int periods = 0;
    app.add_option("--config", f.config_path, "JSON config file");
    app.add_option("--out", f.out_dir, "output directory (overrides output.dir)");
    auto* per = app.add_option("--periods", periods, "number of verified periods (overrides i_max)");
    app.add_option("--seed-profile", f.seed_profile, "input profile for the neck subcommand");
    app.add_flag("--strict", f.strict, "treat open flags as failures");

    auto* construct = app.add_subcommand("construct", "build the period table and eps schedule");
    auto* verify = app.add_subcommand("verify", "run every check and write the report");
    auto* neck = app.add_subcommand("neck", "neck claims on a supplied profile");
    auto* growth = app.add_subcommand("growth", "growth fits; needs a verify cache in the output directory");
    auto* report = app.add_subcommand("report", "re-emit report.json from the verify cache");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }
    if (*per) f.periods = periods;

    try {
        if (*construct) return cmd_construct(f);
        if (*verify) return cmd_verify(f);
        if (*neck) return cmd_neck(f);
        if (*growth) return cmd_growth(f);
        if (*report) return cmd_report(f);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitInternal;
}
