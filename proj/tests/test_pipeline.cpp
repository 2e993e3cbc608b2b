#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "warpcert/pipeline.hpp"

using namespace warpcert;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("warpcert_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

// the default verify run is shared; it takes a couple of seconds
const Assembly& default_run() {
    static const Assembly a = run_pipeline(Config{});
    return a;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + WARPCERT_CLI + "\" " + args + " > /dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

} // namespace

TEST(Config, DefaultsValidate) {
    const Config c;
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.i_max, 3);
    EXPECT_DOUBLE_EQ(c.eps0, 1e-4);
}

TEST(Config, FullFileRoundTrips) {
    const Config c = parse_config_text(R"({
        "gamma": 0.3, "c1": 0.95, "c2": 0.8, "n": 3, "i_max": 2, "eps0": 1e-5,
        "grid": {"u": 128, "x": 5000, "neck_t": 256, "neck_x": 129},
        "tolerances": {"jet_fd": 1e-5, "c1_continuity": 1e-9, "margin_min": 0.0},
        "output": {"dir": "somewhere"}})");
    EXPECT_DOUBLE_EQ(c.gamma, 0.3);
    EXPECT_EQ(c.n, 3);
    EXPECT_EQ(c.grid.neck_x, 129);
    EXPECT_DOUBLE_EQ(c.tolerances.c1_continuity, 1e-9);
    EXPECT_EQ(c.out_dir, "somewhere");
    EXPECT_EQ(parse_config(c.to_json()).to_json(), c.to_json());
}

TEST(Config, UnknownKeysRejected) {
    EXPECT_THROW(parse_config_text(R"({"gama": 0.25})"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"grid": {"y": 3}})"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"tolerances": {"jet": 1}})"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"output": {"path": "x"}})"), ConfigError);
}

TEST(Config, BadValuesRejected) {
    EXPECT_THROW(parse_config_text(R"({"c1": 0.8, "c2": 0.85})"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"c1": 0.85, "c2": 0.85})"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"gamma": 0.5})"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"n": 1})"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"i_max": 0})"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"eps0": 0})"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"gamma": "0.25"})"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"n": 2.5})"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"grid": 5})"), ConfigError);
    EXPECT_THROW(parse_config_text("[1, 2]"), ConfigError);
    EXPECT_THROW(parse_config_text("{not json"), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/warpcert.json"), ConfigError);
}

TEST(Format, SeventeenDigitsRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 1e308}) {
        const std::string s = fmt17(v);
        EXPECT_EQ(std::stod(s), v) << s;
    }
    EXPECT_EQ(fmt17(0.1), "0.10000000000000001");
}

TEST(Format, LogDomainValues) {
    EXPECT_EQ(fmt17(LogScalar(0.0)), "0");
    EXPECT_EQ(fmt17(LogScalar(0.25)), fmt17(0.25));
    // 10^1000 up to the precision a 2303-sized logarithm carries
    const std::string big = fmt17(LogScalar::from_log(1000 * std::log(10.0)));
    const auto epos = big.find('e');
    ASSERT_NE(epos, std::string::npos) << big;
    const double mant = std::stod(big.substr(0, epos));
    const double expo = std::stod(big.substr(epos + 1));
    EXPECT_GE(mant, 1.0);
    EXPECT_LT(mant, 10.0);
    EXPECT_NEAR(std::log10(mant) + expo, 1000.0, 1e-12) << big;
    EXPECT_TRUE(fmt17(LogScalar::from_log(800 * std::log(10.0))).ends_with("e+800"));
    EXPECT_EQ(fmt17(LogScalar::from_log(-1e20)), "exp(-1e+20)");
    EXPECT_EQ(fmt17(-LogScalar::from_log(2e16)), "-exp(20000000000000000)");
}

TEST(Report, CsvHeaderAndRows) {
    CsvTable t;
    t.header = {"a", "b"};
    t.add(1, 0.5);
    EXPECT_EQ(t.text(), "a,b\n1,0.5\n");
}

TEST(Report, ExitCodes) {
    Assembly a;
    a.checks.push_back({"x", "anchor", 1.0, 1, CheckStatus::Pass, {}});
    EXPECT_EQ(a.exit_code(false), 0);
    a.open_flags.push_back("flag");
    EXPECT_EQ(a.exit_code(false), 0);
    EXPECT_EQ(a.exit_code(true), 1);
    a.checks.push_back({"y", "anchor", -1.0, 1, CheckStatus::Fail, {}});
    EXPECT_EQ(a.exit_code(false), 1);
    a.failed_stage = "radial";
    EXPECT_EQ(a.exit_code(false), 3);
}

TEST(Pipeline, ReportSchema) {
    const auto j = report_json(default_run());
    for (const char* k : {"config_echo", "periods", "checks", "growth", "assumptions", "open_flags"})
        EXPECT_TRUE(j.contains(k)) << k;
    EXPECT_EQ(j["periods"].size(), 3u);
    for (const auto& c : j["checks"]) {
        for (const char* k : {"name", "paper_anchor", "margin", "grid_size", "status"}) EXPECT_TRUE(c.contains(k)) << k;
        EXPECT_TRUE(c["margin"].is_number());
        EXPECT_GT(c["grid_size"].get<long>(), 0) << c["name"];
    }
    for (const char* k : {"vol_slope", "diam_slope", "targets"}) EXPECT_TRUE(j["growth"].contains(k)) << k;
    EXPECT_FALSE(j["assumptions"].empty());
}

TEST(Pipeline, DefaultRunPassesExceptTheLiteralValueBound) {
    const Assembly& a = default_run();
    EXPECT_TRUE(a.failed_stage.empty()) << a.failure_message;
    EXPECT_EQ(a.first_failure(), nullptr) << a.first_failure()->name;
    const Check* u = a.find("u_value_upper");
    ASSERT_NE(u, nullptr);
    EXPECT_EQ(u->status, CheckStatus::Open);
    EXPECT_LT(u->margin, 0);
    EXPECT_EQ(a.find("u_value_upper_integrated")->status, CheckStatus::Pass);
    EXPECT_EQ(a.exit_code(false), 0);
    EXPECT_EQ(a.exit_code(true), 1);
}

TEST(Pipeline, AngularCsvHeader) {
    for (int i = 1; i <= 3; ++i) {
        const Check* c = default_run().find("angular_curvature_p" + std::to_string(i));
        ASSERT_NE(c, nullptr);
        EXPECT_EQ(c->csv.text().substr(0, 27), "x,f,fx,fxx,margin1,margin2\n");
        EXPECT_GE(c->csv.rows.size(), 10000u);
    }
}

TEST(Pipeline, GrowthSlopesNearTargets) {
    const auto& g = default_run().growth;
    EXPECT_NEAR(g["vol_slope"].get<double>(), 2.25, 1e-3);
    EXPECT_NEAR(g["diam_slope"].get<double>(), 0.625, 1e-3);
}

TEST(Pipeline, EmittedFilesAreDeterministic) {
    const fs::path d = scratch("determinism");
    emit_report(default_run(), d / "a");
    emit_report(run_pipeline(Config{}), d / "b");
    EXPECT_EQ(slurp(d / "a" / "report.json"), slurp(d / "b" / "report.json"));
    for (const auto& e : fs::directory_iterator(d / "a" / "csv"))
        EXPECT_EQ(slurp(e.path()), slurp(d / "b" / "csv" / e.path().filename())) << e.path();
}

TEST(Pipeline, ConstructModeFillsPeriodsOnly) {
    Config c;
    c.i_max = 2;
    const Assembly a = run_pipeline(c, RunMode::Construct);
    EXPECT_EQ(a.periods.size(), 2u);
    EXPECT_TRUE(a.checks.empty() || a.find("angular_curvature_p1") == nullptr);
}

TEST(SeedProfile, ProlateAndSeriesAgree) {
    const NeckInput p = parse_seed_profile(nlohmann::json{{"prolate_rho", 0.0125}});
    const NeckInput s = parse_seed_profile(nlohmann::json{
        {"r", p.r}, {"R", p.R}, {"rho", p.rho}, {"a_inf", p.a_inf}, {"eta_cosine_series", {0.5, 0.5}}});
    for (double x : {-1.2, -0.3, 0.0, 0.7, 1.5}) {
        EXPECT_NEAR(s.eta(x).value, p.eta(x).value, 1e-15);
        EXPECT_NEAR(s.eta(x).d1, p.eta(x).d1, 1e-14);
        EXPECT_NEAR(s.eta(x).d2, p.eta(x).d2, 1e-14);
    }
}

TEST(SeedProfile, InvalidProfilesRejected) {
    EXPECT_THROW(parse_seed_profile(nlohmann::json{{"prolate_rho", 0.5}}), ConfigError);
    EXPECT_THROW(parse_seed_profile(nlohmann::json{{"prolate_rho", 0.0125}, {"x", 1}}), ConfigError);
    const NeckInput p = prolate_model_input(0.0125);
    // eta = 1 does not vanish at the poles
    EXPECT_THROW(parse_seed_profile(nlohmann::json{
                     {"r", p.r}, {"R", p.R}, {"rho", p.rho}, {"a_inf", p.a_inf}, {"eta_cosine_series", {1.0}}}),
                 ConfigError);
    EXPECT_THROW(parse_seed_profile(nlohmann::json{{"r", p.r}, {"R", p.R}, {"rho", p.rho}}), ConfigError);
    EXPECT_THROW(load_seed_profile("/nonexistent/seed.json"), ConfigError);
}

TEST(Neck, SeedRunPasses) {
    Config c;
    c.grid.neck_t = 128;
    c.grid.neck_x = 65;
    const Assembly a = run_neck(c, prolate_model_input(0.0125));
    EXPECT_TRUE(a.failed_stage.empty()) << a.failure_message;
    EXPECT_EQ(a.first_failure(), nullptr);
    EXPECT_NE(a.find("neck_ricci_TX"), nullptr);
}

TEST(Cli, ExitCodes) {
    const fs::path d = scratch("cli");
    std::ofstream(d / "bad.json") << R"({"gamma": 0.25, "bogus": 1})";
    std::ofstream(d / "order.json") << R"({"c1": 0.8, "c2": 0.85})";
    std::ofstream(d / "seed.json") << R"({"prolate_rho": 0.0125})";
    const std::string out = " --out \"" + (d / "run").string() + "\"";
    EXPECT_EQ(run_cli("verify --config \"" + (d / "bad.json").string() + "\""), 2);
    EXPECT_EQ(run_cli("verify --config \"" + (d / "order.json").string() + "\""), 2);
    EXPECT_EQ(run_cli("verify --periods 0"), 2);
    EXPECT_EQ(run_cli("--no-such-flag verify"), 2);
    EXPECT_EQ(run_cli("growth" + out), 2); // no cache yet
    EXPECT_EQ(run_cli("report" + out), 2);
    EXPECT_EQ(run_cli("neck" + out), 2); // no seed profile
    EXPECT_EQ(run_cli("verify" + out), 0);
    EXPECT_TRUE(fs::exists(d / "run" / "csv" / "angular_curvature_p1.csv"));
    EXPECT_EQ(run_cli("verify --strict" + out), 1);
    EXPECT_EQ(run_cli("report" + out), 0);
    EXPECT_EQ(run_cli("report --strict" + out), 1);
    EXPECT_EQ(run_cli("growth" + out), 0);
    EXPECT_TRUE(fs::exists(d / "run" / "growth.json"));
    EXPECT_EQ(run_cli("growth --periods 2" + out), 2); // config differs from the cached run
    EXPECT_EQ(run_cli("construct --periods 2" + out), 0);
    EXPECT_EQ(run_cli("neck --seed-profile \"" + (d / "seed.json").string() + "\"" + out), 0);
}
