// One PASS/FAIL line per acceptance criterion. `acceptance N` runs only criterion N.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "warpcert/pipeline.hpp"

namespace fs = std::filesystem;
using namespace warpcert;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.3g", v);
    return b;
}

// shared default-config artifacts, built on first use
struct Shared {
    Config cfg;
    PeriodTable table;
    EpsSchedule sch;
    double R0 = 0;
    std::optional<CapBuild> cap;

    Shared() {
        const auto s1 = select_t1(cfg.gamma, cfg.c1, cfg.c2, cfg.i_max);
        const PeriodTable t0 = build_periods({cfg.gamma, cfg.c1, cfg.c2, s1.t1, cfg.i_max});
        sch = build_eps_schedule(t0, cfg.eps0);
        table = with_schedule(t0, sch);
        R0 = std::pow(choose_cap_rho(cfg.n), 4);
    }
    const CapBuild& cap2() {
        if (!cap) cap = choose_cap_constants(2, cfg.grid.neck_t, cfg.grid.neck_x);
        return *cap;
    }
};

Shared& shared() {
    static Shared s;
    return s;
}

Outcome c1_curvature_oracle() {
    const auto t0 = Clock::now();
    double round_err = 0, hyp_err = 0;
    for (int a = 1; a < 64; ++a)
        for (int b = 1; b < 64; ++b) {
            const double t = 3.0 * a / 64, x = std::numbers::pi * b / 64;
            const Jet f{std::sin(x), std::cos(x), -std::sin(x)};
            const auto q = q_curvature(Jet{std::sin(t), std::cos(t), -std::sin(t)}, f);
            const auto h = q_curvature(Jet{std::sinh(t), std::cosh(t), std::sinh(t)}, f);
            for (double k : {q.K_TX, q.K_TSigma, q.K_XSigma}) round_err = std::max(round_err, std::fabs(k - 1));
            for (double k : {h.K_TX, h.K_TSigma, h.K_XSigma}) hyp_err = std::max(hyp_err, std::fabs(k + 1));
            // log-domain path on the same inputs
            const LogJet lu{LogScalar(std::sin(t)), LogScalar(std::cos(t)), LogScalar(-std::sin(t))};
            const auto lq = q_curvature_ratio(lu, LogScalar(1.0));
            for (const LogScalar& k : {lq.K_TX, lq.K_XSigma}) round_err = std::max(round_err, std::fabs(k.value() - 1));
        }
    const double dt = seconds_since(t0);
    return {round_err < 1e-12 && hyp_err < 1e-12 && dt < 1.0,
            "round err " + num(round_err) + ", hyperbolic err " + num(hyp_err) + ", " + num(dt) + " s"};
}

Outcome c2_jets() {
    Shared& S = shared();
    const double tol = S.cfg.tolerances.jet_fd;
    const CapBuild& C = S.cap2();
    std::vector<JetFdFamily> fams;
    fams.push_back(jet_fd_u(S.table.params, 1000, tol));
    fams.push_back(jet_fd_f(S.R0, 1000, tol));
    auto [a, b] = jet_fd_ab(C.neck.sol, 1000, tol);
    fams.push_back(a);
    fams.push_back(b);
    auto [cu, cv] = jet_fd_cap(C.cap, S.table.at(1).h, 1000, tol);
    fams.push_back(cu);
    fams.push_back(cv);
    bool ok = true;
    std::string d;
    for (const auto& f : fams) {
        ok = ok && f.pass() && f.points >= 1000;
        d += f.name + " " + num(f.max_rel_err) + " (" + std::to_string(f.points) + ") ";
    }
    return {ok, d};
}

Outcome c3_radial() {
    const auto t0 = Clock::now();
    Shared& S = shared();
    const UBoundsReport r = verify_u_bounds(S.table, 256, S.cfg.tolerances.c1_continuity);
    const double dt = seconds_since(t0);
    std::string d;
    for (const MarginEntry* m : r.all())
        if (!m->pass()) d += "violated: " + m->name + " margin " + num(m->margin) + " (period " + std::to_string(m->period) + "); ";
    d += "certified without the stated value bound: " + std::string(r.certified() ? "yes" : "no") + ", " + num(dt) + " s";
    return {r.literal() && dt < 10.0, d};
}

Outcome c4_propositions() {
    Shared& S = shared();
    bool ok = true;
    std::string d;
    for (int i = 1; i <= S.table.i_max(); ++i) {
        const auto s = solve_angular_params(S.sch.at(i), S.R0);
        const auto p1 = verify_curvature_bounds(s, 0.1, 10000);
        const auto p2 = verify_deviation(s, 10000);
        ok = ok && p1.pass() && p2.pass() && p1.curvature.samples >= 10000;
        d += "p" + std::to_string(i) + ": " + num(p1.curvature.min_value) + "/" + num(p1.gauss.min_value) + "/" +
             num(p2.margin.min_value) + " ";
    }
    return {ok, d};
}

Outcome c5_perelman() {
    Shared& S = shared();
    bool ok = true;
    std::string d;
    for (int i = 1; i <= S.table.i_max(); ++i) {
        const auto r = ball_boundary_forms(S.table, S.sch, i, S.R0, 256);
        ok = ok && r.pass() && r.samples >= 256 && r.h >= 0.5 && r.h <= 2;
        d += "p" + std::to_string(i) + ": perelman " + num(r.perelman_margin) + " upper " + num(r.upper_margin) + " h " +
             num(r.h) + " ";
    }
    return {ok, d};
}

Outcome c6_cap() {
    Shared& S = shared();
    bool ok = true;
    std::string d;
    for (int n : {2, 3, 5}) {
        const CapBuild C = n == 2 ? S.cap2() : choose_cap_constants(n, S.cfg.grid.neck_t, S.cfg.grid.neck_x);
        const CapParams& c = C.cap;
        const double id1 = std::fabs(log(c.k * LogScalar(0.5 * CapParams::tanh12()) / (LogScalar(4.0) * c.lam)));
        const double id2 = std::fabs(log(c.k * c.c0) - std::log(0.5));
        const Jet v = cap_vbar_scaled(std::numbers::pi / 6);
        const double id3 = std::fabs(v.d1 / v.value / std::sqrt(3.0) - 1);
        double ric_t = 0, ric_min = std::numeric_limits<double>::infinity();
        for (int i = 1; i <= S.table.i_max(); ++i)
            for (int j = 0; j < 1000; ++j) {
                const auto K = cap_curvature_at(c, S.table.at(i).h, std::numbers::pi / 6 * j / 999);
                ric_t = std::max(ric_t, std::fabs(K.Ric_T - (n - 1.5)));
                ric_min = std::min({ric_min, K.Ric_T, K.Ric_Sig, K.Ric_Theta});
            }
        ok = ok && id1 < 1e-12 && id2 < 1e-12 && id3 < 1e-12 && ric_t < 1e-12 && ric_min > 0;
        d += "n=" + std::to_string(n) + ": ids " + num(std::max({id1, id2, id3, ric_t})) + " min Ric " + num(ric_min) + " ";
    }
    return {ok, d};
}

Outcome c7_gluing() {
    Shared& S = shared();
    const CapParams& cap = S.cap2().cap;
    bool ok = true;
    std::string d;
    for (int i = 1; i <= S.table.i_max(); ++i) {
        const double h = S.table.at(i).h;
        const auto cb = cap_boundary_forms(cap, h);
        const auto pb = product_boundary_forms(h, cap.lam, cap.rho, cap.c0);
        const double iso = boundary_isometry_residual(cb, pb);
        const auto g = gluing_check(pb.forms, cb.forms, iso, 1e-9);
        ok = ok && g.pass();
        d += "p" + std::to_string(i) + ": margin " + num(g.margin) + " iso " + num(iso) + " ";
    }
    return {ok, d};
}

Outcome c8_neck() {
    const auto t0 = Clock::now();
    const CapBuild C = choose_cap_constants(2, 512, 257);
    const double dt = seconds_since(t0);
    const auto& N = C.neck;
    const ABLog end = ab_eval_log(N.sol, N.sol.s_inf());
    const double a_res = std::fabs(std::expm1(end.la.value - std::log(N.sol.a_inf)));
    const double b_res = std::fabs(std::expm1(end.lb.value - N.sol.ln_b_inf()));
    const bool ok = N.ricci_claim.pass() && N.boundary_claim.pass() && a_res < 1e-8 && b_res < 1e-8 && dt < 60.0;
    return {ok, "ricci_claim margin " + num(N.ricci_claim.margin()) + " phi_min " + num(N.ricci_claim.phi_min) + ", inner " +
                    num(N.boundary_claim.inner_residual) + ", outer II " + num(N.boundary_claim.outer_II_min) + ", end " +
                    num(std::max(a_res, b_res)) + ", " + num(dt) + " s"};
}

Outcome c9_growth() {
    bool ok = true;
    std::string d;
    for (double gamma : {0.1, 0.25, 0.4}) {
        const auto t0 = Clock::now();
        Config cfg;
        cfg.gamma = gamma;
        const Assembly a = run_pipeline(cfg, RunMode::Growth);
        const double dt = seconds_since(t0);
        const Check* v = a.find("growth_volume_slope");
        const Check* g = a.find("growth_diameter_slope");
        const bool pass = a.failed_stage.empty() && v && g && v->status == CheckStatus::Pass &&
                          g->status == CheckStatus::Pass && a.growth.value("ln_t_span", 0.0) >= kMinLnTSpan && dt < 30.0;
        ok = ok && pass;
        d += "gamma " + num(gamma) + ": ";
        if (!a.failed_stage.empty()) {
            d += "stage " + a.failed_stage + " failed ";
            continue;
        }
        d += num(a.growth["vol_slope"].get<double>()) + "/" + num(a.growth["diam_slope"].get<double>()) + " " + num(dt) + " s ";
    }
    return {ok, d};
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string cli_path;

Outcome c10_determinism() {
    const fs::path dir = fs::temp_directory_path() / "warpcert_acceptance";
    fs::remove_all(dir);
    std::string bytes[2];
    int codes[2];
    for (int k = 0; k < 2; ++k) {
        if (!cli_path.empty()) {
            const std::string cmd = "\"" + cli_path + "\" verify --out \"" + dir.string() + "\" > /dev/null";
            const int st = std::system(cmd.c_str());
            codes[k] = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
        } else {
            Config cfg;
            cfg.out_dir = dir.string();
            const Assembly a = run_pipeline(cfg);
            emit_report(a, dir);
            codes[k] = a.exit_code(false);
        }
        bytes[k] = read_file(dir / "report.json");
        fs::rename(dir / "report.json", dir / ("report." + std::to_string(k) + ".json"));
    }
    const bool same = !bytes[0].empty() && bytes[0] == bytes[1];
    return {same && codes[0] == 0 && codes[1] == 0,
            std::string(same ? "identical" : "different") + " reports (" + std::to_string(bytes[0].size()) +
                " bytes), exit codes " + std::to_string(codes[0]) + "/" + std::to_string(codes[1]) +
                (cli_path.empty() ? " (in process)" : "")};
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"curvature oracle (round and hyperbolic)", c1_curvature_oracle},
        {"jets agree with finite differences", c2_jets},
        {"radial induction for i <= 3", c3_radial},
        {"angular profile propositions at the scheduled eps", c4_propositions},
        {"Perelman property on removed-ball boundaries", c5_perelman},
        {"cap identities and cap Ricci positivity", c6_cap},
        {"gluing margins and boundary isometry", c7_gluing},
        {"neck claims", c8_neck},
        {"growth exponents for gamma 0.1, 0.25, 0.4", c9_growth},
        {"end-to-end determinism of verify", c10_determinism},
    };
    int only = 0;
    for (int k = 1; k < argc; ++k) {
        const std::string a = argv[k];
        if (a == "--cli" && k + 1 < argc) cli_path = argv[++k];
        else only = std::atoi(a.c_str());
    }
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        if (only && static_cast<int>(k + 1) != only) continue;
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << k + 1 << " " << criteria[k].first << ": " << o.detail << std::endl;
        failed += o.pass ? 0 : 1;
    }
    return failed ? 1 : 0;
}
