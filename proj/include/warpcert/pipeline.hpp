#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "angular.hpp"
#include "boundary.hpp"
#include "config.hpp"
#include "curvature.hpp"
#include "growth.hpp"
#include "jetcheck.hpp"
#include "neck.hpp"
#include "radial.hpp"
#include "report.hpp"

namespace warpcert {

enum class RunMode { Construct, Verify, Growth, Neck };

namespace detail {

inline std::string pname(const std::string& base, int i) { return base + "_p" + std::to_string(i); }

// relative slack for inequalities that hold with equality at a grid point
constexpr double kNonStrictSlack = 1e-12;

class PipelineRun {
public:
    PipelineRun(const Config& cfg, RunMode mode, std::optional<NeckInput> neck_input = std::nullopt)
        : cfg_(cfg), mode_(mode), neck_input_(std::move(neck_input)) {}

    Assembly run() {
        a_.config_echo = cfg_.to_json();
        fill_assumptions();
        const std::vector<std::pair<std::string, std::function<void()>>> stages = {
            {"curvature_oracle", [&] { stage_oracle(); }},
            {"radial", [&] { stage_radial(); }},
            {"schedule", [&] { stage_schedule(); }},
            {"angular", [&] { stage_angular(); }},
            {"curvature_grid", [&] { stage_curvature_grid(); }},
            {"boundary", [&] { stage_boundary(); }},
            {"neck", [&] { stage_neck(); }},
            {"cap", [&] { stage_cap(); }},
            {"gluing", [&] { stage_gluing(); }},
            {"growth", [&] { stage_growth(); }},
        };
        for (const auto& [name, fn] : stages) {
            if (!wanted(name)) continue;
            try {
                fn();
            } catch (const ConfigError&) {
                throw;
            } catch (const std::exception& e) {
                a_.failed_stage = name;
                a_.failure_message = e.what();
                a_.open_flags.push_back("stage " + name + " failed: " + e.what());
                break;
            }
        }
        return std::move(a_);
    }

private:
    const Config cfg_;
    const RunMode mode_;
    const std::optional<NeckInput> neck_input_;
    Assembly a_;

    PeriodTable table0_, table_;
    EpsSchedule sch_;
    double R0_ = 0;
    CapBuild cap_;
    bool have_cap_ = false;

    bool wanted(const std::string& stage) const {
        switch (mode_) {
            case RunMode::Construct: return stage == "radial" || stage == "schedule";
            case RunMode::Growth: return stage == "radial" || stage == "schedule" || stage == "growth";
            case RunMode::Neck: return stage == "neck";
            default: return true;
        }
    }
    bool checking() const { return mode_ == RunMode::Verify || mode_ == RunMode::Neck; }

    Check& add(const std::string& name, const std::string& anchor, double margin, long grid, CsvTable csv = {}) {
        Check c;
        c.name = name;
        c.anchor = anchor;
        c.margin = margin;
        c.grid_size = grid;
        c.status = margin > cfg_.tolerances.margin_min ? CheckStatus::Pass : CheckStatus::Fail;
        c.csv = std::move(csv);
        a_.checks.push_back(std::move(c));
        return a_.checks.back();
    }

    static CsvTable summary_csv(const std::vector<std::pair<std::string, double>>& kv) {
        CsvTable t;
        t.header = {"quantity", "value"};
        for (const auto& [k, v] : kv) t.add(k, v);
        return t;
    }

    void fill_assumptions() {
        a_.assumptions = {
            "The constant R in the matching relation of the angular profile is read as R0.",
            "R0 = rho^4 with rho the cap constant chosen for n; the same R0 is used for every period.",
            "The diameter quantity is an upper estimate pi u(t) + pi c0 plus a per-period surgery allowance, "
            "adequate for slope fitting and not claimed to equal the distance-sphere diameter.",
            "Surgery regions contribute constant per-period volume and diameter allowances; doubling them is reported.",
            "Growth fits extend the radial construction past the verified periods until ln t spans a factor 1000.",
            "Inside the transition window eps(t) interpolates ln eps; curvature grids sample only where f_t = 0.",
            "Perelman margins and curvature-grid margins are scaled by u^2 or t^2; the sign is unchanged.",
            "Non-strict inequalities carry a relative slack of 1e-12 in their reported margin.",
            "The neck input for the cap is a smooth prolate surrogate eta = cos^2 x with r = rho^4.",
            "Neck exponents alpha and beta are chosen so that a(t_inf) = a_inf and b(t_inf) = r (rho/r)^eps hold together.",
            "Jet-vs-difference checks sample each profile family where its values are plain doubles.",
        };
    }

    // ------------------------------------------------------------ engine self-test
    void stage_oracle() {
        if (!checking()) return;
        double round_err = 0, hyp_err = 0;
        int n = 0;
        CsvTable rc, hc;
        rc.header = hc.header = {"t", "x", "K_TX", "K_TSigma", "K_XSigma"};
        for (int a = 1; a <= 16; ++a)
            for (int b = 1; b <= 16; ++b) {
                const double t = 3.0 * a / 17, x = std::numbers::pi * b / 17;
                const Jet f{std::sin(x), std::cos(x), -std::sin(x)};
                const auto q1 = q_curvature(Jet{std::sin(t), std::cos(t), -std::sin(t)}, f);
                const auto q2 = q_curvature(Jet{std::sinh(t), std::cosh(t), std::sinh(t)}, f);
                for (double k : {q1.K_TX, q1.K_TSigma, q1.K_XSigma}) round_err = std::max(round_err, std::fabs(k - 1));
                for (double k : {q2.K_TX, q2.K_TSigma, q2.K_XSigma}) hyp_err = std::max(hyp_err, std::fabs(k + 1));
                rc.add(t, x, q1.K_TX, q1.K_TSigma, q1.K_XSigma);
                hc.add(t, x, q2.K_TX, q2.K_TSigma, q2.K_XSigma);
                ++n;
            }
        add("curvature_oracle_round", "unit round 3-sphere has all sectional curvatures 1", 1e-12 - round_err, n, rc);
        add("curvature_oracle_hyperbolic", "hyperbolic space has all sectional curvatures -1", 1e-12 - hyp_err, n, hc);
    }

    // ------------------------------------------------------------ radial profile
    void stage_radial() {
        const auto s1 = select_t1(cfg_.gamma, cfg_.c1, cfg_.c2, cfg_.i_max, cfg_.grid.u);
        const ConstructionParams p{cfg_.gamma, cfg_.c1, cfg_.c2, s1.t1, cfg_.i_max};
        table0_ = build_periods(p);
        R0_ = std::pow(choose_cap_rho(cfg_.n), 4);
        if (!checking()) return;

        std::vector<USample> samples;
        const UBoundsReport rep = verify_u_bounds(table0_, cfg_.grid.u, cfg_.tolerances.c1_continuity,
                                                  [&](const USample& s) { samples.push_back(s); });
        const double c1 = cfg_.c1, c2 = cfg_.c2, upper_int = 2 * c1 / (1 + cfg_.gamma);
        const double sl = rep.deriv_upper.slack;
        const long grid = static_cast<long>(samples.size());

        auto sample_csv = [&](const std::function<double(const USample&)>& m) {
            CsvTable t;
            t.header = {"period", "phase", "tau", "t", "u", "u_t", "u_tt", "margin"};
            for (const auto& s : samples) t.add(s.period, phase_name(s.phase), s.tau, s.t, s.u.value, s.u.d1, s.u.d2, m(s));
            return t;
        };
        add("u_deriv_lower", "u-pinching: u_t t^((1-gamma)/2) >= c2", rep.deriv_lower.margin, grid,
            sample_csv([&](const USample& s) { return s.deriv_ratio - c2; }));
        add("u_deriv_upper", "u-pinching: u_t t^((1-gamma)/2) <= c1", rep.deriv_upper.margin + sl, grid,
            sample_csv([&](const USample& s) { return c1 - s.deriv_ratio + sl; }));
        add("u_value_lower", "u-pinching: u t^(-(1+gamma)/2) >= c2", rep.value_lower.margin, grid,
            sample_csv([&](const USample& s) { return s.value_ratio - c2; }));
        Check& lit = add("u_value_upper", "u-pinching: u t^(-(1+gamma)/2) <= c1 (as stated)", rep.value_upper.margin + sl,
                         grid, sample_csv([&](const USample& s) { return c1 - s.value_ratio + sl; }));
        if (lit.status == CheckStatus::Fail) {
            lit.status = CheckStatus::Open;
            a_.open_flags.push_back(
                "u_value_upper: the stated bound u <= c1 t^((1+gamma)/2) fails (margin " + fmt17(lit.margin) +
                "); it does not follow from the derivative bound, whose integral gives u <= 2 c1/(1+gamma) t^((1+gamma)/2), "
                "certified as u_value_upper_integrated");
        }
        add("u_value_upper_integrated", "u-pinching: u t^(-(1+gamma)/2) <= 2 c1/(1+gamma), integrated derivative bound",
            rep.value_upper_integrated.margin + sl, grid,
            sample_csv([&](const USample& s) { return upper_int - s.value_ratio + sl; }));
        // u_tt t^2/u, capped at 1; the sign is exact in log domain
        add("u_concavity", "u_tt < 0", rep.concavity.margin, grid, sample_csv([](const USample& s) {
                return s.u.d2.sign < 0 ? std::min(1.0, (abs(s.u.d2) / s.u.value * s.t * s.t).value()) : -1.0;
            }));
        {
            CsvTable t;
            t.header = {"period", "tau", "u_t t^q", "margin"};
            double prev = 0;
            int prev_period = 0;
            for (const auto& s : samples) {
                if (s.phase != Phase::Arc) continue;
                if (s.period == prev_period) t.add(s.period, s.tau, s.deriv_ratio, (prev - s.deriv_ratio) / prev + rep.arc_monotone.slack);
                prev = s.deriv_ratio;
                prev_period = s.period;
            }
            add("arc_ratio_monotone", "u_t t^((1-gamma)/2) non-increasing on spherical arcs",
                rep.arc_monotone.margin + rep.arc_monotone.slack, static_cast<long>(t.rows.size()), t);
        }
        {
            CsvTable t;
            t.header = {"period", "theta_c", "Lambda", "margin"};
            for (int i = 1; i <= table0_.i_max(); ++i) {
                const Period& P = table0_.at(i);
                t.add(i, P.theta_c, P.Lambda, (P.arc_margin() / P.theta_c).value());
            }
            add("arc_feasible", "Lambda_i (psi_i + 2) < pi/2, relative to theta_c", rep.arc_feasible.margin, table0_.i_max(), t);
        }
        {
            CsvTable cv, cd;
            cv.header = cd.header = {"period", "junction", "relative_jump", "margin"};
            const double tol = cfg_.tolerances.c1_continuity;
            for (int i = 1; i <= table0_.i_max(); ++i) {
                const LogJet a = u_eval(table0_, {i, Phase::Arc, LogScalar(2.0)});
                const LogJet b = u_eval(table0_, {i, Phase::PowerLaw, LogScalar(0.0)});
                const LogJet c = u_eval(table0_, {i, Phase::PowerLaw, phase_length(table0_, i, Phase::PowerLaw)});
                const LogJet d = u_eval(table0_, {i + 1, Phase::Arc, LogScalar(0.0)});
                cv.add(i, "knee", relative_gap(a.value, b.value), tol - relative_gap(a.value, b.value));
                cv.add(i, "next", relative_gap(c.value, d.value), tol - relative_gap(c.value, d.value));
                cd.add(i, "knee", relative_gap(a.d1, b.d1), tol - relative_gap(a.d1, b.d1));
                cd.add(i, "next", relative_gap(c.d1, d.d1), tol - relative_gap(c.d1, d.d1));
            }
            add("u_c0_continuity", "u continuous at the phase junctions", rep.c1_value.margin, 2 * table0_.i_max(), cv);
            add("u_c1_continuity", "u_t continuous at the phase junctions", rep.c1_deriv.margin, 2 * table0_.i_max(), cd);
        }
        const JetFdFamily ju = jet_fd_u(p, 1000, cfg_.tolerances.jet_fd);
        add_jet(ju);
    }

    void add_jet(const JetFdFamily& f) {
        CsvTable t;
        t.header = {"x", "value", "jet_d1", "jet_d2", "fd_d1", "fd_d2", "rel_err"};
        for (const auto& r : f.rows) t.add(r[0], r[1], r[2], r[3], r[4], r[5], r[6]);
        add("jet_fd_" + f.name, "forward-mode jets agree with finite differences, profile " + f.name, f.margin(), f.points, t);
    }

    // ------------------------------------------------------------ eps schedule
    void stage_schedule() {
        sch_ = build_eps_schedule(table0_, cfg_.eps0);
        table_ = with_schedule(table0_, sch_);
        for (int i = 1; i <= table_.i_max(); ++i) {
            const Period& P = table_.at(i);
            nlohmann::ordered_json e;
            e["i"] = i;
            e["t"] = fmt17(P.t);
            e["ln_t"] = log(P.t);
            e["u"] = fmt17(P.u);
            e["uprime"] = fmt17(P.uprime);
            e["Lambda"] = fmt17(P.Lambda);
            e["theta_c"] = fmt17(P.theta_c);
            e["psi"] = fmt17(P.psi);
            e["t_knee"] = fmt17(P.t_knee);
            e["log_eps"] = sch_.at(i);
            e["eps"] = fmt17(LogScalar::from_log(sch_.at(i)));
            e["eps_halvings"] = sch_.halvings.at(static_cast<std::size_t>(i - 1));
            e["support_margin"] = sch_.support_margin.at(static_cast<std::size_t>(i - 1));
            e["h"] = P.h;
            a_.periods.push_back(e);
        }
        if (!checking()) return;
        CsvTable t;
        t.header = {"period", "log_eps", "halvings", "margin"};
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < sch_.log_eps.size(); ++k) {
            t.add(static_cast<int>(k + 1), sch_.log_eps[k], sch_.halvings[k], sch_.support_margin[k]);
            m = std::min(m, sch_.support_margin[k]);
        }
        add("eps_support", "deformation support eps_i^(1/4) u(t_i + 3/2) + 1/2 < 4/5", m,
            static_cast<long>(sch_.log_eps.size()), t);
    }

    // ------------------------------------------------------------ angular profile
    void stage_angular() {
        const double eta = 0.1;
        for (int i = 1; i <= table_.i_max(); ++i) {
            const AngularSolution s = solve_angular_params(sch_.at(i), R0_);
            const auto mr = matching_residuals(s);
            const double mres = std::max({mr.at_b, mr.at_eps, mr.level, mr.tan_root});
            add(pname("angular_matching", i), "C0 and C1 matching of the angular pieces at x = b and x = eps", 1e-12 - mres, 4,
                summary_csv({{"at_b", mr.at_b}, {"at_eps", mr.at_eps}, {"level", mr.level}, {"tan_root", mr.tan_root}}));

            CsvTable c1, c2;
            c1.header = {"x", "f", "fx", "fxx", "margin1", "margin2"};
            c2.header = {"x", "A_over_eps", "margin"};
            for_each_angular_sample(s, cfg_.grid.x, [&](const AngularRatios& r) {
                const double m1 = saturate(r.neg_fxx_over_f - LogScalar(1 - eta));
                const double m2 = saturate(r.gauss_term - LogScalar(1 - eta));
                if (r.x.sign == 0) {
                    const auto [x, f, fxx] = doubly_log_cells(s, r);
                    c1.add(x, f, r.fx, fxx, m1, m2);
                    c2.add(x, r.A_over_eps, 2.0 - std::fabs(r.A_over_eps));
                    return;
                }
                c1.add(r.x, r.f, r.fx, r.fxx, m1, m2);
                c2.add(r.x, r.A_over_eps, 2.0 - std::fabs(r.A_over_eps));
            });
            const CurvatureBoundsReport p1 = verify_curvature_bounds(s, eta, cfg_.grid.x);
            const DeviationReport p2 = verify_deviation(s, cfg_.grid.x);
            add(pname("angular_curvature", i), "-f_xx/f >= 1 - eta and (1 - f_x^2)/f^2 >= 1 - eta, eta = 0.1",
                std::min(p1.curvature.min_value, p1.gauss.min_value), p1.curvature.samples, c1);
            add(pname("angular_deviation", i), "A(x) < 2 eps_i", p2.margin.min_value, p2.margin.samples, c2);
        }
        const JetFdFamily jf = jet_fd_f(R0_, 1000, cfg_.tolerances.jet_fd);
        add_jet(jf);
    }

    // Near the axis x itself can leave LogScalar range (ln b ~ -e^735 when eps ~ e^-735).
    // The ratios are exact there; the dump writes x, f, f_xx as exp(ln|.|) with ln|.| in log domain.
    static std::array<std::string, 3> doubly_log_cells(const AngularSolution& s, const AngularRatios& r) {
        if (r.piece == AngularPiece::Axis) {
            const double sy = std::log(std::sin(r.param * s.y()));
            const LogScalar ln_x = s.ln_b + LogScalar(std::log(r.param));
            const LogScalar ln_f = LogScalar(sy) - s.ln_l;
            const LogScalar ln_fxx = s.ln_l + LogScalar(sy);
            return {fmt17_exp(ln_x), fmt17_exp(ln_f), fmt17_exp(ln_fxx, -1)};
        }
        // power piece: ln x = ln eps - w/eps
        const LogScalar ln_x = LogScalar(s.log_eps) - LogScalar(r.param) / s.eps_ls();
        const LogScalar ln_f = ln_x + LogScalar(std::log(r.fx) - std::log1p(-s.eps));
        const LogScalar ln_fxx = LogScalar(s.log_eps + std::log1p(-s.eps)) - LogScalar(2.0) * ln_x + ln_f;
        return {fmt17_exp(ln_x), fmt17_exp(ln_f), fmt17_exp(ln_fxx, -1)};
    }

    // ------------------------------------------------------------ body curvature away from the windows
    void stage_curvature_grid() {
        const int nt = cfg_.grid.u;
        for (int i = 1; i <= table_.i_max(); ++i) {
            const AngularSolution before = solve_angular_params(sch_.at(i), R0_);
            const AngularSolution after = solve_angular_params(sch_.at(i + 1), R0_);
            std::vector<AngularRatios> xs_before, xs_after;
            for_each_angular_sample(before, 256, [&](const AngularRatios& r) { xs_before.push_back(r); });
            for_each_angular_sample(after, 256, [&](const AngularRatios& r) { xs_after.push_back(r); });

            CsvTable t;
            t.header = {"period", "phase", "tau", "t", "scale", "min_K_TX", "min_K_XSigma", "margin"};
            double margin = std::numeric_limits<double>::infinity();
            long count = 0;
            auto row = [&](Phase ph, const LogScalar& tau, const std::vector<AngularRatios>& xs) {
                const RadialPosition pos{i, ph, tau};
                const LogJet u = u_eval(table_, pos);
                const LogScalar gt = global_t(table_, pos);
                // u^2 on the arcs, t^2 on the power law: both keep the scaled curvatures O(1)
                const LogScalar sc = ph == Phase::Arc ? u.value * u.value : gt * gt;
                double ktx = std::numeric_limits<double>::infinity(), kxs = ktx;
                for (const auto& r : xs) {
                    const LogQCurvature q = q_curvature_ratio(u, r.neg_fxx_over_f);
                    ktx = std::min({ktx, saturate(q.K_TX * sc), saturate(q.K_TSigma * sc)});
                    kxs = std::min(kxs, saturate(q.K_XSigma * sc));
                    ++count;
                }
                const double m = std::min(ktx, kxs);
                margin = std::min(margin, m);
                t.add(i, phase_name(ph), tau, gt, ph == Phase::Arc ? "u^2" : "t^2", ktx, kxs, m);
            };
            for (int k = 0; k < nt; ++k) {
                const double f = static_cast<double>(k) / (nt - 1);
                row(Phase::Arc, LogScalar(0.5 * f), xs_before);
                row(Phase::Arc, LogScalar(1.5 + 0.5 * f), xs_after);
            }
            const Period& P = table_.at(i);
            const double l0 = log(P.t_knee), l1 = log(table_.at(i + 1).t);
            for (int k = 0; k < nt; ++k) {
                const double lt = l0 + (l1 - l0) * k / (nt - 1);
                LogScalar tau = k == 0 ? LogScalar(0.0)
                                       : (k == nt - 1 ? phase_length(table_, i, Phase::PowerLaw) : LogScalar::from_log(lt) - P.t_knee);
                if (tau.sign < 0) tau = LogScalar(0.0);
                row(Phase::PowerLaw, tau, xs_after);
            }
            add(pname("q_sectional", i), "sectional curvatures K(T,X), K(T,Sigma), K(X,Sigma) > 0 outside the removed balls",
                margin, count, t);
        }
    }

    // ------------------------------------------------------------ removed balls and the base slice
    void stage_boundary() {
        const int samples = std::max(256, cfg_.grid.u);
        for (int i = 1; i <= table_.i_max(); ++i) {
            const BallBoundaryReport r = ball_boundary_forms(table_, sch_, i, R0_, samples);
            CsvTable t;
            t.header = {"phi", "t", "x", "xi", "II_YY", "II_SS_chain", "II_SS_direct", "excess_over_eps", "perelman_scaled"};
            for (const auto& s : r.points)
                t.add(s.point.arc_param, s.point.t, s.point.x, s.point.xi, s.II_YY, s.II_SS_chain, s.II_SS_direct,
                      s.excess_over_eps, finite_margin(s.perelman_scaled));
            add(pname("perelman", i), "K_int - (max|II|)^2 > 0 on the boundary of the removed ball, scaled by u^2",
                r.perelman_margin, samples, t);
            add(pname("ii_sandwich_lower", i), "Lambda cot(4 Lambda/5) <= max|II|", r.lower_margin / r.h0 + kNonStrictSlack,
                samples, t);
            add(pname("ii_sandwich_upper", i), "max|II| <= Lambda cot(4 Lambda/5) + 3 eps_i",
                std::min(r.upper_margin, r.direct_margin), samples, t);
            add(pname("ii_route_agreement", i), "chain-rule and direct II(Sigma,Sigma) agree to 1e-12 relative",
                1e-12 - r.route_gap, samples, t);
            add(pname("h_bracket", i), "h_i in [1/2, 2]", r.h_bracket_margin, 1,
                summary_csv({{"h0", r.h0}, {"h", r.h}, {"margin", r.h_bracket_margin}}));
            add(pname("ball_separation", i), "the two removed balls are disjoint: pi u(t_i) > 8/5", r.separation_margin, 1,
                summary_csv({{"margin", r.separation_margin}}));
        }
        const BaseSliceReport b = base_slice_forms(table_, solve_angular_params(sch_.at(1), R0_), 2001);
        add("base_slice_identity", "the slice t = t_1 has II = 1/t_1 in every direction", 1e-12 - b.inv_t1_residual, 2,
            summary_csv({{"II_X_times_t1", b.forms.at("X")}, {"II_Sigma_times_t1", b.forms.at("Sigma")}}));
        add("base_slice_perelman", "u^2 K_int - u^2/t_1^2 > 0 on the slice t = t_1", b.margin, b.grid,
            summary_csv({{"margin", b.margin}, {"eta_margin", b.eta_margin}}));
    }

    // ------------------------------------------------------------ neck
    void stage_neck() {
        NeckBuild supplied;
        if (neck_input_) {
            supplied = build_neck(*neck_input_, cfg_.grid.neck_t, cfg_.grid.neck_x);
        } else {
            cap_ = choose_cap_constants(cfg_.n, cfg_.grid.neck_t, cfg_.grid.neck_x);
            have_cap_ = true;
        }
        const NeckBuild& N = neck_input_ ? supplied : cap_.neck;
        const RicciClaimReport& c1 = N.ricci_claim;
        const long grid = static_cast<long>(c1.grid_t) * c1.grid_x;
        const auto c1csv = summary_csv({{"ric_T", c1.ric_T}, {"ric_X", c1.ric_X}, {"ric_S", c1.ric_S},
                                        {"ric_TX_eig", c1.ric_TX_eig}, {"phi_min", c1.phi_min},
                                        {"endpoint_margin", c1.endpoint_margin}, {"worst_s", c1.worst_s},
                                        {"worst_x", c1.worst_x}, {"t0", N.sol.t0}, {"eps_n", N.sol.eps_n},
                                        {"delta_n", N.sol.delta_n}, {"alpha", N.sol.alpha}, {"beta", N.sol.beta}});
        add("neck_ricci_T", "neck Ric(T,T) > 0, times t^2", c1.ric_T, grid, c1csv);
        add("neck_ricci_X", "neck Ric(X,X) > 0, times t^2", c1.ric_X, grid, c1csv);
        add("neck_ricci_S", "neck Ric(S,S) > 0, times t^2", c1.ric_S, grid, c1csv);
        add("neck_ricci_TX", "neck (T,X) Ricci block positive definite, smallest eigenvalue times t^2", c1.ric_TX_eig, grid, c1csv);
        add("neck_phi", "phi(t) >= 2 on the neck", c1.phi_min - 2, grid, c1csv);
        add("neck_phi_endpoint", "per-slice minimum of phi attained at an endpoint", c1.endpoint_margin + kNonStrictSlack, grid,
            c1csv);

        const BoundaryClaimReport& c2 = N.boundary_claim;
        const ABLog end = ab_eval_log(N.sol, N.sol.s_inf());
        const double a_res = std::fabs(std::expm1(end.la.value - std::log(N.sol.a_inf)));
        const double b_res = std::fabs(std::expm1(end.lb.value - N.sol.ln_b_inf()));
        const auto c2csv = summary_csv({{"a_end_residual", a_res}, {"b_end_residual", b_res},
                                        {"inner_residual", c2.inner_residual},
                                        {"inner_radius_residual", c2.inner_radius_residual},
                                        {"outer_profile_residual", c2.outer_profile_residual},
                                        {"outer_II_min", c2.outer_II_min}, {"lambda_log", log(N.sol.lam)}});
        add("neck_end_values", "a(t_inf) = a_inf and b(t_inf) = r (rho/r)^eps_n within 1e-8",
            1e-8 - std::max({a_res, b_res, c2.outer_profile_residual}), 2, c2csv);
        add("neck_inner_boundary", "inner boundary normal curvatures equal -lambda within 1e-10",
            1e-10 - std::max(c2.inner_residual, c2.inner_radius_residual), 2, c2csv);
        add("neck_outer_convex", "outer boundary normal curvatures > 1 after rescaling", c2.outer_II_min - 1, cfg_.grid.neck_x,
            c2csv);
        const auto [fa, fb] = jet_fd_ab(N.sol, 1000, cfg_.tolerances.jet_fd);
        add_jet(fa);
        add_jet(fb);
    }

    std::vector<double> verified_h() const {
        std::vector<double> hs;
        for (int i = 1; i <= table_.i_max(); ++i) hs.push_back(table_.at(i).h);
        return hs;
    }

    // ------------------------------------------------------------ cap
    void stage_cap() {
        const CapParams& cap = cap_.cap;
        const double pi = std::numbers::pi;
        const double id_tanh = std::fabs(log(cap.k * LogScalar(0.5 * CapParams::tanh12()) / (LogScalar(4.0) * cap.lam)));
        const double id_c0 = std::fabs(log(cap.k * cap.c0) - std::log(0.5));
        add("cap_identity_tanh", "(k/2) tanh(pi/12) = 4 lambda, relative", 1e-12 - id_tanh, 1,
            summary_csv({{"log_lambda", log(cap.lam)}, {"log_k", log(cap.k)}, {"residual", id_tanh}}));
        add("cap_identity_kc0", "k c0 = 1/2, relative", 1e-12 - id_c0, 1,
            summary_csv({{"log_c0", log(cap.c0)}, {"residual", id_c0}}));

        // II(Theta) from the profile jet at the boundary s = pi/6, in units of k
        const Jet v = cap_vbar_scaled(pi / 6);
        const double ii_theta = std::fabs(v.d1 / v.value / std::sqrt(3.0) - 1);
        add("cap_II_theta", "II(Theta) = sqrt(3) k on the cap boundary", 1e-12 - ii_theta, 1,
            summary_csv({{"II_theta_over_k", v.d1 / v.value}, {"residual", ii_theta}}));

        const auto hs = verified_h();
        double ric_t_res = 0;
        CsvTable rt;
        rt.header = {"h", "s", "Ric_T", "residual"};
        for (double h : hs)
            for (int j = 0; j <= 1000; ++j) {
                const double s = pi / 6 * j / 1000;
                const double r = cap_curvature_at(cap, h, s).Ric_T;
                const double res = std::fabs(r - (cap.n - 1.5));
                ric_t_res = std::max(ric_t_res, res);
                rt.add(h, s, r, res);
            }
        add("cap_ricci_T_identity", "cap Ric(T,T) = (n - 3/2) k^2", 1e-12 - ric_t_res, static_cast<long>(rt.rows.size()), rt);

        // Ricci positivity for n in {2, 3, 5} and the configured n
        std::vector<int> ns{2, 3, 5};
        if (std::find(ns.begin(), ns.end(), cfg_.n) == ns.end()) ns.push_back(cfg_.n);
        for (int n : ns) {
            const CapParams c = n == cfg_.n ? cap : choose_cap_constants(n, cfg_.grid.neck_t, cfg_.grid.neck_x).cap;
            CsvTable t;
            t.header = {"h", "s", "Ric_T", "Ric_Sigma", "Ric_Theta", "margin"};
            double m = std::numeric_limits<double>::infinity();
            for (double h : hs)
                for (int j = 0; j < 1000; ++j) {
                    const double s = pi / 6 * j / 999;
                    const CapCurvature K = cap_curvature_at(c, h, s);
                    const double mm = std::min({K.Ric_T, K.Ric_Sig, K.Ric_Theta});
                    m = std::min(m, mm);
                    t.add(h, s, K.Ric_T, K.Ric_Sig, K.Ric_Theta, mm);
                }
            add("cap_ricci_n" + std::to_string(n), "cap Ricci curvature positive, units k^2, n = " + std::to_string(n), m,
                static_cast<long>(t.rows.size()), t);
        }
        const double h_mid = hs.empty() ? 1.0 : hs.front();
        const auto [fu, fv] = jet_fd_cap(cap, h_mid, 1000, cfg_.tolerances.jet_fd);
        add_jet(fu);
        add_jet(fv);
    }

    // ------------------------------------------------------------ gluing
    void stage_gluing() {
        const CapParams& cap = cap_.cap;
        for (int i = 1; i <= table_.i_max(); ++i) {
            const double h = table_.at(i).h;
            const CapBoundary cb = cap_boundary_forms(cap, h);
            const ProductBoundary pb = product_boundary_forms(h, cap.lam, cap.rho, cap.c0);
            const double iso = boundary_isometry_residual(cb, pb);
            const GluingReport g = gluing_check(pb.forms, cb.forms, iso, 1e-9);
            CsvTable t;
            t.header = {"direction", "concave", "convex", "margin"};
            for (std::size_t k = 0; k < g.margins.size(); ++k)
                t.add(g.margins[k].first, pb.forms.entries[k].second, cb.forms.entries[k].second, g.margins[k].second);
            add(pname("gluing", i), "convex normal curvatures dominate the concave ones: lambda (4 - h_i) > 0, sqrt(3) k > 0",
                g.margin, static_cast<long>(g.margins.size()), t);
            add(pname("boundary_isometry", i), "cap and product boundaries isometric within 1e-9", 1e-9 - iso, 2,
                summary_csv({{"residual", iso}}));
        }
    }

    // ------------------------------------------------------------ growth
    void stage_growth() {
        ConstructionParams p = table0_.params;
        GrowthModel m;
        p.i_max = std::max(p.i_max, periods_for_span(p));
        m.table = build_periods(p);
        m.log_eps = sch_.log_eps;
        m.R0 = R0_;
        m.n = cfg_.n;
        if (!have_cap_) {
            // c0 comes from the neck; growth-only runs rebuild it
            cap_ = choose_cap_constants(cfg_.n, cfg_.grid.neck_t, cfg_.grid.neck_x);
            have_cap_ = true;
        }
        m.c0 = cap_.cap.c0;
        const GrowthResult r = growth_fits(m);
        nlohmann::ordered_json g;
        g["vol_slope"] = r.vol.slope;
        g["diam_slope"] = r.diam.slope;
        g["targets"] = {{"vol", r.vol_target}, {"diam", r.diam_target}};
        g["vol_slope_doubled_allowance"] = r.vol_slope_doubled_allowance;
        g["diam_slope_doubled_allowance"] = r.diam_slope_doubled_allowance;
        g["vol_max_residual"] = r.vol.max_residual;
        g["diam_max_residual"] = r.diam.max_residual;
        g["samples"] = r.vol.abscissae.size();
        g["ln_t_span"] = r.ln_t_span;
        g["periods"] = r.periods;
        g["verified_periods"] = r.verified_periods;
        nlohmann::ordered_json ex = nlohmann::ordered_json::array();
        for (const auto& w : r.excluded) ex.push_back({{"period", w.period}, {"ln_t_lo", w.ln_t_lo}, {"ln_t_hi", w.ln_t_hi}});
        g["excluded_windows"] = ex;
        a_.growth = g;

        CsvTable t;
        t.header = {"ln_t", "ln_vol", "ln_diam"};
        for (std::size_t k = 0; k < r.vol.abscissae.size(); ++k)
            t.add(r.vol.abscissae[k], r.vol.ordinates[k], r.diam.ordinates[k]);
        const long n = static_cast<long>(r.vol.abscissae.size());
        add("growth_volume_slope", "volume grows like t^(2+gamma): fitted slope within 0.05", 0.05 - r.vol_error(), n, t);
        add("growth_diameter_slope", "diameter grows like t^((1+gamma)/2): fitted slope within 0.05", 0.05 - r.diam_error(), n, t);
    }
};

} // namespace detail

inline Assembly run_pipeline(const Config& cfg, RunMode mode = RunMode::Verify) {
    cfg.validate();
    if (mode == RunMode::Neck) throw DomainError("run_pipeline: the neck-only mode needs an input profile");
    return detail::PipelineRun(cfg, mode).run();
}

// neck claims on a supplied input metric, nothing else
inline Assembly run_neck(const Config& cfg, const NeckInput& in) {
    cfg.validate();
    return detail::PipelineRun(cfg, RunMode::Neck, in).run();
}

// Seed profile for the neck: {"r", "R", "rho", "a_inf", "eta_cosine_series": [c0, c1, ...]}
// with eta(x) = sum c_k cos(2 k x), or {"prolate_rho": rho} for the cap model.
inline NeckInput parse_seed_profile(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("seed profile must be an object");
    if (j.contains("prolate_rho")) {
        detail::check_keys(j, "seed", {"prolate_rho"});
        if (!j.at("prolate_rho").is_number()) throw ConfigError("seed.prolate_rho must be a number");
        try {
            NeckInput in = prolate_model_input(j.at("prolate_rho").get<double>());
            in.validate();
            return in;
        } catch (const DomainError& e) {
            throw ConfigError(std::string("seed profile: ") + e.what());
        }
    }
    detail::check_keys(j, "seed", {"r", "R", "rho", "a_inf", "eta_cosine_series"});
    NeckInput in;
    for (const char* k : {"r", "R", "rho", "a_inf"})
        if (!j.contains(k) || !j.at(k).is_number()) throw ConfigError(std::string("seed.") + k + " must be a number");
    in.r = j.at("r").get<double>();
    in.R = j.at("R").get<double>();
    in.rho = j.at("rho").get<double>();
    in.a_inf = j.at("a_inf").get<double>();
    if (!j.contains("eta_cosine_series") || !j.at("eta_cosine_series").is_array() || j.at("eta_cosine_series").empty())
        throw ConfigError("seed.eta_cosine_series must be a non-empty array");
    std::vector<double> c;
    for (const auto& v : j.at("eta_cosine_series")) {
        if (!v.is_number()) throw ConfigError("seed.eta_cosine_series entries must be numbers");
        c.push_back(v.get<double>());
    }
    in.eta = [c](double x) {
        Jet e{0, 0, 0};
        for (std::size_t k = 0; k < c.size(); ++k) {
            const double w = 2.0 * static_cast<double>(k);
            e.value += c[k] * std::cos(w * x);
            e.d1 -= c[k] * w * std::sin(w * x);
            e.d2 -= c[k] * w * w * std::cos(w * x);
        }
        return e;
    };
    // eta must vanish at the poles and peak at 1
    const double pole = in.eta(std::numbers::pi / 2).value;
    double top = 0;
    for (int k = 0; k <= 1024; ++k) top = std::max(top, in.eta(-std::numbers::pi / 2 + std::numbers::pi * k / 1024).value);
    if (std::fabs(pole) > 1e-12) throw ConfigError("seed profile: eta must vanish at x = +-pi/2");
    if (std::fabs(top - 1) > 1e-9) throw ConfigError("seed profile: max eta must be 1");
    try {
        in.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("seed profile: ") + e.what());
    }
    return in;
}

inline NeckInput load_seed_profile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read seed profile " + path);
    try {
        return parse_seed_profile(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("seed profile is not valid JSON: ") + e.what());
    }
}

} // namespace warpcert
