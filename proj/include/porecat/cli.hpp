#pragma once

// Command-line driver: run, validate, converge and oracle modes.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "porecat/io/config.hpp"
#include "porecat/io/output.hpp"
#include "porecat/oracles.hpp"
#include "porecat/simulation.hpp"
#include "porecat/studies.hpp"

namespace porecat {

enum ExitCode : int {
    exit_ok = 0,
    exit_config = 1,
    exit_solver = 2,
    exit_validation = 3,
    exit_diagnostics = 4,
};

struct CliOptions {
    std::string config;
    std::string out_dir;
    std::vector<std::string> overrides;
    std::string mode = "run";
    std::string oracle;
    bool force = false;
    bool dump_matrices = false;
};

namespace detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline std::filesystem::path out_dir(const CliOptions& o, const RunConfig& cfg) {
    return o.out_dir.empty() ? std::filesystem::path(cfg.output.directory) : std::filesystem::path(o.out_dir);
}

/// Sorption, reaction, triangular-candidate and velocity reports.
inline std::vector<ValidationReport> validation_reports(const RunConfig& cfg, const Discretization& disc) {
    std::vector<ValidationReport> out;
    const auto& chem = cfg.chemistry;
    for (int i = 0; i < chem.n_species(); ++i) {
        auto r = validate_sorption(chem.sorption[i], cfg.validation);
        r.subject = "sorption." + chem.species.names[i] + " (" + cfg.sorption_laws[i] + ")";
        out.push_back(std::move(r));
    }
    out.push_back(validate_reaction(chem.reaction, cfg.validation));
    out.back().subject = "reaction";
    if (cfg.triangular) {
        ValidationReport t;
        t.subject = "reaction (triangular candidate)";
        t.checks.push_back(check_triangular(chem.reaction, *cfg.triangular, cfg.validation));
        out.push_back(std::move(t));
    }
    const AvelReport av = validate_avel(cfg.velocity, disc.mesh.bulk);
    ValidationReport v;
    v.subject = "velocity (" + cfg.velocity_kind + ")";
    CheckResult c;
    c.assumption = "A_vel";
    c.verdict = av.passed ? Verdict::pass : Verdict::fail;
    c.detail = "max |div u| " + fmt(av.max_divergence) + ", inflow " + fmt(av.inflow_rate) + ", outflow " +
               fmt(av.outflow_rate);
    v.checks.push_back(c);
    out.push_back(std::move(v));

    ValidationReport s;
    s.subject = "scenario signs";
    CheckResult sc;
    sc.assumption = "signs";
    try {
        cfg.scenario.validate(chem.n_species(), true);
    } catch (const ConfigError& e) {
        sc.verdict = Verdict::fail;
        sc.detail = e.what();
    }
    s.checks.push_back(sc);
    out.push_back(std::move(s));
    return out;
}

inline void print_reports(std::ostream& os, const std::vector<ValidationReport>& reps) {
    for (const auto& r : reps) {
        os << (r.passed() ? "PASS " : "FAIL ") << r.subject << "\n";
        for (const auto& c : r.checks) {
            os << "  " << c.assumption << ": " << to_string(c.verdict) << " [" << to_string(c.method) << "]";
            if (!c.witness.empty()) os << " at " << point_string(c.witness);
            if (!c.detail.empty()) os << " " << c.detail;
            os << "\n";
        }
    }
}

inline bool all_passed(const std::vector<ValidationReport>& reps) {
    for (const auto& r : reps)
        if (!r.passed()) return false;
    return true;
}

inline void dump_matrices(const Discretization& disc, const std::filesystem::path& dir) {
    write_matrix_market(dir / "bulk_laplacian.mtx", disc.bulk_laplacian.matrix);
    write_matrix_market(dir / "surface_laplacian.mtx", disc.surface_laplacian.matrix);
    write_matrix_market(dir / "advection.mtx", disc.advection.op.matrix);
}

inline int run_mode(const CliOptions& o, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const Discretization disc = make_discretization(cfg);
    const auto dir = out_dir(o, cfg);
    if (o.dump_matrices) dump_matrices(disc, dir);

    auto reports = validation_reports(cfg, disc);
    if (!all_passed(reports)) {
        print_reports(err, reports);
        if (!o.force) {
            err << "error: structural assumptions fail; rerun with --force to run anyway\n";
            return exit_validation;
        }
        err << "warning: running with failed structural assumptions (--force)\n";
    }

    const auto& names = cfg.chemistry.species.names;
    const auto& op = cfg.output;
    RunOptions ro;
    ro.nonneg_tolerance = cfg.diagnostics.nonneg_tolerance;
    ro.norm_interval = cfg.diagnostics.norm_interval;
    ro.keep_ledger_rows = op.ledger_csv;
    SchemeConfig scheme = cfg.scheme;
    if (op.csv || op.vtk) {
        ro.on_snapshot = [&](int step, double, const BulkState& c, const SurfaceState& cs) {
            if (op.csv) {
                write_bulk_csv(dir / snapshot_name(op.prefix, "bulk", step, "csv"), disc, names, c);
                write_surface_csv(dir / snapshot_name(op.prefix, "surface", step, "csv"), disc, names, cs);
            }
            if (op.vtk) {
                write_bulk_vtk(dir / snapshot_name(op.prefix, "bulk", step, "vtk"), disc, names, c);
                write_surface_vtk(dir / snapshot_name(op.prefix, "surface", step, "vtk"), disc, names, cs);
            }
        };
    }

    const StableDtReport sdt = stable_dt(disc, cfg.chemistry, scheme.dt_safety,
                                         concentration_scale(cfg.chemistry, cfg.scenario));
    out << "stable dt " << fmt(sdt.dt) << " (" << sdt.limiting << "), dt " << fmt(scheme.dt) << ", scheme "
        << to_string(scheme.kind) << "\n";
    RunResult res = run(disc, cfg.chemistry, cfg.scenario, scheme, cfg.solver, ro);
    res.report.validators = reports;

    const auto& dg = cfg.diagnostics;
    if (dg.comparison) {
        for (int i = 0; i < cfg.chemistry.n_species(); ++i) {
            double C = 0.0;
            if (!dg.comparison_C.empty()) {
                C = dg.comparison_C[i];
            } else {
                const auto k = cfg.chemistry.sorption[i].declared_constants();
                if (!k || (*k)[1] <= 0.0) continue;
                C = (*k)[1];
            }
            res.report.comparisons.push_back(comparison_run(disc, cfg.chemistry, cfg.scenario, scheme, cfg.solver, i, C));
        }
    }

    for (const auto& w : res.report.warnings) err << "warning: " << w << "\n";
    const auto& rep = res.report;
    out << "steps " << res.steps << ", t " << fmt(res.t);
    if (scheme.kind == SchemeKind::backward_euler_newton)
        out << ", newton iterations " << res.newton_iterations << ", halvings " << res.halvings;
    out << "\n";
    out << "min bulk " << fmt(rep.min_bulk) << ", min surface " << fmt(rep.min_surface) << "\n";
    out << "ledger max step residual " << fmt(rep.ledger_max_residual) << ", cumulative "
        << fmt(rep.ledger_cumulative_residual) << ", transfer mismatch " << fmt(rep.transfer_mismatch) << "\n";
    for (std::size_t q = 0; q < rep.conserved_drift.size(); ++q)
        out << "conserved combination " << q << " drift " << fmt(rep.conserved_drift[q]) << "\n";
    if (rep.gronwall)
        out << "gronwall M " << fmt(rep.gronwall->M) << ", omega " << fmt(rep.gronwall->omega) << ", violation "
            << fmt(rep.gronwall->violation) << "\n";
    for (const auto& c : rep.comparisons)
        out << "comparison " << names[c.species] << " C " << fmt(c.C) << ": max excess " << fmt(c.max_excess)
            << (c.passed ? " pass" : " FAIL") << "\n";

    if (op.json) write_json(dir / (op.prefix + "_summary.json"), summary_json(names, rep));
    if (op.ledger_csv) write_ledger_csv(dir / (op.prefix + "_ledger.csv"), res.ledger, names);

    if (!dg.check) return exit_ok;
    std::vector<std::string> failures;
    bool signs_ok = true;
    try {
        cfg.scenario.validate(cfg.chemistry.n_species(), true);
    } catch (const ConfigError&) {
        signs_ok = false;
    }
    if (rep.first_violation && signs_ok && all_passed(reports))
        failures.push_back("negative value " + fmt(rep.first_violation->value) + " at step " +
                           std::to_string(rep.first_violation->step));
    if (rep.ledger_max_residual > dg.ledger_tolerance)
        failures.push_back("ledger step residual " + fmt(rep.ledger_max_residual) + " > " + fmt(dg.ledger_tolerance));
    if (rep.ledger_cumulative_residual > dg.cumulative_tolerance)
        failures.push_back("cumulative ledger residual " + fmt(rep.ledger_cumulative_residual) + " > " +
                           fmt(dg.cumulative_tolerance));
    if (rep.transfer_mismatch > dg.transfer_tolerance)
        failures.push_back("transfer mismatch " + fmt(rep.transfer_mismatch) + " > " + fmt(dg.transfer_tolerance));
    if (rep.blow_up) failures.push_back("blow-up detected");
    if (dg.gronwall_omega_max >= 0.0 && rep.gronwall && rep.gronwall->omega > dg.gronwall_omega_max)
        failures.push_back("gronwall omega " + fmt(rep.gronwall->omega) + " > " + fmt(dg.gronwall_omega_max));
    for (const auto& c : rep.comparisons)
        if (!c.passed) failures.push_back("comparison failed for " + names[c.species]);
    for (const auto& f : failures) err << "diagnostic failure: " << f << "\n";
    return failures.empty() ? exit_ok : exit_diagnostics;
}

inline int validate_mode(const RunConfig& cfg, std::ostream& out) {
    const Discretization disc = make_discretization(cfg);
    const auto reports = validation_reports(cfg, disc);
    print_reports(out, reports);
    const StableDtReport sdt = stable_dt(disc, cfg.chemistry, cfg.scheme.dt_safety,
                                         concentration_scale(cfg.chemistry, cfg.scenario));
    out << "stable dt " << fmt(sdt.dt) << " (advective " << fmt(sdt.advective) << ", sorption " << fmt(sdt.sorption)
        << ", reaction " << fmt(sdt.reaction) << "; limited by " << sdt.limiting << ")\n";
    return all_passed(reports) ? exit_ok : exit_validation;
}

inline void print_study(std::ostream& out, const ConvergenceStudy& s, const char* what) {
    for (std::size_t k = 0; k < s.levels.size(); ++k) {
        out << what << " " << fmt(s.levels[k].h) << "  error " << fmt(s.levels[k].error) << "  steps "
            << s.levels[k].steps;
        if (k > 0) out << "  slope " << fmt(s.pair_slopes[k - 1]);
        out << "\n";
    }
    out << "fitted slope " << fmt(s.fitted_slope) << "\n";
}

inline int converge_mode(const CliOptions& o, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto& cv = cfg.converge;
    ConvergenceStudy study;
    if (cv.kind == "spatial") {
        study = spatial_convergence(cv.spatial, cfg.solver);
        print_study(out, study, "h");
    } else {
        if (cv.dts.size() < 2) throw ConfigError(cfg.source + ": [converge] dts needs at least two steps");
        const double ref = cv.reference_dt > 0.0 ? cv.reference_dt : cv.dts.back() / 16.0;
        const Discretization disc = make_discretization(cfg);
        study = temporal_convergence(disc, cfg.chemistry, cfg.scenario, cfg.scheme, cv.dts, ref, cfg.solver);
        print_study(out, study, "dt");
    }
    Json j{{"kind", cv.kind}, {"fitted_slope", study.fitted_slope}, {"pair_slopes", study.pair_slopes}};
    Json levels = Json::array();
    for (const auto& l : study.levels) levels.push_back(Json{{"h", l.h}, {"error", l.error}, {"steps", l.steps}});
    j["levels"] = levels;
    if (cfg.output.json) write_json(out_dir(o, cfg) / (cfg.output.prefix + "_convergence.json"), j);
    if (cv.expected_slope > 0.0 && study.fitted_slope < cv.expected_slope - cv.slope_tolerance) {
        err << "diagnostic failure: fitted slope " << fmt(study.fitted_slope) << " below " << fmt(cv.expected_slope)
            << " - " << fmt(cv.slope_tolerance) << "\n";
        return exit_diagnostics;
    }
    return exit_ok;
}

inline double mean_of(const Vector& v, const std::vector<double>& w) {
    double s = 0.0, ws = 0.0;
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        s += w[k] * v[k];
        ws += w[k];
    }
    return s / ws;
}

inline int oracle_mode(const CliOptions& o, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const Discretization disc = make_discretization(cfg);
    const auto& chem = cfg.chemistry;
    const auto& sc = cfg.scenario;
    const auto& names = chem.species.names;
    const auto& bulk = disc.mesh.bulk;
    const auto& surf = disc.mesh.surface;
    double error = 0.0;

    auto need = [&](bool cond, const std::string& msg) {
        if (!cond) throw ConfigError(cfg.source + ": oracle '" + o.oracle + "': " + msg);
    };

    if (o.oracle == "henry_equilibrium") {
        need(sc.closed_pore && std::holds_alternative<ZeroVelocity>(cfg.velocity) && chem.reaction.is_zero(),
             "needs a closed pore, zero velocity and no reaction");
        const RunResult r = run(disc, chem, sc, cfg.scheme, cfg.solver);
        const double V = std::accumulate(bulk.volumes.begin(), bulk.volumes.end(), 0.0);
        const double A = std::accumulate(surf.areas.begin(), surf.areas.end(), 0.0);
        const BulkState c0 = sample_bulk(bulk, sc.bulk_initial);
        const SurfaceState cs0 = sample_surface(surf, sc.surface_initial);
        for (int i = 0; i < chem.n_species(); ++i) {
            const auto* h = std::get_if<HenryLaw>(&chem.sorption[i].variant());
            need(h != nullptr, "species '" + names[i] + "' does not use the Henry law");
            const auto eq = henry_equilibrium(V, A, h->k_ad, h->k_de, bulk_mass(disc, c0[i]) + surface_mass(disc, cs0[i]));
            const double e = std::max((r.bulk[i].array() - eq.c).abs().maxCoeff(),
                                      (r.surface[i].array() - eq.cs).abs().maxCoeff()) /
                             std::max(std::abs(eq.c) + std::abs(eq.cs), 1e-300);
            out << names[i] << ": c_eq " << fmt(eq.c) << ", cs_eq " << fmt(eq.cs) << ", max relative deviation " << fmt(e)
                << "\n";
            error = std::max(error, e);
        }
    } else if (o.oracle == "wellmixed") {
        WellMixedSpec spec;
        spec.volume = std::accumulate(bulk.volumes.begin(), bulk.volumes.end(), 0.0);
        spec.wall_area = std::accumulate(surf.areas.begin(), surf.areas.end(), 0.0);
        spec.inlet_area = inlet_area(cfg.geometry);
        spec.throughflow = validate_avel(cfg.velocity, bulk).outflow_rate;
        spec.g_in = sc.g_in;
        for (int i = 0; i < chem.n_species(); ++i) {
            need(sc.bulk_initial[i].kind == ProfileKind::constant && sc.surface_initial[i].kind == ProfileKind::constant,
                 "needs constant initial data");
            spec.c0.push_back(sc.bulk_initial[i].mean);
            spec.cs0.push_back(sc.surface_initial[i].mean);
        }
        spec.t_end = sc.t_end;
        spec.fine_dt = cfg.oracle.fine_dt;
        const int n = std::max(2, cfg.oracle.samples);
        std::vector<double> times;
        for (int s = 0; s < n; ++s) times.push_back(sc.t_end * s / (n - 1));
        std::vector<std::vector<double>> cmean, smean;
        std::vector<double> recorded;
        RunOptions ro;
        ro.on_step = [&](int, double t, const StepResult& st) {
            for (double target : times)
                if (std::abs(t - target) < 1e-9 * sc.t_end) {
                    recorded.push_back(t);
                    std::vector<double> a, b;
                    for (int i = 0; i < chem.n_species(); ++i) {
                        a.push_back(mean_of(st.bulk[i], bulk.volumes));
                        b.push_back(mean_of(st.surface[i], surf.areas));
                    }
                    cmean.push_back(a);
                    smean.push_back(b);
                }
        };
        run(disc, chem, sc, cfg.scheme, cfg.solver, ro);
        const auto ode = wellmixed_ode(spec, chem, recorded);
        double scale = 1e-300;
        for (const auto& s : ode)
            for (int i = 0; i < chem.n_species(); ++i) scale = std::max({scale, std::abs(s.c[i]), std::abs(s.cs[i])});
        for (std::size_t s = 0; s < ode.size(); ++s) {
            double e = 0.0;
            for (int i = 0; i < chem.n_species(); ++i)
                e = std::max({e, std::abs(cmean[s][i] - ode[s].c[i]), std::abs(smean[s][i] - ode[s].cs[i])});
            out << "t " << fmt(ode[s].t) << "  deviation " << fmt(e / scale) << "\n";
            error = std::max(error, e / scale);
        }
    } else if (o.oracle == "bulk_mode" || o.oracle == "surface_mode") {
        need(sc.closed_pore && std::holds_alternative<ZeroVelocity>(cfg.velocity) && chem.reaction.is_zero(),
             "needs a closed pore, zero velocity and no reaction");
        for (const auto& s : chem.sorption) need(s.is_none(), "needs law = none for every species");
        const RunResult r = run(disc, chem, sc, cfg.scheme, cfg.solver);
        for (int i = 0; i < chem.n_species(); ++i) {
            double e = 0.0;
            if (o.oracle == "bulk_mode") {
                const Profile& p = sc.bulk_initial[i];
                need(p.kind == ProfileKind::constant || p.kind == ProfileKind::axial_cosine || p.kind == ProfileKind::z_cosine,
                     "bulk initial data must be an axial cosine");
                const double decay = bulk_mode_decay(p.mode, chem.species.d[i], cfg.geometry.h, sc.t_end);
                for (int c = 0; c < bulk.n_cells(); ++c) {
                    const auto& x = bulk.centers[c];
                    const double exact = p.mean + (p.at(x.r, x.phi, x.z, cfg.geometry.R, cfg.geometry.h) - p.mean) * decay;
                    e = std::max(e, std::abs(r.bulk[i][c] - exact));
                }
                e /= std::max(std::abs(p.amplitude), 1e-300);
            } else {
                const Profile& p = sc.surface_initial[i];
                const int m = p.kind == ProfileKind::phi_cosine ? p.mode : 0;
                const int k = p.kind == ProfileKind::axial_cosine || p.kind == ProfileKind::z_cosine ? p.mode : 0;
                need(p.kind != ProfileKind::radial_parabola, "surface initial data must be a cosine mode");
                const double decay =
                    surface_mode_decay(m, k, chem.species.d_surface[i], cfg.geometry.R, cfg.geometry.h, sc.t_end);
                for (int q = 0; q < surf.n_patches(); ++q) {
                    const double v = p.at(cfg.geometry.R, surf.phi_centers[q], surf.z_centers[q], cfg.geometry.R,
                                          cfg.geometry.h);
                    e = std::max(e, std::abs(r.surface[i][q] - (p.mean + (v - p.mean) * decay)));
                }
                e /= std::max(std::abs(p.amplitude), 1e-300);
            }
            out << names[i] << ": max deviation / amplitude " << fmt(e) << "\n";
            error = std::max(error, e);
        }
    } else {
        throw ConfigError("unknown oracle '" + o.oracle +
                          "' (expected henry_equilibrium | wellmixed | bulk_mode | surface_mode)");
    }
    out << "oracle " << o.oracle << ": max deviation " << fmt(error) << "\n";
    if (cfg.oracle.tolerance > 0.0 && !(error <= cfg.oracle.tolerance)) {
        err << "diagnostic failure: deviation " << fmt(error) << " > tolerance " << fmt(cfg.oracle.tolerance) << "\n";
        return exit_diagnostics;
    }
    return exit_ok;
}

} // namespace detail

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"porecat: transport, sorption and surface reaction in a cylindrical pore"};
    CliOptions o;
    app.add_option("-c,--config", o.config, "INI file or bundled scenario name")->required();
    app.add_option("-o,--out-dir", o.out_dir, "output directory (overrides [output] directory)");
    app.add_option("--override", o.overrides, "section.key=value, repeatable");
    app.add_option("-m,--mode", o.mode, "run | validate | converge | oracle")
        ->check(CLI::IsMember({"run", "validate", "converge", "oracle"}));
    app.add_option("--oracle", o.oracle, "henry_equilibrium | wellmixed | bulk_mode | surface_mode");
    app.add_flag("--force", o.force, "run even when structural assumptions fail");
    app.add_flag("--dump-matrices", o.dump_matrices, "write the assembled operators in Matrix Market format");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        const RunConfig cfg = load_config(o.config, o.overrides);
        if (o.mode == "validate") return detail::validate_mode(cfg, out);
        if (o.mode == "converge") return detail::converge_mode(o, cfg, out, err);
        if (o.mode == "oracle") {
            if (o.oracle.empty()) throw ConfigError("--mode oracle needs --oracle NAME");
            return detail::oracle_mode(o, cfg, out, err);
        }
        return detail::run_mode(o, cfg, out, err);
    } catch (const SolverError& e) {
        err << "solver error: " << e.what() << "\n";
        return exit_solver;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        return exit_config;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << "\n";
        return exit_config;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config;
    }
}

} // namespace porecat
