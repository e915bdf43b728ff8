#pragma once

// Drives a Stepper to the horizon with the monitors attached.

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "porecat/diagnostics.hpp"
#include "porecat/discretization.hpp"
#include "porecat/model/validators.hpp"
#include "porecat/oracles.hpp"
#include "porecat/timestepping.hpp"

namespace porecat {

/// Data of the linear problem taken from a manufactured solution; one
/// species, bulk and wall decoupled.
class LinearProblemTerms : public SourceTerms {
public:
    LinearProblemTerms(const Discretization& disc, ManufacturedSolution sol) : disc_(disc), sol_(std::move(sol)) {}

    int n_species() const override { return 1; }
    bool wall_feeds_surface() const override { return false; }

    void evaluate(double t, const BulkState&, const SurfaceState&, std::vector<SpeciesFluxes>& out) const override {
        const auto& bulk = disc_.mesh.bulk;
        const auto& surf = disc_.mesh.surface;
        out.assign(1, zero_fluxes(disc_));
        auto& f = out[0];
        for (int c = 0; c < bulk.n_cells(); ++c) {
            const auto& x = bulk.centers[c];
            f.bulk_source[c] = bulk.volumes[c] * sol_.f(t, x.r, x.phi, x.z);
        }
        for (int p = 0; p < surf.n_patches(); ++p) {
            f.surface_source[p] = surf.areas[p] * sol_.f_surface(t, surf.phi_centers[p], surf.z_centers[p]);
            f.lateral[p] = surf.areas[p] * sol_.g_wall(t, surf.phi_centers[p], surf.z_centers[p]);
        }
        for (std::size_t q = 0; q < bulk.inflow_faces.size(); ++q) {
            const auto& face = bulk.faces[bulk.inflow_faces[q]];
            f.inlet[static_cast<Eigen::Index>(q)] = face.area * sol_.g_in(t, face.center.r, face.center.phi);
        }
        for (std::size_t q = 0; q < bulk.outflow_faces.size(); ++q) {
            const auto& face = bulk.faces[bulk.outflow_faces[q]];
            f.outlet[static_cast<Eigen::Index>(q)] = face.area * sol_.g_out(t, face.center.r, face.center.phi);
        }
    }

    const ManufacturedSolution& solution() const { return sol_; }

private:
    const Discretization& disc_;
    ManufacturedSolution sol_;
};

inline BulkState sample_exact_bulk(const Discretization& disc, const ManufacturedSolution& s, double t) {
    Vector v(disc.n_cells());
    for (int c = 0; c < disc.n_cells(); ++c) {
        const auto& x = disc.mesh.bulk.centers[c];
        v[c] = s.bulk(t, x.r, x.phi, x.z);
    }
    return {v};
}

inline SurfaceState sample_exact_surface(const Discretization& disc, const ManufacturedSolution& s, double t) {
    const auto& surf = disc.mesh.surface;
    Vector v(surf.n_patches());
    for (int p = 0; p < surf.n_patches(); ++p) v[p] = s.surface(t, surf.phi_centers[p], surf.z_centers[p]);
    return {v};
}

struct MonitorReport {
    double min_bulk = std::numeric_limits<double>::infinity();
    double min_surface = std::numeric_limits<double>::infinity();
    std::optional<NegativityFlag> first_violation;
    std::vector<NormSample> norms;
    std::optional<GronwallFit> gronwall;  ///< fit of the max norm; absent for identically zero runs
    bool blow_up = false;
    std::vector<ComparisonVerdict> comparisons;
    std::vector<ValidationReport> validators;
    double ledger_max_residual = 0.0;
    double ledger_cumulative_residual = 0.0;
    double transfer_mismatch = 0.0;
    std::vector<double> conserved_drift;
    std::vector<std::string> warnings;
};

struct RunOptions {
    double nonneg_tolerance = 1e-12;
    int norm_interval = 1;
    bool keep_ledger_rows = false;
    std::vector<std::vector<double>> conserved;
    /// Called at step 0, every snapshot_interval steps, and at the end.
    std::function<void(int step, double t, const BulkState&, const SurfaceState&)> on_snapshot;
    std::function<void(int step, double t, const StepResult&)> on_step;
};

struct RunResult {
    BulkState bulk;
    SurfaceState surface;
    double t = 0.0;
    int steps = 0;
    MassLedger ledger;
    MonitorReport report;
    int newton_iterations = 0;
    int halvings = 0;
};

/// Advances (c0, cs0) to scheme.t_end with the given source terms.
inline RunResult run_terms(const Discretization& disc, const SpeciesSet& species, const SourceTerms& terms,
                           BulkState c0, SurfaceState cs0, const SchemeConfig& scheme, const LinearSolverConfig& solver,
                           const RunOptions& opts = {}) {
    scheme.validate();
    if (scheme.dt < 1e-14 * scheme.t_end)
        throw SolverError("time step underflow: dt = " + std::to_string(scheme.dt) + " < 1e-14 t_end");
    Stepper stepper(disc, species, terms, scheme, solver);
    RunResult res;
    res.bulk = std::move(c0);
    res.surface = std::move(cs0);
    res.ledger = MassLedger(disc, res.bulk, res.surface, opts.conserved, opts.keep_ledger_rows);
    res.report.warnings = disc.advection.warnings;

    auto monitor = [&](int step) {
        const auto nn = nonnegativity_monitor(res.bulk, res.surface, step, opts.nonneg_tolerance);
        res.report.min_bulk = std::min(res.report.min_bulk, nn.min_bulk);
        res.report.min_surface = std::min(res.report.min_surface, nn.min_surface);
        if (nn.flag && !res.report.first_violation) res.report.first_violation = nn.flag;
    };
    const int norm_every = std::max(1, opts.norm_interval);
    monitor(0);
    res.report.norms.push_back(norms(disc, res.bulk, res.surface, 0.0));
    const double linf0 = std::max(1.0, res.report.norms.back().linf());
    if (opts.on_snapshot) opts.on_snapshot(0, 0.0, res.bulk, res.surface);

    const double t_end = scheme.t_end;
    while (res.t < t_end) {
        const bool final_step = t_end - res.t < scheme.dt * (1.0 + 1e-10);
        const double dt = final_step ? t_end - res.t : scheme.dt;
        StepResult sr = stepper.step(res.bulk, res.surface, res.t, dt);
        ++res.steps;
        res.t = final_step ? t_end : res.steps * scheme.dt;
        res.newton_iterations += sr.newton_iterations;
        res.halvings += sr.halvings;
        if (opts.on_step) opts.on_step(res.steps, res.t, sr);
        res.bulk = std::move(sr.bulk);
        res.surface = std::move(sr.surface);
        res.ledger.update(sr.fluxes, res.bulk, res.surface);
        monitor(res.steps);
        const bool last = final_step;
        if (res.steps % norm_every == 0 || last) {
            res.report.norms.push_back(norms(disc, res.bulk, res.surface, res.t));
            const double l = res.report.norms.back().linf();
            if (!std::isfinite(l) || l > 1e12 * linf0) res.report.blow_up = true;
        }
        if (opts.on_snapshot && ((scheme.snapshot_interval > 0 && res.steps % scheme.snapshot_interval == 0) || last))
            opts.on_snapshot(res.steps, res.t, res.bulk, res.surface);
    }

    std::vector<double> ts, ys;
    bool positive = true;
    for (const auto& s : res.report.norms) {
        ts.push_back(s.t);
        ys.push_back(s.linf());
        positive = positive && s.linf() > 0.0;
    }
    if (positive && ts.size() >= 3) res.report.gronwall = gronwall_fit(ts, ys);
    res.report.ledger_max_residual = res.ledger.max_step_residual();
    res.report.ledger_cumulative_residual = res.ledger.max_cumulative_residual();
    res.report.transfer_mismatch = res.ledger.max_transfer_mismatch();
    res.report.conserved_drift = res.ledger.conserved_drift();
    return res;
}

/// Concentration range used to sample rates for the stable step estimate.
inline double concentration_scale(const Chemistry& chem, const ScenarioSpec& sc) {
    double s = 0.0;
    for (int i = 0; i < chem.n_species(); ++i) {
        double ratio = 1.0;
        if (auto k = chem.sorption[i].declared_constants(); k && (*k)[1] > 0.0) ratio = std::max(1.0, (*k)[0] / (*k)[1]);
        s = std::max({s, std::abs(sc.bulk_initial[i].maximum()) * ratio, std::abs(sc.surface_initial[i].maximum())});
    }
    return s > 0.0 ? s : 1.0;
}

/// Checks the configured step against the explicit stability bound.
inline StableDtReport check_stable_dt(const Discretization& disc, const Chemistry& chem, const ScenarioSpec& sc,
                                      const SchemeConfig& scheme) {
    const StableDtReport rep = stable_dt(disc, chem, scheme.dt_safety, concentration_scale(chem, sc));
    if (scheme.is_imex() && scheme.enforce_stable_dt && scheme.dt > rep.dt) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "dt = %.6g exceeds the stable step %.6g (limited by %s); lower dt or disable enforcement",
                      scheme.dt, rep.dt, rep.limiting.c_str());
        throw ConfigError(buf);
    }
    return rep;
}

/// Runs the sorption/reaction model from the scenario's initial data.
inline RunResult run(const Discretization& disc, const Chemistry& chem, const ScenarioSpec& scenario,
                     const SchemeConfig& scheme, const LinearSolverConfig& solver, RunOptions opts = {}) {
    chem.validate();
    scenario.validate(chem.n_species(), false);
    check_stable_dt(disc, chem, scenario, scheme);
    if (opts.conserved.empty()) opts.conserved = chem.conserved;
    CatalysisTerms terms(disc, chem, scenario.g_in);
    return run_terms(disc, chem.species, terms, sample_bulk(disc.mesh.bulk, scenario.bulk_initial),
                     sample_surface(disc.mesh.surface, scenario.surface_initial), scheme, solver, opts);
}

} // namespace porecat
