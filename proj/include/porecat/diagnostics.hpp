#pragma once

// Runtime checks: mass ledger, nonnegativity monitor, norm series,
// exponential envelope fit, and the majorant (comparison) runs.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "porecat/discretization.hpp"
#include "porecat/errors.hpp"
#include "porecat/model/scenario.hpp"
#include "porecat/model/species.hpp"
#include "porecat/model/validators.hpp"
#include "porecat/summation.hpp"
#include "porecat/timestepping.hpp"

namespace porecat {

inline double bulk_mass(const Discretization& disc, const Vector& c) {
    return integrate(disc.mesh.bulk, std::span<const double>(c.data(), static_cast<std::size_t>(c.size())));
}

inline double surface_mass(const Discretization& disc, const Vector& cs) {
    return integrate(disc.mesh.surface, std::span<const double>(cs.data(), static_cast<std::size_t>(cs.size())));
}

struct LedgerRow {
    int step = 0;
    double t = 0.0;
    std::vector<double> bulk_mass;
    std::vector<double> surface_mass;
    std::vector<double> inflow;    ///< cumulative
    std::vector<double> outflow;   ///< cumulative
    std::vector<double> reaction;  ///< cumulative sources
    std::vector<double> residual;  ///< this step, relative
};

/// Discrete mass accounting per species, fed with the step fluxes the
/// stepper actually applied.
class MassLedger {
public:
    MassLedger() = default;

    MassLedger(const Discretization& disc, const BulkState& c, const SurfaceState& cs,
               std::vector<std::vector<double>> conserved = {}, bool keep_rows = true)
        : disc_(&disc), conserved_weights_(std::move(conserved)), keep_rows_(keep_rows) {
        const std::size_t n = c.size();
        PORECAT_REQUIRE(cs.size() == n, ConfigError, "ledger: bulk and surface species counts differ");
        species_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto& s = species_[i];
            s.bulk0 = s.bulk = bulk_mass(disc, c[i]);
            s.surface0 = s.surface = surface_mass(disc, cs[i]);
        }
        for (const auto& w : conserved_weights_) {
            PORECAT_REQUIRE(w.size() == n, ConfigError, "ledger: conserved weights need one entry per species");
            conserved_initial_.push_back(combination(w));
            conserved_drift_.push_back(0.0);
        }
        if (keep_rows_) push_row(0, 0.0, std::vector<double>(n, 0.0));
    }

    int n_species() const { return static_cast<int>(species_.size()); }

    /// Books one step: new masses against dt times the applied rates.
    void update(const StepFluxes& f, const BulkState& c, const SurfaceState& cs) {
        PORECAT_REQUIRE(disc_ != nullptr, ConfigError, "ledger: not initialised");
        PORECAT_REQUIRE(f.species.size() == species_.size(), ConfigError, "ledger: flux species count mismatch");
        ++steps_;
        std::vector<double> rel(species_.size(), 0.0);
        for (std::size_t i = 0; i < species_.size(); ++i) {
            auto& s = species_[i];
            const auto& r = f.species[i];
            const double old_total = s.bulk + s.surface;
            s.bulk = bulk_mass(*disc_, c[i]);
            s.surface = surface_mass(*disc_, cs[i]);
            const double new_total = s.bulk + s.surface;

            CompensatedSum expected;
            expected.add(f.dt * r.inflow);
            expected.add(-f.dt * r.outflow);
            expected.add(f.dt * r.source);
            expected.add(-f.dt * r.bulk_to_wall);
            expected.add(f.dt * r.wall_from_bulk);
            CompensatedSum change;
            change.add(new_total);
            change.add(-old_total);
            const double residual = change.value() - expected.value();
            const double throughput = f.dt * (std::abs(r.inflow) + std::abs(r.outflow) + std::abs(r.source) +
                                              std::abs(r.bulk_to_wall) + std::abs(r.wall_from_bulk));
            rel[i] = relative(residual, std::max({std::abs(new_total), std::abs(old_total), throughput}));
            s.max_step_residual = std::max(s.max_step_residual, rel[i]);

            s.inflow.add(f.dt * r.inflow);
            s.outflow.add(f.dt * r.outflow);
            s.reaction.add(f.dt * r.source);
            s.to_wall.add(f.dt * r.bulk_to_wall);
            s.from_bulk.add(f.dt * r.wall_from_bulk);
            if (r.wall_from_bulk != 0.0 || r.bulk_to_wall != 0.0) {
                const double mismatch = f.dt * r.bulk_to_wall - f.dt * r.wall_from_bulk;
                s.max_transfer_mismatch = std::max(
                    s.max_transfer_mismatch, relative(mismatch, std::max(std::abs(new_total), std::abs(old_total))));
            }
            s.max_cumulative_residual = std::max(s.max_cumulative_residual, cumulative_residual(i));
        }
        for (std::size_t k = 0; k < conserved_weights_.size(); ++k) {
            const auto& w = conserved_weights_[k];
            const double now = combination(w);
            double throughput = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i)
                throughput += std::abs(w[i]) * (std::abs(species_[i].inflow.value()) + std::abs(species_[i].outflow.value()));
            conserved_drift_[k] = std::max(
                conserved_drift_[k],
                relative(now - conserved_initial_[k], std::max({std::abs(conserved_initial_[k]), std::abs(now), throughput})));
        }
        if (keep_rows_) push_row(steps_, f.t + f.dt, rel);
    }

    double bulk(int i) const { return species_[i].bulk; }
    double surface(int i) const { return species_[i].surface; }
    double total(int i) const { return species_[i].bulk + species_[i].surface; }
    double initial_total(int i) const { return species_[i].bulk0 + species_[i].surface0; }
    double cumulative_inflow(int i) const { return species_[i].inflow.value(); }
    double cumulative_outflow(int i) const { return species_[i].outflow.value(); }
    double cumulative_reaction(int i) const { return species_[i].reaction.value(); }

    /// Largest per-step residual, relative to the species' mass or step
    /// throughput, whichever is larger.
    double max_step_residual() const {
        double m = 0.0;
        for (const auto& s : species_) m = std::max(m, s.max_step_residual);
        return m;
    }
    double max_cumulative_residual() const {
        double m = 0.0;
        for (const auto& s : species_) m = std::max(m, s.max_cumulative_residual);
        return m;
    }
    /// Largest per-step |bulk loss to the wall - surface gain from the bulk|
    /// relative to the species' mass.
    double max_transfer_mismatch() const {
        double m = 0.0;
        for (const auto& s : species_) m = std::max(m, s.max_transfer_mismatch);
        return m;
    }
    /// Largest relative drift of each conserved combination.
    const std::vector<double>& conserved_drift() const { return conserved_drift_; }
    const std::vector<std::vector<double>>& conserved_weights() const { return conserved_weights_; }
    const std::vector<LedgerRow>& rows() const { return rows_; }
    int steps() const { return steps_; }

private:
    struct Species {
        double bulk0 = 0.0, surface0 = 0.0, bulk = 0.0, surface = 0.0;
        CompensatedSum inflow, outflow, reaction, to_wall, from_bulk;
        double max_step_residual = 0.0, max_cumulative_residual = 0.0, max_transfer_mismatch = 0.0;
    };

    static double relative(double v, double scale) {
        if (v == 0.0) return 0.0;
        return std::abs(v) / std::max(scale, std::numeric_limits<double>::min());
    }

    double cumulative_residual(std::size_t i) const {
        const auto& s = species_[i];
        CompensatedSum r;
        r.add(s.bulk + s.surface);
        r.add(-(s.bulk0 + s.surface0));
        r.add(-s.inflow.value());
        r.add(s.outflow.value());
        r.add(-s.reaction.value());
        r.add(s.to_wall.value());
        r.add(-s.from_bulk.value());
        const double scale = std::max({std::abs(s.bulk0 + s.surface0), std::abs(s.bulk + s.surface),
                                       std::abs(s.inflow.value()) + std::abs(s.outflow.value()) +
                                           std::abs(s.reaction.value())});
        return relative(r.value(), scale);
    }

    /// Weighted total mass net of what crossed the inlet and outlet so far.
    double combination(const std::vector<double>& w) const {
        CompensatedSum s;
        for (std::size_t i = 0; i < w.size(); ++i) {
            s.add(w[i] * species_[i].bulk);
            s.add(w[i] * species_[i].surface);
            s.add(-w[i] * species_[i].inflow.value());
            s.add(w[i] * species_[i].outflow.value());
        }
        return s.value();
    }

    void push_row(int step, double t, std::vector<double> rel) {
        LedgerRow row;
        row.step = step;
        row.t = t;
        for (const auto& s : species_) {
            row.bulk_mass.push_back(s.bulk);
            row.surface_mass.push_back(s.surface);
            row.inflow.push_back(s.inflow.value());
            row.outflow.push_back(s.outflow.value());
            row.reaction.push_back(s.reaction.value());
        }
        row.residual = std::move(rel);
        rows_.push_back(std::move(row));
    }

    const Discretization* disc_ = nullptr;
    std::vector<Species> species_;
    std::vector<std::vector<double>> conserved_weights_;
    std::vector<double> conserved_initial_, conserved_drift_;
    bool keep_rows_ = true;
    std::vector<LedgerRow> rows_;
    int steps_ = 0;
};

inline void update_ledger(MassLedger& ledger, const StepFluxes& f, const BulkState& c, const SurfaceState& cs) {
    ledger.update(f, c, cs);
}

struct NegativityFlag {
    int step = 0;
    int species = 0;
    int index = 0;
    bool surface = false;
    double value = 0.0;
};

struct NonnegativityResult {
    double min_bulk = std::numeric_limits<double>::infinity();
    double min_surface = std::numeric_limits<double>::infinity();
    std::optional<NegativityFlag> flag;  ///< most negative entry below -tolerance
};

inline NonnegativityResult nonnegativity_monitor(const BulkState& c, const SurfaceState& cs, int step = 0,
                                                 double tolerance = 1e-12) {
    NonnegativityResult res;
    auto scan = [&](const std::vector<Vector>& st, bool surface, double& min_out) {
        for (std::size_t i = 0; i < st.size(); ++i) {
            for (Eigen::Index k = 0; k < st[i].size(); ++k) {
                const double v = st[i][k];
                min_out = std::min(min_out, v);
                if (v < -tolerance && (!res.flag || v < res.flag->value))
                    res.flag = NegativityFlag{step, static_cast<int>(i), static_cast<int>(k), surface, v};
            }
        }
    };
    scan(c, false, res.min_bulk);
    scan(cs, true, res.min_surface);
    return res;
}

struct NormSample {
    double t = 0.0;
    double bulk_l2 = 0.0;
    double bulk_linf = 0.0;
    double surface_l2 = 0.0;
    double surface_linf = 0.0;

    double linf() const { return std::max(bulk_linf, surface_linf); }
};

/// Volume/area-weighted L2 and max norms, taken over all species together.
inline NormSample norms(const Discretization& disc, const BulkState& c, const SurfaceState& cs, double t) {
    NormSample s;
    s.t = t;
    CompensatedSum b2, s2;
    for (const auto& v : c) {
        for (Eigen::Index k = 0; k < v.size(); ++k) b2.add(disc.mesh.bulk.volumes[k] * v[k] * v[k]);
        if (v.size()) s.bulk_linf = std::max(s.bulk_linf, v.cwiseAbs().maxCoeff());
    }
    for (const auto& v : cs) {
        for (Eigen::Index k = 0; k < v.size(); ++k) s2.add(disc.mesh.surface.areas[k] * v[k] * v[k]);
        if (v.size()) s.surface_linf = std::max(s.surface_linf, v.cwiseAbs().maxCoeff());
    }
    s.bulk_l2 = std::sqrt(b2.value());
    s.surface_l2 = std::sqrt(s2.value());
    return s;
}

struct GronwallFit {
    double M = 0.0;
    double omega = 0.0;
    /// max_t (y(t) / (M e^{omega t}) - 1); positive values are envelope
    /// violations.
    double violation = 0.0;

    bool within(double tolerance = 1e-3) const { return violation <= tolerance; }
};

/// Least-squares fit of log y against t.
inline GronwallFit gronwall_fit(std::span<const double> t, std::span<const double> y) {
    PORECAT_REQUIRE(t.size() == y.size(), ConfigError, "gronwall_fit: t and y differ in length");
    PORECAT_REQUIRE(t.size() >= 3, ConfigError, "gronwall_fit: need at least 3 samples");
    const double n = static_cast<double>(t.size());
    CompensatedSum st, sl;
    for (std::size_t k = 0; k < t.size(); ++k) {
        PORECAT_REQUIRE(y[k] > 0.0 && std::isfinite(y[k]), ConfigError,
                        "gronwall_fit: series values must be positive (sample " + std::to_string(k) + ")");
        st.add(t[k]);
        sl.add(std::log(y[k]));
    }
    const double tm = st.value() / n, lm = sl.value() / n;
    CompensatedSum sxy, sxx;
    for (std::size_t k = 0; k < t.size(); ++k) {
        sxy.add((t[k] - tm) * (std::log(y[k]) - lm));
        sxx.add((t[k] - tm) * (t[k] - tm));
    }
    GronwallFit g;
    g.omega = sxx.value() > 0.0 ? sxy.value() / sxx.value() : 0.0;
    g.M = std::exp(lm - g.omega * tm);
    g.violation = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < t.size(); ++k) g.violation = std::max(g.violation, y[k] / (g.M * std::exp(g.omega * t[k])) - 1.0);
    return g;
}

struct ComparisonVerdict {
    int species = 0;
    double C = 0.0;
    double max_excess = -std::numeric_limits<double>::infinity();  ///< max over cells and steps of c_i - z_i
    int worst_step = 0;
    int worst_cell = -1;
    bool passed = false;
};

/// The linear majorant problem for one species: same bulk operators and
/// inflow, lateral flux -C cs with cs taken from the nonlinear run.
class MajorantTerms : public SourceTerms {
public:
    MajorantTerms(const Discretization& disc, double C, double g_in) : disc_(disc), C_(C), g_in_(g_in) {}
    int n_species() const override { return 1; }
    bool wall_feeds_surface() const override { return false; }
    bool evolves_surface() const override { return false; }
    void evaluate(double, const BulkState&, const SurfaceState& cs, std::vector<SpeciesFluxes>& out) const override {
        out.assign(1, zero_fluxes(disc_));
        const auto& areas = disc_.mesh.surface.areas;
        for (int p = 0; p < disc_.n_patches(); ++p) out[0].lateral[p] = -C_ * cs[0][p] * areas[p];
        out[0].inlet = inflow_flux(g_in_, disc_.mesh.bulk);
    }

private:
    const Discretization& disc_;
    double C_;
    double g_in_;
};

/// Runs the nonlinear model and, in lockstep, the majorant z_i fed with the
/// recorded surface concentration; compares c_i <= z_i cell by cell.
inline ComparisonVerdict comparison_run(const Discretization& disc, const Chemistry& chem, const ScenarioSpec& scenario,
                                        const SchemeConfig& scheme, const LinearSolverConfig& solver, int species,
                                        double C, double tolerance = 1e-10) {
    PORECAT_REQUIRE(species >= 0 && species < chem.n_species(), ConfigError, "comparison_run: species out of range");
    PORECAT_REQUIRE(scheme.kind != SchemeKind::imex_cn, ConfigError,
                    "comparison_run: needs a monotone scheme (imex_euler or backward_euler_newton)");
    const auto& bulk_mesh = disc.mesh.bulk;
    const auto& surf_mesh = disc.mesh.surface;
    BulkState c = sample_bulk(bulk_mesh, scenario.bulk_initial);
    SurfaceState cs = sample_surface(surf_mesh, scenario.surface_initial);
    PORECAT_REQUIRE(static_cast<int>(c.size()) == chem.n_species(), ConfigError,
                    "comparison_run: scenario and chemistry disagree on the species count");

    CatalysisTerms terms(disc, chem, scenario.g_in);
    Stepper nonlinear(disc, chem.species, terms, scheme, solver);

    SpeciesSet one;
    one.names = {chem.species.names[species]};
    one.d = {chem.species.d[species]};
    one.d_surface = {chem.species.d_surface[species]};
    MajorantTerms major_terms(disc, C, scenario.g_in[species]);
    SchemeConfig major_scheme = scheme;
    major_scheme.kind = SchemeKind::imex_euler;
    Stepper major(disc, one, major_terms, major_scheme, solver);

    // Implicit majorant for the Newton scheme: (V + dt (d K + Adv)) z' = V z + dt (C A cs' - inlet).
    std::unique_ptr<KrylovSolver> implicit;
    double implicit_dt = -1.0;

    ComparisonVerdict v;
    v.species = species;
    v.C = C;
    Vector z = c[species];
    double t = 0.0;
    int step = 0;
    const double t_end = scenario.t_end;
    while (t < t_end * (1.0 - 1e-12)) {
        const double dt = std::min(scheme.dt, t_end - t);
        StepResult nl = nonlinear.step(c, cs, t, dt);
        if (scheme.kind == SchemeKind::backward_euler_newton) {
            if (!implicit || implicit_dt != dt) {
                SparseMatrix a = dt * (one.d[0] * disc.bulk_laplacian.matrix) + dt * disc.advection.op.matrix;
                for (Eigen::Index k = 0; k < a.rows(); ++k) a.coeffRef(k, k) += disc.bulk_laplacian.mass[k];
                a.makeCompressed();
                LinearSolverConfig s = solver;
                s.method = KrylovMethod::bicgstab;
                implicit = std::make_unique<KrylovSolver>(std::move(a), s);
                implicit_dt = dt;
            }
            Vector b = disc.bulk_laplacian.mass.cwiseProduct(z);
            const Vector inlet = inflow_flux(scenario.g_in[species], bulk_mesh);
            for (std::size_t q = 0; q < bulk_mesh.inflow_faces.size(); ++q)
                b[bulk_mesh.faces[bulk_mesh.inflow_faces[q]].owner] -= dt * inlet[static_cast<Eigen::Index>(q)];
            for (const auto& pr : disc.mesh.trace.pairs)
                b[pr.cell] += dt * C * nl.surface[species][pr.patch] * surf_mesh.areas[pr.patch];
            z = implicit->solve(b, z);
        } else {
            StepResult zs = major.step({z}, {cs[species]}, t, dt);
            z = zs.bulk[0];
        }
        c = std::move(nl.bulk);
        cs = std::move(nl.surface);
        t += dt;
        ++step;
        for (Eigen::Index k = 0; k < z.size(); ++k) {
            const double e = c[species][k] - z[k];
            if (e > v.max_excess) {
                v.max_excess = e;
                v.worst_step = step;
                v.worst_cell = static_cast<int>(k);
            }
        }
    }
    v.passed = v.max_excess <= tolerance;
    return v;
}

struct SurfaceComparisonVerdict {
    Verdict verdict = Verdict::not_applicable;
    double min_value = std::numeric_limits<double>::infinity();
    std::string detail;
};

/// Implicit Euler for A v' + dS K v = A f on the wall, from v0. The sign
/// conclusion only applies when f >= 0 and v0 >= 0.
inline SurfaceComparisonVerdict surface_comparison(const SurfaceMesh& surf, double dS, const Vector& f, const Vector& v0,
                                                   double dt, int steps, const LinearSolverConfig& solver = {},
                                                   double tolerance = 1e-12) {
    PORECAT_REQUIRE(f.size() == surf.n_patches() && v0.size() == surf.n_patches(), ConfigError,
                    "surface_comparison: data size does not match the surface mesh");
    PORECAT_REQUIRE(dt > 0.0 && steps > 0, ConfigError, "surface_comparison: dt and steps must be positive");
    const LinearOperator L = assemble_surface_laplacian(surf, dS);
    SparseMatrix a = dt * L.matrix;
    for (Eigen::Index k = 0; k < a.rows(); ++k) a.coeffRef(k, k) += L.mass[k];
    a.makeCompressed();
    KrylovSolver ks(std::move(a), solver);
    Vector v = v0;
    SurfaceComparisonVerdict res;
    res.min_value = v.minCoeff();
    const Vector load = dt * L.mass.cwiseProduct(f);
    for (int s = 0; s < steps; ++s) {
        v = ks.solve(L.mass.cwiseProduct(v) + load, v);
        res.min_value = std::min(res.min_value, v.minCoeff());
    }
    const bool applicable = f.minCoeff() >= 0.0 && v0.minCoeff() >= 0.0;
    if (!applicable) {
        res.verdict = Verdict::not_applicable;
        res.detail = "data not non-negative; minimum reached " + std::to_string(res.min_value);
    } else {
        res.verdict = res.min_value >= -tolerance ? Verdict::pass : Verdict::fail;
        res.detail = "minimum " + std::to_string(res.min_value);
    }
    return res;
}

} // namespace porecat
