#pragma once

// Time integration of the coupled bulk/wall system: IMEX Euler, a two-stage
// IMEX Crank-Nicolson/Heun scheme, and fully implicit Euler with Newton.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "porecat/discretization.hpp"
#include "porecat/errors.hpp"
#include "porecat/model/species.hpp"
#include "porecat/solvers.hpp"
#include "porecat/summation.hpp"

namespace porecat {

enum class SchemeKind { imex_euler, imex_cn, backward_euler_newton };

inline SchemeKind parse_scheme_kind(const std::string& s) {
    if (s == "imex_euler") return SchemeKind::imex_euler;
    if (s == "imex_cn") return SchemeKind::imex_cn;
    if (s == "backward_euler_newton") return SchemeKind::backward_euler_newton;
    throw ConfigError("unknown scheme '" + s + "' (expected imex_euler | imex_cn | backward_euler_newton)");
}

inline std::string to_string(SchemeKind k) {
    switch (k) {
    case SchemeKind::imex_euler: return "imex_euler";
    case SchemeKind::imex_cn: return "imex_cn";
    case SchemeKind::backward_euler_newton: return "backward_euler_newton";
    }
    return "imex_euler";
}

struct SchemeConfig {
    SchemeKind kind = SchemeKind::imex_euler;
    double dt = 1e-3;
    double t_end = 1.0;
    double dt_safety = 0.9;
    int snapshot_interval = 0;  ///< 0 writes only the final state
    bool enforce_stable_dt = true;

    bool is_imex() const { return kind != SchemeKind::backward_euler_newton; }

    void validate() const {
        PORECAT_REQUIRE(dt > 0.0 && std::isfinite(dt), ConfigError, "scheme: dt must be > 0");
        PORECAT_REQUIRE(t_end > 0.0 && std::isfinite(t_end), ConfigError, "scheme: t_end must be > 0");
        PORECAT_REQUIRE(dt_safety > 0.0 && dt_safety <= 1.0, ConfigError, "scheme: dt_safety must lie in (0, 1]");
        PORECAT_REQUIRE(snapshot_interval >= 0, ConfigError, "scheme: snapshot_interval must be >= 0");
    }
};

/// Fluxes of one species in amount per unit time. All vectors are sized to
/// the mesh (cells, patches, inlet faces, outlet faces).
struct SpeciesFluxes {
    Vector bulk_source;     ///< per cell
    Vector surface_source;  ///< per patch (reaction, or forcing)
    Vector lateral;         ///< per patch, leaving the bulk through the wall
    Vector inlet;           ///< per inlet face, total outward flux
    Vector outlet;          ///< per outlet face, outward diffusive flux
};

inline SpeciesFluxes zero_fluxes(const Discretization& disc) {
    SpeciesFluxes f;
    f.bulk_source = Vector::Zero(disc.n_cells());
    f.surface_source = Vector::Zero(disc.n_patches());
    f.lateral = Vector::Zero(disc.n_patches());
    f.inlet = Vector::Zero(static_cast<Eigen::Index>(disc.mesh.bulk.inflow_faces.size()));
    f.outlet = Vector::Zero(static_cast<Eigen::Index>(disc.mesh.bulk.outflow_faces.size()));
    return f;
}

/// Step-integrated totals of one species, as rates (amount per unit time)
/// averaged over the step.
struct SpeciesStepFlux {
    double inflow = 0.0;             ///< into the pore through the inlet
    double outflow = 0.0;            ///< out through the outlet
    double source = 0.0;             ///< bulk source plus surface source
    double bulk_to_wall = 0.0;       ///< removed from the bulk at the wall
    double wall_from_bulk = 0.0;     ///< added to the surface by exchange

    SpeciesStepFlux& operator+=(const SpeciesStepFlux& o) {
        inflow += o.inflow;
        outflow += o.outflow;
        source += o.source;
        bulk_to_wall += o.bulk_to_wall;
        wall_from_bulk += o.wall_from_bulk;
        return *this;
    }
    SpeciesStepFlux scaled(double a) const {
        return {a * inflow, a * outflow, a * source, a * bulk_to_wall, a * wall_from_bulk};
    }
};

struct StepFluxes {
    double t = 0.0;   ///< start of the step
    double dt = 0.0;
    std::vector<SpeciesStepFlux> species;
};

class CatalysisTerms;

/// The non-diffusive right-hand side of a problem on a Discretization.
class SourceTerms {
public:
    virtual ~SourceTerms() = default;
    virtual int n_species() const = 0;
    /// Whether the wall exchange is added to the surface equation. When
    /// false the lateral flux leaves the system.
    virtual bool wall_feeds_surface() const { return true; }
    /// Whether surface unknowns evolve at all.
    virtual bool evolves_surface() const { return true; }
    virtual void evaluate(double t, const BulkState& c, const SurfaceState& cs, std::vector<SpeciesFluxes>& out) const = 0;
    virtual const CatalysisTerms* catalysis() const { return nullptr; }
};

/// The nonlinear model: wall exchange by the sorption laws, surface
/// reactions, and the inflow datum.
class CatalysisTerms : public SourceTerms {
public:
    CatalysisTerms(const Discretization& disc, const Chemistry& chem, std::vector<double> g_in)
        : disc_(disc), chem_(chem), g_in_(std::move(g_in)) {
        chem_.validate();
        PORECAT_REQUIRE(static_cast<int>(g_in_.size()) == chem_.n_species(), ConfigError,
                        "catalysis terms: need one g_in per species");
    }

    int n_species() const override { return chem_.n_species(); }
    const Chemistry& chemistry() const { return chem_; }
    const std::vector<double>& g_in() const { return g_in_; }
    const CatalysisTerms* catalysis() const override { return this; }

    void evaluate(double, const BulkState& c, const SurfaceState& cs, std::vector<SpeciesFluxes>& out) const override {
        const int n = n_species();
        const auto& areas = disc_.mesh.surface.areas;
        out.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            auto& f = out[static_cast<std::size_t>(i)];
            f = zero_fluxes(disc_);
            const Vector tr = trace_bulk_to_surface(c[i], disc_.mesh.trace, disc_.trace_order);
            const Vector r = sorption_flux(tr, cs[i], chem_.sorption[i]);
            for (Eigen::Index p = 0; p < r.size(); ++p) f.lateral[p] = areas[static_cast<std::size_t>(p)] * r[p];
            f.inlet = inflow_flux(g_in_[i], disc_.mesh.bulk);
        }
        if (chem_.reaction.is_zero()) return;
        std::vector<double> y(static_cast<std::size_t>(n)), rate(static_cast<std::size_t>(n));
        for (int p = 0; p < disc_.n_patches(); ++p) {
            for (int i = 0; i < n; ++i) y[i] = cs[i][p];
            chem_.reaction.evaluate(y, rate);
            for (int i = 0; i < n; ++i) out[i].surface_source[p] = areas[p] * rate[i];
        }
    }

private:
    const Discretization& disc_;
    const Chemistry& chem_;
    std::vector<double> g_in_;
};

struct StableDtReport {
    double dt = std::numeric_limits<double>::infinity();
    double advective = std::numeric_limits<double>::infinity();
    double sorption = std::numeric_limits<double>::infinity();
    double reaction = std::numeric_limits<double>::infinity();
    std::string limiting = "none";
};

namespace detail {

/// (k_ad, k_de) of a sorption law: declared, or the largest uptake and
/// release slopes on [0, scale]^2.
inline std::array<double, 2> exchange_constants(const SorptionLaw& law, double scale) {
    if (auto k = law.declared_constants()) return *k;
    double ka = 0.0, kd = 0.0;
    const int n = 11;
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            const auto g = law.gradient(scale * a / (n - 1), scale * b / (n - 1));
            ka = std::max(ka, g[0]);
            kd = std::max(kd, -g[1]);
        }
    }
    return {ka, kd};
}

/// Largest self-consumption slope max |d r_i / d y_i| over a grid of
/// [0, scale]^n.
inline double reaction_rate_scale(const ReactionNetwork& net, double scale) {
    const int n = net.n_species();
    if (net.is_zero() || n == 0) return 0.0;
    const int pts = n <= 4 ? 3 : 2;
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    std::vector<double> y(static_cast<std::size_t>(n)), jac(static_cast<std::size_t>(n * n));
    double L = 0.0;
    while (true) {
        for (int i = 0; i < n; ++i) y[i] = scale * idx[i] / (pts - 1);
        net.jacobian(y, jac);
        for (int i = 0; i < n; ++i) L = std::max(L, std::abs(jac[static_cast<std::size_t>(i * n + i)]));
        int d = 0;
        while (d < n && ++idx[d] == pts) idx[d++] = 0;
        if (d == n) break;
    }
    return L;
}

} // namespace detail

/// Largest explicit step that keeps the IMEX update monotone, times
/// dt_safety. `scale` is the concentration range the rates are sampled on.
inline StableDtReport stable_dt(const Discretization& disc, const Chemistry& chem, double dt_safety, double scale = 1.0) {
    StableDtReport rep;
    const auto& bulk = disc.mesh.bulk;
    const auto& surf = disc.mesh.surface;
    double ka = 0.0, kd = 0.0;
    for (const auto& law : chem.sorption) {
        const auto k = detail::exchange_constants(law, scale);
        ka = std::max(ka, k[0]);
        kd = std::max(kd, k[1]);
    }
    std::vector<double> out(static_cast<std::size_t>(bulk.n_cells()), 0.0);
    for (std::size_t f = 0; f < bulk.faces.size(); ++f) {
        const double F = disc.advection.face_flux[f];
        const auto& face = bulk.faces[f];
        if (F > 0.0 && face.part != FacePart::inflow) out[static_cast<std::size_t>(face.owner)] += F;
        if (F < 0.0 && face.neighbour >= 0) out[static_cast<std::size_t>(face.neighbour)] -= F;
    }
    for (const auto& pr : disc.mesh.trace.pairs) out[static_cast<std::size_t>(pr.cell)] += ka * surf.areas[pr.patch];
    for (int c = 0; c < bulk.n_cells(); ++c)
        if (out[c] > 0.0) rep.advective = std::min(rep.advective, bulk.volumes[c] / out[c]);
    if (ka > 0.0 || kd > 0.0) {
        for (const auto& pr : disc.mesh.trace.pairs) {
            const double rate = ka * surf.areas[pr.patch] / bulk.volumes[pr.cell] + kd;
            if (rate > 0.0) rep.sorption = std::min(rep.sorption, 1.0 / rate);
        }
    }
    const double L = detail::reaction_rate_scale(chem.reaction, scale);
    if (L > 0.0) rep.reaction = 1.0 / (L + kd);
    const double m = std::min({rep.advective, rep.sorption, rep.reaction});
    if (std::isfinite(m)) {
        rep.dt = dt_safety * m;
        rep.limiting = m == rep.advective ? "advective" : m == rep.sorption ? "sorption" : "reaction";
    }
    return rep;
}

struct StepResult {
    BulkState bulk;
    SurfaceState surface;
    StepFluxes fluxes;
    int newton_iterations = 0;
    int halvings = 0;
};

/// Advances states by one step of the configured scheme. Solver objects are
/// cached per species and step size.
class Stepper {
public:
    Stepper(const Discretization& disc, SpeciesSet species, const SourceTerms& terms, SchemeConfig scheme,
            LinearSolverConfig solver)
        : disc_(disc), species_(std::move(species)), terms_(terms), scheme_(scheme), solver_(solver) {
        scheme_.validate();
        solver_.validate();
        PORECAT_REQUIRE(species_.size() == terms_.n_species(), ConfigError,
                        "stepper: species list and source terms disagree on the species count");
        if (scheme_.kind == SchemeKind::backward_euler_newton)
            PORECAT_REQUIRE(terms_.catalysis() != nullptr, ConfigError,
                            "backward_euler_newton needs the sorption/reaction model");
    }

    const SchemeConfig& scheme() const { return scheme_; }

    StepResult step(const BulkState& c, const SurfaceState& cs, double t, double dt) {
        check_finite_input(c, cs);
        StepResult res;
        switch (scheme_.kind) {
        case SchemeKind::imex_euler: res = imex_euler(c, cs, t, dt); break;
        case SchemeKind::imex_cn: res = imex_cn(c, cs, t, dt); break;
        case SchemeKind::backward_euler_newton: res = newton_step(c, cs, t, dt); break;
        }
        for (const auto& v : res.bulk)
            if (!v.allFinite()) throw SolverError("non-finite bulk value produced at t = " + std::to_string(t + dt));
        for (const auto& v : res.surface)
            if (!v.allFinite()) throw SolverError("non-finite surface value produced at t = " + std::to_string(t + dt));
        return res;
    }

    /// Fully implicit Euler step by Newton iteration; halves dt up to five
    /// times when ten iterations do not converge.
    StepResult newton_step(const BulkState& c, const SurfaceState& cs, double t, double dt, int depth = 0) {
        StepResult res;
        if (newton_try(c, cs, t, dt, res)) return res;
        if (depth >= max_halvings)
            throw SolverError("Newton iteration diverged after " + std::to_string(max_halvings) +
                              " step halvings at t = " + std::to_string(t));
        if (dt / 2.0 < 1e-14 * scheme_.t_end) throw SolverError("time step underflow at t = " + std::to_string(t));
        StepResult a = newton_step(c, cs, t, dt / 2.0, depth + 1);
        StepResult b = newton_step(a.bulk, a.surface, t + dt / 2.0, dt / 2.0, depth + 1);
        b.fluxes.t = t;
        b.fluxes.dt = dt;
        for (std::size_t i = 0; i < b.fluxes.species.size(); ++i) {
            auto s = a.fluxes.species[i].scaled(0.5);
            s += b.fluxes.species[i].scaled(0.5);
            b.fluxes.species[i] = s;
        }
        b.newton_iterations += a.newton_iterations;
        b.halvings = std::max(a.halvings, b.halvings) + 1;
        return b;
    }

    static constexpr int max_newton_iterations = 10;
    static constexpr int max_halvings = 5;

private:
    struct Rates {
        Vector bulk;     ///< explicit bulk rate per cell
        Vector surface;  ///< explicit surface rate per patch
        SpeciesStepFlux summary;
    };

    void check_finite_input(const BulkState& c, const SurfaceState& cs) const {
        PORECAT_REQUIRE(static_cast<int>(c.size()) == species_.size() && static_cast<int>(cs.size()) == species_.size(),
                        SolverError, "step: state has the wrong number of species");
        for (const auto& v : c) PORECAT_REQUIRE(v.allFinite(), SolverError, "step: non-finite bulk input");
        for (const auto& v : cs) PORECAT_REQUIRE(v.allFinite(), SolverError, "step: non-finite surface input");
    }

    Rates explicit_rates(const Vector& c, const SpeciesFluxes& f) const {
        const auto& bulk = disc_.mesh.bulk;
        Rates r;
        r.bulk = f.bulk_source - disc_.advection.op.matrix * c;
        CompensatedSum in, out_diff;
        for (std::size_t q = 0; q < bulk.inflow_faces.size(); ++q) {
            const double v = f.inlet[static_cast<Eigen::Index>(q)];
            r.bulk[bulk.faces[bulk.inflow_faces[q]].owner] -= v;
            in.add(-v);
        }
        for (std::size_t q = 0; q < bulk.outflow_faces.size(); ++q) {
            const double v = f.outlet[static_cast<Eigen::Index>(q)];
            r.bulk[bulk.faces[bulk.outflow_faces[q]].owner] -= v;
            out_diff.add(v);
        }
        Vector wall = Vector::Zero(disc_.n_cells());
        for (const auto& pr : disc_.mesh.trace.pairs) wall[pr.cell] += f.lateral[pr.patch];
        r.bulk -= wall;
        r.surface = f.surface_source;
        if (terms_.wall_feeds_surface()) r.surface += f.lateral;

        r.summary.inflow = in.value();
        r.summary.outflow = disc_.outflow_rate(c) + out_diff.value();
        r.summary.source = compensated_sum(std::span<const double>(f.bulk_source.data(), f.bulk_source.size())) +
                           compensated_sum(std::span<const double>(f.surface_source.data(), f.surface_source.size()));
        r.summary.bulk_to_wall = compensated_sum(std::span<const double>(wall.data(), wall.size()));
        if (terms_.wall_feeds_surface())
            r.summary.wall_from_bulk = compensated_sum(std::span<const double>(f.lateral.data(), f.lateral.size()));
        return r;
    }

    KrylovSolver& bulk_solver(int i, double theta_dt) { return cached(bulk_cache_, i, theta_dt, true); }
    KrylovSolver& surface_solver(int i, double theta_dt) { return cached(surface_cache_, i, theta_dt, false); }

    using Cache = std::map<std::pair<int, double>, std::unique_ptr<KrylovSolver>>;

    KrylovSolver& cached(Cache& cache, int i, double theta_dt, bool bulk) {
        auto key = std::make_pair(i, theta_dt);
        auto it = cache.find(key);
        if (it != cache.end()) return *it->second;
        if (cache.size() > 16) cache.clear();
        const LinearOperator& L = bulk ? disc_.bulk_laplacian : disc_.surface_laplacian;
        const double d = bulk ? species_.d[i] : species_.d_surface[i];
        SparseMatrix a = theta_dt * d * L.matrix;
        for (Eigen::Index k = 0; k < a.rows(); ++k) a.coeffRef(k, k) += L.mass[k];
        a.makeCompressed();
        auto s = std::make_unique<KrylovSolver>(std::move(a), solver_);
        return *cache.emplace(key, std::move(s)).first->second;
    }

    /// (mass + theta dt d L) delta = dt (rate - d L x); returns x + delta.
    Vector implicit_update(bool bulk, int i, const Vector& x, const Vector& rate, double dt, double theta) {
        const LinearOperator& L = bulk ? disc_.bulk_laplacian : disc_.surface_laplacian;
        const double d = bulk ? species_.d[i] : species_.d_surface[i];
        const Vector b = dt * (rate - d * (L.matrix * x));
        KrylovSolver& s = bulk ? bulk_solver(i, theta * dt) : surface_solver(i, theta * dt);
        return x + s.solve(b);
    }

    StepResult imex_euler(const BulkState& c, const SurfaceState& cs, double t, double dt) {
        const int n = species_.size();
        std::vector<SpeciesFluxes> f;
        terms_.evaluate(t, c, cs, f);
        StepResult res;
        res.fluxes.t = t;
        res.fluxes.dt = dt;
        for (int i = 0; i < n; ++i) {
            const Rates r = explicit_rates(c[i], f[i]);
            res.bulk.push_back(implicit_update(true, i, c[i], r.bulk, dt, 1.0));
            res.surface.push_back(terms_.evolves_surface() ? implicit_update(false, i, cs[i], r.surface, dt, 1.0) : cs[i]);
            res.fluxes.species.push_back(r.summary);
        }
        return res;
    }

    StepResult imex_cn(const BulkState& c, const SurfaceState& cs, double t, double dt) {
        const int n = species_.size();
        std::vector<SpeciesFluxes> f0, f1;
        terms_.evaluate(t, c, cs, f0);
        std::vector<Rates> r0;
        BulkState c1;
        SurfaceState cs1;
        for (int i = 0; i < n; ++i) {
            r0.push_back(explicit_rates(c[i], f0[i]));
            c1.push_back(implicit_update(true, i, c[i], r0.back().bulk, dt, 0.5));
            cs1.push_back(terms_.evolves_surface() ? implicit_update(false, i, cs[i], r0.back().surface, dt, 0.5) : cs[i]);
        }
        terms_.evaluate(t + dt, c1, cs1, f1);
        StepResult res;
        res.fluxes.t = t;
        res.fluxes.dt = dt;
        for (int i = 0; i < n; ++i) {
            const Rates r1 = explicit_rates(c1[i], f1[i]);
            const Vector eb = 0.5 * (r0[i].bulk + r1.bulk);
            const Vector es = 0.5 * (r0[i].surface + r1.surface);
            res.bulk.push_back(implicit_update(true, i, c[i], eb, dt, 0.5));
            res.surface.push_back(terms_.evolves_surface() ? implicit_update(false, i, cs[i], es, dt, 0.5) : cs[i]);
            auto s = r0[i].summary.scaled(0.5);
            s += r1.summary.scaled(0.5);
            res.fluxes.species.push_back(s);
        }
        return res;
    }

    /// Residual of the implicit Euler system in amount units, plus the
    /// per-species flux summary at the iterate.
    Vector newton_residual(const Vector& x, const BulkState& c0, const SurfaceState& cs0, double dt,
                           std::vector<SpeciesStepFlux>* summary) const {
        const auto* cat = terms_.catalysis();
        const int n = species_.size(), nc = disc_.n_cells(), np = disc_.n_patches();
        BulkState c(static_cast<std::size_t>(n));
        SurfaceState cs(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            c[i] = x.segment(static_cast<Eigen::Index>(i) * nc, nc);
            cs[i] = x.segment(static_cast<Eigen::Index>(n) * nc + static_cast<Eigen::Index>(i) * np, np);
        }
        std::vector<SpeciesFluxes> f;
        cat->evaluate(0.0, c, cs, f);
        Vector R(x.size());
        if (summary) summary->clear();
        for (int i = 0; i < n; ++i) {
            Rates r = explicit_rates(c[i], f[i]);
            const Vector Kc = species_.d[i] * (disc_.bulk_laplacian.matrix * c[i]);
            R.segment(static_cast<Eigen::Index>(i) * nc, nc) =
                disc_.bulk_laplacian.mass.cwiseProduct(c[i] - c0[i]) + dt * (Kc - r.bulk);
            const Vector Ks = species_.d_surface[i] * (disc_.surface_laplacian.matrix * cs[i]);
            R.segment(static_cast<Eigen::Index>(n) * nc + static_cast<Eigen::Index>(i) * np, np) =
                disc_.surface_laplacian.mass.cwiseProduct(cs[i] - cs0[i]) + dt * (Ks - r.surface);
            if (summary) summary->push_back(r.summary);
        }
        return R;
    }

    SparseMatrix newton_jacobian(const Vector& x, double dt) const {
        const auto& chem = terms_.catalysis()->chemistry();
        const int n = species_.size(), nc = disc_.n_cells(), np = disc_.n_patches();
        const auto& trace = disc_.mesh.trace;
        const auto& areas = disc_.mesh.surface.areas;
        const Eigen::Index off_s = static_cast<Eigen::Index>(n) * nc;
        std::vector<Eigen::Triplet<double>> t;
        auto add_block = [&](Eigen::Index off, const SparseMatrix& m, double scale) {
            for (Eigen::Index r = 0; r < m.outerSize(); ++r)
                for (SparseMatrix::InnerIterator it(m, r); it; ++it)
                    t.emplace_back(off + it.row(), off + it.col(), scale * it.value());
        };
        for (int i = 0; i < n; ++i) {
            const Eigen::Index ob = static_cast<Eigen::Index>(i) * nc, os = off_s + static_cast<Eigen::Index>(i) * np;
            add_block(ob, disc_.bulk_laplacian.matrix, dt * species_.d[i]);
            add_block(ob, disc_.advection.op.matrix, dt);
            for (int k = 0; k < nc; ++k) t.emplace_back(ob + k, ob + k, disc_.bulk_laplacian.mass[k]);
            add_block(os, disc_.surface_laplacian.matrix, dt * species_.d_surface[i]);
            for (int p = 0; p < np; ++p) t.emplace_back(os + p, os + p, disc_.surface_laplacian.mass[p]);
            for (const auto& pr : trace.pairs) {
                double tr = x[ob + pr.cell];
                if (disc_.trace_order == 2) tr = 1.5 * x[ob + pr.cell] - 0.5 * x[ob + pr.inner_cell];
                const auto g = chem.sorption[i].gradient(tr, x[os + pr.patch]);
                const double a = dt * areas[pr.patch];
                auto couple = [&](int cell, double w) {
                    t.emplace_back(ob + pr.cell, ob + cell, a * g[0] * w);
                    t.emplace_back(os + pr.patch, ob + cell, -a * g[0] * w);
                };
                if (disc_.trace_order == 2) {
                    couple(pr.cell, 1.5);
                    couple(pr.inner_cell, -0.5);
                } else {
                    couple(pr.cell, 1.0);
                }
                t.emplace_back(ob + pr.cell, os + pr.patch, a * g[1]);
                t.emplace_back(os + pr.patch, os + pr.patch, -a * g[1]);
            }
        }
        if (!chem.reaction.is_zero()) {
            std::vector<double> y(static_cast<std::size_t>(n)), jac(static_cast<std::size_t>(n * n));
            for (int p = 0; p < np; ++p) {
                for (int i = 0; i < n; ++i) y[i] = x[off_s + static_cast<Eigen::Index>(i) * np + p];
                chem.reaction.jacobian(y, jac);
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) {
                        const double v = jac[static_cast<std::size_t>(i * n + j)];
                        if (v != 0.0)
                            t.emplace_back(off_s + static_cast<Eigen::Index>(i) * np + p,
                                           off_s + static_cast<Eigen::Index>(j) * np + p, -dt * areas[p] * v);
                    }
            }
        }
        SparseMatrix J(x.size(), x.size());
        J.setFromTriplets(t.begin(), t.end());
        J.makeCompressed();
        return J;
    }

    double scaled_residual(const Vector& R) const {
        const int n = species_.size(), nc = disc_.n_cells(), np = disc_.n_patches();
        double m = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < nc; ++k)
                m = std::max(m, std::abs(R[static_cast<Eigen::Index>(i) * nc + k]) / disc_.bulk_laplacian.mass[k]);
            for (int p = 0; p < np; ++p)
                m = std::max(m, std::abs(R[static_cast<Eigen::Index>(n) * nc + static_cast<Eigen::Index>(i) * np + p]) /
                                    disc_.surface_laplacian.mass[p]);
        }
        return m;
    }

    bool newton_try(const BulkState& c0, const SurfaceState& cs0, double t, double dt, StepResult& res) {
        const int n = species_.size(), nc = disc_.n_cells(), np = disc_.n_patches();
        Vector x(static_cast<Eigen::Index>(n) * (nc + np));
        for (int i = 0; i < n; ++i) {
            x.segment(static_cast<Eigen::Index>(i) * nc, nc) = c0[i];
            x.segment(static_cast<Eigen::Index>(n) * nc + static_cast<Eigen::Index>(i) * np, np) = cs0[i];
        }
        std::vector<SpeciesStepFlux> summary;
        Vector R = newton_residual(x, c0, cs0, dt, &summary);
        int it = 0;
        LinearSolverConfig inner = solver_;
        inner.method = KrylovMethod::bicgstab;
        inner.preconditioner = Preconditioner::jacobi;
        inner.rel_tol = std::min(solver_.rel_tol, 1e-13);
        inner.max_iter = std::max(solver_.max_iter, 2000);
        while (true) {
            const double tol = 1e-10 * (1.0 + x.lpNorm<Eigen::Infinity>());
            const double err = scaled_residual(R);
            if (!std::isfinite(err)) return false;
            if (err <= tol) break;
            if (it == max_newton_iterations) return false;
            KrylovSolver ls(newton_jacobian(x, dt), inner);
            Vector dx;
            try {
                dx = ls.solve_best_effort(-R);
            } catch (const SolverError&) {
                return false;
            }
            x += dx;
            R = newton_residual(x, c0, cs0, dt, &summary);
            ++it;
        }
        res.bulk.clear();
        res.surface.clear();
        for (int i = 0; i < n; ++i) {
            res.bulk.push_back(x.segment(static_cast<Eigen::Index>(i) * nc, nc));
            res.surface.push_back(x.segment(static_cast<Eigen::Index>(n) * nc + static_cast<Eigen::Index>(i) * np, np));
        }
        res.fluxes.t = t;
        res.fluxes.dt = dt;
        res.fluxes.species = summary;
        res.newton_iterations = it;
        return true;
    }

    const Discretization& disc_;
    SpeciesSet species_;
    const SourceTerms& terms_;
    SchemeConfig scheme_;
    LinearSolverConfig solver_;
    Cache bulk_cache_, surface_cache_;
};

} // namespace porecat
