#pragma once

// Mesh and step refinement studies with observed orders.

#include <cmath>
#include <string>
#include <vector>

#include "porecat/simulation.hpp"

namespace porecat {

struct ConvergenceLevel {
    double h = 0.0;  ///< mesh width or time step
    double error = 0.0;
    int steps = 0;
};

struct ConvergenceStudy {
    std::vector<ConvergenceLevel> levels;
    std::vector<double> pair_slopes;  ///< between consecutive levels
    double fitted_slope = 0.0;        ///< least squares over all levels

    double finest_slope() const { return pair_slopes.empty() ? 0.0 : pair_slopes.back(); }
};

inline ConvergenceStudy finish_study(std::vector<ConvergenceLevel> levels) {
    ConvergenceStudy s;
    s.levels = std::move(levels);
    for (std::size_t k = 1; k < s.levels.size(); ++k)
        s.pair_slopes.push_back(std::log(s.levels[k - 1].error / s.levels[k].error) /
                                std::log(s.levels[k - 1].h / s.levels[k].h));
    if (s.levels.size() >= 2) {
        std::vector<double> x, y;
        for (const auto& l : s.levels) {
            x.push_back(std::log(l.h));
            y.push_back(std::log(l.error));
        }
        double xm = 0.0, ym = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            xm += x[k];
            ym += y[k];
        }
        xm /= static_cast<double>(x.size());
        ym /= static_cast<double>(y.size());
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            sxy += (x[k] - xm) * (y[k] - ym);
            sxx += (x[k] - xm) * (x[k] - xm);
        }
        s.fitted_slope = sxy / sxx;
    }
    return s;
}

/// Volume- and area-weighted L2 distance between two state pairs.
inline double state_distance(const Discretization& disc, const BulkState& a, const SurfaceState& as, const BulkState& b,
                             const SurfaceState& bs) {
    CompensatedSum s;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (Eigen::Index k = 0; k < a[i].size(); ++k) {
            const double e = a[i][k] - b[i][k];
            s.add(disc.mesh.bulk.volumes[k] * e * e);
        }
    for (std::size_t i = 0; i < as.size(); ++i)
        for (Eigen::Index k = 0; k < as[i].size(); ++k) {
            const double e = as[i][k] - bs[i][k];
            s.add(disc.mesh.surface.areas[k] * e * e);
        }
    return std::sqrt(s.value());
}

struct SpatialStudySpec {
    std::string preset = "bulk_full";
    ManufacturedSolution::Params params;
    std::vector<int> levels{8, 16, 32};
    SchemeKind scheme = SchemeKind::imex_cn;
    AdvectionScheme advection = AdvectionScheme::central;
    int trace_order = 1;
    double t_end = 0.1;
    double dt = 1e-3;           ///< at the coarsest level
    bool dt_follows_mesh = false;  ///< scale dt with the mesh width
};

/// Manufactured-solution errors at t_end on a sequence of meshes. Bulk
/// presets refine n_r = n_z = N on one azimuthal column; wall presets refine
/// n_phi = n_z = N on one radial ring.
inline ConvergenceStudy spatial_convergence(const SpatialStudySpec& spec, const LinearSolverConfig& solver) {
    const ManufacturedSolution sol(spec.preset, spec.params);
    const bool wall = spec.preset.rfind("surface", 0) == 0;
    std::vector<ConvergenceLevel> out;
    SpeciesSet one{{"u"}, {spec.params.d}, {spec.params.dS}};
    for (int N : spec.levels) {
        PORECAT_REQUIRE(N >= 2, ConfigError, "spatial_convergence: levels must be >= 2");
        CylinderSpec cs;
        cs.R = spec.params.R;
        cs.h = spec.params.h;
        cs.n_r = wall ? 1 : N;
        cs.n_phi = wall ? N : 1;
        cs.n_z = N;
        const VelocityField field = spec.params.u_max != 0.0 ? VelocityField(PoiseuilleVelocity{spec.params.u_max})
                                                             : VelocityField(ZeroVelocity{});
        Discretization disc(build_mesh(cs), field, spec.advection, spec.trace_order, spec.params.d);
        LinearProblemTerms terms(disc, sol);
        SchemeConfig sc;
        sc.kind = spec.scheme;
        sc.t_end = spec.t_end;
        sc.dt = spec.dt_follows_mesh ? spec.dt * spec.levels.front() / N : spec.dt;
        sc.enforce_stable_dt = false;
        auto res = run_terms(disc, one, terms, sample_exact_bulk(disc, sol, 0.0), sample_exact_surface(disc, sol, 0.0), sc,
                             solver);
        const double err = state_distance(disc, res.bulk, res.surface, sample_exact_bulk(disc, sol, spec.t_end),
                                          sample_exact_surface(disc, sol, spec.t_end));
        out.push_back({wall ? 2.0 * spec.params.h / N : spec.params.R / N, err, res.steps});
    }
    return finish_study(std::move(out));
}

/// Errors at t_end for a sequence of steps, against a run with `ref_dt`.
inline ConvergenceStudy temporal_convergence(const Discretization& disc, const Chemistry& chem,
                                             const ScenarioSpec& scenario, SchemeConfig scheme,
                                             const std::vector<double>& dts, double ref_dt,
                                             const LinearSolverConfig& solver) {
    scheme.enforce_stable_dt = false;
    scheme.t_end = scenario.t_end;
    SchemeConfig ref = scheme;
    ref.dt = ref_dt;
    const RunResult reference = run(disc, chem, scenario, ref, solver);
    std::vector<ConvergenceLevel> out;
    for (double dt : dts) {
        scheme.dt = dt;
        const RunResult r = run(disc, chem, scenario, scheme, solver);
        out.push_back({dt, state_distance(disc, r.bulk, r.surface, reference.bulk, reference.surface), r.steps});
    }
    return finish_study(std::move(out));
}

} // namespace porecat
