#pragma once

// Finite-volume operators on the pore meshes: two-point-flux diffusion,
// face-flux advection, the surface Laplace-Beltrami stencil, and the
// boundary couplings (inlet, wall exchange, trace).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "porecat/errors.hpp"
#include "porecat/geometry.hpp"
#include "porecat/model/scenario.hpp"
#include "porecat/model/sorption.hpp"
#include "porecat/velocity.hpp"

namespace porecat {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Per species, one value per bulk cell.
using BulkState = std::vector<Vector>;
/// Per species, one value per surface patch.
using SurfaceState = std::vector<Vector>;

/// y = matrix x + affine, in amount per unit time. `mass` is the diagonal
/// (cell volumes or patch areas) that turns rates into concentration rates.
struct LinearOperator {
    SparseMatrix matrix;
    Vector affine;
    Vector mass;

    Vector apply(const Vector& x) const { return matrix * x + affine; }
    int rows() const { return static_cast<int>(matrix.rows()); }
};

enum class AdvectionScheme { upwind, central };

inline AdvectionScheme parse_advection_scheme(const std::string& s) {
    if (s == "upwind") return AdvectionScheme::upwind;
    if (s == "central") return AdvectionScheme::central;
    throw ConfigError("unknown advection scheme '" + s + "' (expected upwind | central)");
}

namespace detail {

inline Vector to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline SparseMatrix from_triplets(int n, const std::vector<Eigen::Triplet<double>>& t) {
    SparseMatrix m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
}

} // namespace detail

/// d times the two-point-flux Laplacian, sign convention (K c)_cell = net
/// outward diffusive flux; boundary faces are closed.
inline LinearOperator assemble_diffusion_bulk(const BulkMesh& mesh, double d) {
    PORECAT_REQUIRE(d > 0.0, ConfigError, "assemble_diffusion_bulk: d must be > 0");
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(mesh.faces.size() * 4);
    for (const auto& f : mesh.faces) {
        if (f.neighbour < 0 || f.area == 0.0) continue;
        const double tr = d * f.area / f.distance;
        t.emplace_back(f.owner, f.owner, tr);
        t.emplace_back(f.neighbour, f.neighbour, tr);
        t.emplace_back(f.owner, f.neighbour, -tr);
        t.emplace_back(f.neighbour, f.owner, -tr);
    }
    LinearOperator op;
    op.matrix = detail::from_triplets(mesh.n_cells(), t);
    op.affine = Vector::Zero(mesh.n_cells());
    op.mass = detail::to_vector(mesh.volumes);
    return op;
}

struct AdvectionOperator {
    LinearOperator op;               ///< (op.matrix c)_cell = net outward advective flux
    std::vector<double> face_flux;   ///< u.n A per mesh face
    double max_cell_peclet = 0.0;    ///< 0 when no diffusivity was supplied
    std::vector<std::string> warnings;
};

/// Net outward advective flux per cell. Inlet faces are left out: the total
/// flux there is prescribed by the inflow datum. Outlet faces carry the
/// owner value times u.nu.
inline AdvectionOperator assemble_advection_bulk(const BulkMesh& mesh, const VelocityField& field,
                                                 AdvectionScheme scheme, double d_min = 0.0) {
    AdvectionOperator out;
    out.face_flux = face_fluxes(field, mesh);
    std::vector<Eigen::Triplet<double>> t;
    for (std::size_t fi = 0; fi < mesh.faces.size(); ++fi) {
        const auto& f = mesh.faces[fi];
        const double F = out.face_flux[fi];
        if (F == 0.0) continue;
        if (f.part == FacePart::outflow) {
            if (F > 0.0) t.emplace_back(f.owner, f.owner, F);
            continue;
        }
        if (f.neighbour < 0) continue;
        if (d_min > 0.0 && f.area > 0.0)
            out.max_cell_peclet = std::max(out.max_cell_peclet, std::abs(F) / f.area * f.distance / d_min);
        if (scheme == AdvectionScheme::upwind) {
            if (F > 0.0) {
                t.emplace_back(f.owner, f.owner, F);
                t.emplace_back(f.neighbour, f.owner, -F);
            } else {
                t.emplace_back(f.neighbour, f.neighbour, -F);
                t.emplace_back(f.owner, f.neighbour, F);
            }
        } else {
            t.emplace_back(f.owner, f.owner, 0.5 * F);
            t.emplace_back(f.owner, f.neighbour, 0.5 * F);
            t.emplace_back(f.neighbour, f.owner, -0.5 * F);
            t.emplace_back(f.neighbour, f.neighbour, -0.5 * F);
        }
    }
    out.op.matrix = detail::from_triplets(mesh.n_cells(), t);
    out.op.affine = Vector::Zero(mesh.n_cells());
    out.op.mass = detail::to_vector(mesh.volumes);
    if (scheme == AdvectionScheme::central && out.max_cell_peclet > 2.0) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "central advection with cell Peclet number %.3g > 2 may oscillate",
                      out.max_cell_peclet);
        out.warnings.emplace_back(buf);
    }
    return out;
}

/// dS times the 5-point Laplace-Beltrami stencil on the wall, periodic in phi
/// and closed at z = +-h.
inline LinearOperator assemble_surface_laplacian(const SurfaceMesh& surf, double dS) {
    PORECAT_REQUIRE(dS > 0.0, ConfigError, "assemble_surface_laplacian: dS must be > 0");
    std::vector<Eigen::Triplet<double>> t;
    for (const auto& e : surf.edges) {
        if (e.b < 0) continue;
        const double tr = dS * e.length / e.distance;
        t.emplace_back(e.a, e.a, tr);
        t.emplace_back(e.b, e.b, tr);
        t.emplace_back(e.a, e.b, -tr);
        t.emplace_back(e.b, e.a, -tr);
    }
    LinearOperator op;
    op.matrix = detail::from_triplets(surf.n_patches(), t);
    op.affine = Vector::Zero(surf.n_patches());
    op.mass = detail::to_vector(surf.areas);
    return op;
}

/// Per-patch bulk value at the wall.
inline Vector trace_bulk_to_surface(const Vector& c, const TraceMap& map, int order = 1) {
    PORECAT_REQUIRE(order == 1 || order == 2, ConfigError, "trace order must be 1 or 2");
    Vector tr(static_cast<Eigen::Index>(map.pairs.size()));
    for (std::size_t p = 0; p < map.pairs.size(); ++p) {
        const auto& pr = map.pairs[p];
        if (order == 1) {
            tr[static_cast<Eigen::Index>(p)] = c[pr.cell];
        } else {
            PORECAT_REQUIRE(pr.inner_cell >= 0, ConfigError, "trace order 2 requires n_r >= 2");
            tr[static_cast<Eigen::Index>(p)] = 1.5 * c[pr.cell] - 0.5 * c[pr.inner_cell];
        }
    }
    return tr;
}

/// r^sorp per unit area, once per patch.
inline Vector sorption_flux(const Vector& trace, const Vector& cs, const SorptionLaw& law) {
    PORECAT_REQUIRE(trace.size() == cs.size(), ConfigError, "sorption_flux: trace and surface sizes differ");
    Vector r(trace.size());
    for (Eigen::Index p = 0; p < trace.size(); ++p) r[p] = law.evaluate(trace[p], cs[p]);
    return r;
}

/// Total outward flux (advective + diffusive) through each inlet face,
/// g_in times the face area, in the order of BulkMesh::inflow_faces.
inline Vector inflow_flux(double g_in, const BulkMesh& mesh) {
    PORECAT_REQUIRE(std::isfinite(g_in), ConfigError, "inflow_flux: g_in must be finite");
    Vector out(static_cast<Eigen::Index>(mesh.inflow_faces.size()));
    for (std::size_t q = 0; q < mesh.inflow_faces.size(); ++q)
        out[static_cast<Eigen::Index>(q)] = g_in * mesh.faces[mesh.inflow_faces[q]].area;
    return out;
}

/// Samples initial profiles at cell centres and patch centres.
inline BulkState sample_bulk(const BulkMesh& mesh, std::span<const Profile> profiles) {
    BulkState s;
    for (const auto& pr : profiles) {
        Vector v(mesh.n_cells());
        for (int c = 0; c < mesh.n_cells(); ++c) {
            const auto& x = mesh.centers[c];
            v[c] = pr.at(x.r, x.phi, x.z, mesh.spec.R, mesh.spec.h);
        }
        s.push_back(std::move(v));
    }
    return s;
}

inline SurfaceState sample_surface(const SurfaceMesh& surf, std::span<const Profile> profiles) {
    SurfaceState s;
    for (const auto& pr : profiles) {
        Vector v(surf.n_patches());
        for (int p = 0; p < surf.n_patches(); ++p) v[p] = pr.at(surf.R, surf.phi_centers[p], surf.z_centers[p], surf.R, surf.h);
        s.push_back(std::move(v));
    }
    return s;
}

/// The assembled, immutable operators of one mesh and velocity field. The
/// diffusion matrices are stored for unit diffusivity.
struct Discretization {
    PoreMesh mesh;
    AdvectionOperator advection;
    LinearOperator bulk_laplacian;
    LinearOperator surface_laplacian;
    AdvectionScheme scheme = AdvectionScheme::upwind;
    int trace_order = 1;

    Discretization(PoreMesh m, const VelocityField& field, AdvectionScheme s, int order, double d_min = 0.0)
        : mesh(std::move(m)),
          advection(assemble_advection_bulk(mesh.bulk, field, s, d_min)),
          bulk_laplacian(assemble_diffusion_bulk(mesh.bulk, 1.0)),
          surface_laplacian(assemble_surface_laplacian(mesh.surface, 1.0)),
          scheme(s),
          trace_order(order) {
        PORECAT_REQUIRE(order == 1 || order == 2, ConfigError, "trace order must be 1 or 2");
        PORECAT_REQUIRE(order == 1 || mesh.bulk.spec.n_r >= 2, ConfigError, "trace order 2 requires n_r >= 2");
    }

    int n_cells() const { return mesh.bulk.n_cells(); }
    int n_patches() const { return mesh.surface.n_patches(); }

    /// Advective outflow rate through the outlet for a bulk field.
    double outflow_rate(const Vector& c) const {
        CompensatedSum s;
        for (int f : mesh.bulk.outflow_faces) {
            const double F = advection.face_flux[static_cast<std::size_t>(f)];
            if (F > 0.0) s.add(F * c[mesh.bulk.faces[f].owner]);
        }
        return s.value();
    }
};

} // namespace porecat
