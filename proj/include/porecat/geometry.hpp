#pragma once

// Structured finite-volume meshes of a circular pore A x (-h, h) and its
// lateral wall, plus the face/patch pairing that realizes the bulk trace.

#include <array>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "porecat/errors.hpp"
#include "porecat/summation.hpp"

namespace porecat {

struct CylinderSpec {
    double R = 1.0;
    double h = 1.0;
    int n_r = 1;
    int n_phi = 1;
    int n_z = 1;
    bool axisymmetric = false;

    void validate() const {
        PORECAT_REQUIRE(R > 0.0, ConfigError, "geometry: R must be > 0");
        PORECAT_REQUIRE(h > 0.0, ConfigError, "geometry: h must be > 0");
        PORECAT_REQUIRE(n_r >= 1 && n_phi >= 1 && n_z >= 1, ConfigError,
                        "geometry: cell counts n_r, n_phi, n_z must be >= 1");
        PORECAT_REQUIRE(!axisymmetric || n_phi == 1, ConfigError,
                        "geometry: axisymmetric requires n_phi = 1");
    }
};

enum class Axis { r, phi, z };

/// Where a bulk face sits. `interior` faces have two cells; `axis` faces are
/// the degenerate r = 0 faces of the innermost ring and carry zero area.
enum class FacePart { interior, axis, inflow, lateral, outflow };

/// Cylindrical coordinates (r, phi, z).
struct CylPoint {
    double r = 0.0;
    double phi = 0.0;
    double z = 0.0;
};

struct BulkFace {
    int owner = -1;
    int neighbour = -1;      ///< -1 on boundary and axis faces
    Axis axis = Axis::z;
    FacePart part = FacePart::interior;
    double area = 0.0;
    double distance = 0.0;   ///< owner->neighbour centre distance; centre->face on boundary
    CylPoint center;
    /// Outward normal from the owner in the local (e_r, e_phi, e_z) basis.
    std::array<double, 3> normal{0.0, 0.0, 0.0};
};

/// Local face slots of a cell, in `BulkMesh::cell_face_areas` order.
enum FaceSlot : int { r_minus = 0, r_plus, phi_minus, phi_plus, z_minus, z_plus };

struct BulkMesh {
    CylinderSpec spec;
    double dr = 0.0, dphi = 0.0, dz = 0.0;
    std::vector<CylPoint> centers;
    std::vector<double> volumes;
    std::vector<std::array<double, 6>> cell_face_areas;
    std::vector<BulkFace> faces;
    std::vector<int> inflow_faces;   ///< indices into faces, ordered like (i, j)
    std::vector<int> outflow_faces;
    std::vector<int> lateral_faces;  ///< ordered like surface patches (j, k)

    int n_cells() const { return static_cast<int>(volumes.size()); }
    int index(int i, int j, int k) const { return (i * spec.n_phi + j) * spec.n_z + k; }
    /// Radius of the radial face between ring i-1 and ring i (i in [0, n_r]).
    double r_face(int i) const { return i == spec.n_r ? spec.R : i * dr; }
    double r_center(int i) const { return (i + 0.5) * dr; }
};

struct SurfaceEdge {
    int a = -1;
    int b = -1;              ///< -1 on the end circles z = +-h
    Axis axis = Axis::z;
    double length = 0.0;
    double distance = 0.0;
};

struct SurfaceMesh {
    double R = 1.0, h = 1.0;
    int n_phi = 1, n_z = 1;
    double dphi = 0.0, dz = 0.0;
    std::vector<double> phi_centers;  ///< per patch
    std::vector<double> z_centers;    ///< per patch
    std::vector<double> areas;
    std::vector<SurfaceEdge> edges;   ///< interior edges plus the closed end-circle edges
    std::vector<std::array<int, 2>> phi_neighbours;  ///< (j-1, j+1) periodic
    std::vector<std::array<int, 2>> z_neighbours;    ///< (k-1, k+1), -1 past z = +-h

    int n_patches() const { return static_cast<int>(areas.size()); }
    int index(int j, int k) const { return j * n_z + k; }
};

struct TracePair {
    int patch = -1;
    int cell = -1;          ///< outermost-ring cell
    int face = -1;          ///< lateral face in BulkMesh::faces
    int inner_cell = -1;    ///< next ring inward, -1 when n_r == 1
};

struct TraceMap {
    std::vector<TracePair> pairs;  ///< indexed by patch
};

struct PoreMesh {
    BulkMesh bulk;
    SurfaceMesh surface;
    TraceMap trace;
};

namespace detail {

inline BulkFace make_face(int owner, int neighbour, Axis axis, FacePart part, double area,
                          double distance, CylPoint c, std::array<double, 3> n) {
    BulkFace f;
    f.owner = owner;
    f.neighbour = neighbour;
    f.axis = axis;
    f.part = part;
    f.area = area;
    f.distance = distance;
    f.center = c;
    f.normal = n;
    return f;
}

} // namespace detail

/// Builds the bulk mesh, the lateral surface mesh and their pairing.
/// Cells are numbered r-major, then phi, then z; patches phi-major, then z.
inline PoreMesh build_mesh(const CylinderSpec& spec) {
    spec.validate();
    const double two_pi = 2.0 * std::numbers::pi;
    PoreMesh out;
    BulkMesh& m = out.bulk;
    m.spec = spec;
    m.dr = spec.R / spec.n_r;
    m.dphi = two_pi / spec.n_phi;
    m.dz = 2.0 * spec.h / spec.n_z;

    const int nr = spec.n_r, nphi = spec.n_phi, nz = spec.n_z;
    const std::size_t n = static_cast<std::size_t>(nr) * nphi * nz;
    m.centers.resize(n);
    m.volumes.resize(n);
    m.cell_face_areas.resize(n);

    for (int i = 0; i < nr; ++i) {
        const double r_lo = m.r_face(i), r_hi = m.r_face(i + 1);
        const double ring = 0.5 * (r_hi * r_hi - r_lo * r_lo);
        for (int j = 0; j < nphi; ++j) {
            for (int k = 0; k < nz; ++k) {
                const int c = m.index(i, j, k);
                m.centers[c] = {m.r_center(i), (j + 0.5) * m.dphi, -spec.h + (k + 0.5) * m.dz};
                m.volumes[c] = ring * m.dphi * m.dz;
                m.cell_face_areas[c] = {r_lo * m.dphi * m.dz, r_hi * m.dphi * m.dz,
                                        m.dr * m.dz,          m.dr * m.dz,
                                        ring * m.dphi,        ring * m.dphi};
            }
        }
    }

    // Radial faces: axis, interior, lateral.
    for (int i = 0; i <= nr; ++i) {
        for (int j = 0; j < nphi; ++j) {
            for (int k = 0; k < nz; ++k) {
                const CylPoint fc{m.r_face(i), (j + 0.5) * m.dphi, -spec.h + (k + 0.5) * m.dz};
                const double area = m.r_face(i) * m.dphi * m.dz;
                if (i == 0) {
                    m.faces.push_back(detail::make_face(m.index(0, j, k), -1, Axis::r, FacePart::axis,
                                                        0.0, 0.5 * m.dr, fc, {-1.0, 0.0, 0.0}));
                } else if (i == nr) {
                    m.lateral_faces.push_back(static_cast<int>(m.faces.size()));
                    m.faces.push_back(detail::make_face(m.index(nr - 1, j, k), -1, Axis::r,
                                                        FacePart::lateral, area, 0.5 * m.dr, fc,
                                                        {1.0, 0.0, 0.0}));
                } else {
                    m.faces.push_back(detail::make_face(m.index(i - 1, j, k), m.index(i, j, k), Axis::r,
                                                        FacePart::interior, area, m.dr, fc,
                                                        {1.0, 0.0, 0.0}));
                }
            }
        }
    }
    // lateral_faces were pushed in (j, k) order, matching patch numbering.

    // Azimuthal faces between j and j+1 (periodic). A single column has no
    // distinct neighbour, so it gets none.
    if (nphi > 1) {
        for (int i = 0; i < nr; ++i) {
            for (int j = 0; j < nphi; ++j) {
                const int jn = (j + 1) % nphi;
                for (int k = 0; k < nz; ++k) {
                    const CylPoint fc{m.r_center(i), (j + 1) * m.dphi, -spec.h + (k + 0.5) * m.dz};
                    m.faces.push_back(detail::make_face(m.index(i, j, k), m.index(i, jn, k), Axis::phi,
                                                        FacePart::interior, m.dr * m.dz,
                                                        m.r_center(i) * m.dphi, fc, {0.0, 1.0, 0.0}));
                }
            }
        }
    }

    // Axial faces: inflow (k = 0), interior, outflow (k = n_z).
    for (int i = 0; i < nr; ++i) {
        const double r_lo = m.r_face(i), r_hi = m.r_face(i + 1);
        const double area = 0.5 * (r_hi * r_hi - r_lo * r_lo) * m.dphi;
        for (int j = 0; j < nphi; ++j) {
            for (int k = 0; k <= nz; ++k) {
                const CylPoint fc{m.r_center(i), (j + 0.5) * m.dphi, -spec.h + k * m.dz};
                if (k == 0) {
                    m.inflow_faces.push_back(static_cast<int>(m.faces.size()));
                    m.faces.push_back(detail::make_face(m.index(i, j, 0), -1, Axis::z, FacePart::inflow,
                                                        area, 0.5 * m.dz, fc, {0.0, 0.0, -1.0}));
                } else if (k == nz) {
                    m.outflow_faces.push_back(static_cast<int>(m.faces.size()));
                    m.faces.push_back(detail::make_face(m.index(i, j, nz - 1), -1, Axis::z,
                                                        FacePart::outflow, area, 0.5 * m.dz, fc,
                                                        {0.0, 0.0, 1.0}));
                } else {
                    m.faces.push_back(detail::make_face(m.index(i, j, k - 1), m.index(i, j, k), Axis::z,
                                                        FacePart::interior, area, m.dz, fc,
                                                        {0.0, 0.0, 1.0}));
                }
            }
        }
    }

    SurfaceMesh& s = out.surface;
    s.R = spec.R;
    s.h = spec.h;
    s.n_phi = nphi;
    s.n_z = nz;
    s.dphi = m.dphi;
    s.dz = m.dz;
    const std::size_t np = static_cast<std::size_t>(nphi) * nz;
    s.phi_centers.resize(np);
    s.z_centers.resize(np);
    s.areas.assign(np, spec.R * m.dphi * m.dz);
    s.phi_neighbours.resize(np);
    s.z_neighbours.resize(np);
    for (int j = 0; j < nphi; ++j) {
        for (int k = 0; k < nz; ++k) {
            const int p = s.index(j, k);
            s.phi_centers[p] = (j + 0.5) * m.dphi;
            s.z_centers[p] = -spec.h + (k + 0.5) * m.dz;
            s.phi_neighbours[p] = {s.index((j + nphi - 1) % nphi, k), s.index((j + 1) % nphi, k)};
            s.z_neighbours[p] = {k > 0 ? s.index(j, k - 1) : -1, k + 1 < nz ? s.index(j, k + 1) : -1};
        }
    }
    if (nphi > 1) {
        for (int j = 0; j < nphi; ++j)
            for (int k = 0; k < nz; ++k)
                s.edges.push_back({s.index(j, k), s.index((j + 1) % nphi, k), Axis::phi, m.dz,
                                   spec.R * m.dphi});
    }
    for (int j = 0; j < nphi; ++j) {
        for (int k = 0; k <= nz; ++k) {
            const int a = k == 0 ? s.index(j, 0) : s.index(j, k - 1);
            const int b = (k == 0 || k == nz) ? -1 : s.index(j, k);
            s.edges.push_back({a, b, Axis::z, spec.R * m.dphi, b < 0 ? 0.5 * m.dz : m.dz});
        }
    }

    out.trace.pairs.resize(np);
    for (int j = 0; j < nphi; ++j) {
        for (int k = 0; k < nz; ++k) {
            const int p = s.index(j, k);
            out.trace.pairs[p] = {p, m.index(nr - 1, j, k), m.lateral_faces[p],
                                  nr >= 2 ? m.index(nr - 2, j, k) : -1};
        }
    }
    return out;
}

/// Discrete integral over the pore volume: sum of value * cell volume.
inline double integrate(const BulkMesh& mesh, std::span<const double> field) {
    PORECAT_REQUIRE(field.size() == mesh.volumes.size(), ConfigError,
                    "integrate: field has " + std::to_string(field.size()) + " entries, mesh has " +
                        std::to_string(mesh.volumes.size()) + " cells");
    return compensated_dot(field, mesh.volumes);
}

/// Discrete integral over the lateral wall: sum of value * patch area.
inline double integrate(const SurfaceMesh& mesh, std::span<const double> field) {
    PORECAT_REQUIRE(field.size() == mesh.areas.size(), ConfigError,
                    "integrate: field has " + std::to_string(field.size()) + " entries, surface has " +
                        std::to_string(mesh.areas.size()) + " patches");
    return compensated_dot(field, mesh.areas);
}

inline double pore_volume(const CylinderSpec& s) { return std::numbers::pi * s.R * s.R * 2.0 * s.h; }
inline double wall_area(const CylinderSpec& s) { return 2.0 * std::numbers::pi * s.R * 2.0 * s.h; }
inline double inlet_area(const CylinderSpec& s) { return std::numbers::pi * s.R * s.R; }

} // namespace porecat
