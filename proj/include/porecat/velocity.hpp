#pragma once

#include <array>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "porecat/errors.hpp"
#include "porecat/geometry.hpp"
#include "porecat/summation.hpp"

namespace porecat {

struct ZeroVelocity {};

/// Axial pipe flow u = (0, 0, U_max (1 - r^2/R^2)).
struct PoiseuilleVelocity {
    double u_max = 0.0;
};

/// Face-normal velocities, one per entry of BulkMesh::faces, signed along
/// the face's stored normal.
struct TabulatedVelocity {
    std::vector<double> normal_velocity;
};

using VelocityField = std::variant<ZeroVelocity, PoiseuilleVelocity, TabulatedVelocity>;

/// Cylindrical components (u_r, u_phi, u_z) at a point of the closed pore.
inline std::array<double, 3> eval_velocity(const VelocityField& field, const BulkMesh& mesh, const CylPoint& p) {
    const auto& s = mesh.spec;
    const double tol = 1e-12 * std::max(s.R, s.h);
    PORECAT_REQUIRE(p.r >= 0.0 && p.r <= s.R + tol && std::abs(p.z) <= s.h + tol, ConfigError,
                    "eval_velocity: point (r=" + std::to_string(p.r) + ", z=" + std::to_string(p.z) +
                        ") lies outside the pore");
    if (std::holds_alternative<ZeroVelocity>(field)) return {0.0, 0.0, 0.0};
    if (const auto* pv = std::get_if<PoiseuilleVelocity>(&field)) {
        const double rr = std::min(p.r, s.R) / s.R;
        return {0.0, 0.0, pv->u_max * (1.0 - rr * rr)};
    }
    // Tabulated: average the two opposing faces of the containing cell.
    const auto& tab = std::get<TabulatedVelocity>(field);
    const int i = std::min(static_cast<int>(p.r / mesh.dr), s.n_r - 1);
    const double phi = std::fmod(std::fmod(p.phi, 2.0 * std::numbers::pi) + 2.0 * std::numbers::pi,
                                 2.0 * std::numbers::pi);
    const int j = std::min(static_cast<int>(phi / mesh.dphi), s.n_phi - 1);
    const int k = std::min(static_cast<int>((p.z + s.h) / mesh.dz), s.n_z - 1);
    const int cell = mesh.index(i, j, k);
    std::array<double, 3> sum{0.0, 0.0, 0.0};
    std::array<int, 3> count{0, 0, 0};
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& face = mesh.faces[f];
        if (face.owner != cell && face.neighbour != cell) continue;
        const int a = face.axis == Axis::r ? 0 : face.axis == Axis::phi ? 1 : 2;
        const double sign = face.normal[static_cast<std::size_t>(a)];
        sum[static_cast<std::size_t>(a)] += sign * tab.normal_velocity[f];
        ++count[static_cast<std::size_t>(a)];
    }
    for (int a = 0; a < 3; ++a)
        if (count[a] > 0) sum[a] /= count[a];
    return sum;
}

/// Volumetric flux u . n A through every face, along the face normal.
inline std::vector<double> face_fluxes(const VelocityField& field, const BulkMesh& mesh) {
    std::vector<double> flux(mesh.faces.size(), 0.0);
    if (const auto* pv = std::get_if<PoiseuilleVelocity>(&field)) {
        const double R2 = mesh.spec.R * mesh.spec.R;
        for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
            const auto& face = mesh.faces[f];
            if (face.axis != Axis::z) continue;
            // Exact integral of U (1 - r^2/R^2) over the annular sector.
            const int i = static_cast<int>(face.center.r / mesh.dr);
            const double lo = mesh.r_face(i), hi = mesh.r_face(i + 1);
            const double integral = 0.5 * (hi * hi - lo * lo) - (hi * hi * hi * hi - lo * lo * lo * lo) / (4.0 * R2);
            flux[f] = face.normal[2] * pv->u_max * mesh.dphi * integral;
        }
    } else if (const auto* tab = std::get_if<TabulatedVelocity>(&field)) {
        PORECAT_REQUIRE(tab->normal_velocity.size() == mesh.faces.size(), ConfigError,
                        "tabulated velocity: expected one value per mesh face");
        for (std::size_t f = 0; f < mesh.faces.size(); ++f) flux[f] = tab->normal_velocity[f] * mesh.faces[f].area;
    }
    return flux;
}

struct AvelReport {
    bool passed = true;
    double max_divergence = 0.0;  ///< max |sum of outward fluxes| / volume
    double velocity_scale = 0.0;
    double inflow_rate = 0.0;     ///< volumetric, through the inlet
    double outflow_rate = 0.0;
    std::vector<int> divergence_cells;
    std::vector<int> inflow_violations;   ///< inlet faces with u.nu > 0
    std::vector<int> lateral_violations;  ///< wall faces with u.nu != 0
    std::vector<int> outflow_violations;  ///< outlet faces with u.nu < 0
};

/// Discrete divergence-free and boundary sign conditions.
inline AvelReport validate_avel(const VelocityField& field, const BulkMesh& mesh) {
    AvelReport rep;
    const auto flux = face_fluxes(field, mesh);
    for (std::size_t f = 0; f < mesh.faces.size(); ++f)
        if (mesh.faces[f].area > 0.0) rep.velocity_scale = std::max(rep.velocity_scale, std::abs(flux[f]) / mesh.faces[f].area);
    const double scale = rep.velocity_scale > 0.0 ? rep.velocity_scale : 1.0;

    std::vector<CompensatedSum> net(mesh.volumes.size());
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& face = mesh.faces[f];
        net[static_cast<std::size_t>(face.owner)].add(flux[f]);
        if (face.neighbour >= 0) net[static_cast<std::size_t>(face.neighbour)].add(-flux[f]);
    }
    for (std::size_t c = 0; c < net.size(); ++c) {
        const double div = std::abs(net[c].value()) / mesh.volumes[c];
        rep.max_divergence = std::max(rep.max_divergence, div);
        if (div > 1e-12 * scale) rep.divergence_cells.push_back(static_cast<int>(c));
    }
    const double zero_tol = 1e-14 * scale;
    CompensatedSum in, out;
    for (int f : mesh.inflow_faces) {
        in.add(-flux[f]);
        if (flux[f] > zero_tol * mesh.faces[f].area) rep.inflow_violations.push_back(f);
    }
    for (int f : mesh.outflow_faces) {
        out.add(flux[f]);
        if (flux[f] < -zero_tol * mesh.faces[f].area) rep.outflow_violations.push_back(f);
    }
    for (int f : mesh.lateral_faces)
        if (std::abs(flux[f]) > zero_tol * mesh.faces[f].area) rep.lateral_violations.push_back(f);
    rep.inflow_rate = in.value();
    rep.outflow_rate = out.value();
    rep.passed = rep.divergence_cells.empty() && rep.inflow_violations.empty() && rep.lateral_violations.empty() &&
                 rep.outflow_violations.empty();
    return rep;
}

} // namespace porecat
