#pragma once

// Field snapshots (CSV, legacy VTK), the run summary (JSON), the per-step
// ledger and Matrix Market dumps.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <unsupported/Eigen/SparseExtra>

#include "porecat/diagnostics.hpp"
#include "porecat/discretization.hpp"
#include "porecat/io/csv.hpp"
#include "porecat/simulation.hpp"

namespace porecat {

using Json = nlohmann::json;

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
    }
    std::ofstream f(path);
    if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
    return f;
}

inline std::string snapshot_name(const std::string& prefix, const std::string& kind, int step, const std::string& ext) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%08d", step);
    return prefix + "_" + kind + "_" + buf + "." + ext;
}

/// Columns: cell, i, j, k, r, phi, z, then one per species.
inline void write_bulk_csv(const std::filesystem::path& path, const Discretization& disc,
                           const std::vector<std::string>& names, const BulkState& c) {
    const auto& m = disc.mesh.bulk;
    auto f = open_output(path);
    f << "cell,i,j,k,r,phi,z";
    for (const auto& n : names) f << "," << n;
    f << "\n";
    for (int i = 0; i < m.spec.n_r; ++i)
        for (int j = 0; j < m.spec.n_phi; ++j)
            for (int k = 0; k < m.spec.n_z; ++k) {
                const int cell = m.index(i, j, k);
                const auto& x = m.centers[cell];
                f << cell << "," << i << "," << j << "," << k << "," << format_double(x.r) << ","
                  << format_double(x.phi) << "," << format_double(x.z);
                for (const auto& v : c) f << "," << format_double(v[cell]);
                f << "\n";
            }
    if (!f) throw IoError("write failed: '" + path.string() + "'");
}

/// Columns: patch, j, k, phi, z, then one per species.
inline void write_surface_csv(const std::filesystem::path& path, const Discretization& disc,
                              const std::vector<std::string>& names, const SurfaceState& cs) {
    const auto& s = disc.mesh.surface;
    auto f = open_output(path);
    f << "patch,j,k,phi,z";
    for (const auto& n : names) f << "," << n;
    f << "\n";
    for (int j = 0; j < s.n_phi; ++j)
        for (int k = 0; k < s.n_z; ++k) {
            const int p = s.index(j, k);
            f << p << "," << j << "," << k << "," << format_double(s.phi_centers[p]) << ","
              << format_double(s.z_centers[p]);
            for (const auto& v : cs) f << "," << format_double(v[p]);
            f << "\n";
        }
    if (!f) throw IoError("write failed: '" + path.string() + "'");
}

/// Structured grid in Cartesian coordinates; points run r fastest, then
/// phi, then z, and so do the cells.
inline void write_bulk_vtk(const std::filesystem::path& path, const Discretization& disc,
                           const std::vector<std::string>& names, const BulkState& c) {
    const auto& m = disc.mesh.bulk;
    const int nr = m.spec.n_r, np = m.spec.n_phi, nz = m.spec.n_z;
    auto f = open_output(path);
    f << "# vtk DataFile Version 3.0\nporecat bulk\nASCII\nDATASET STRUCTURED_GRID\n";
    f << "DIMENSIONS " << nr + 1 << " " << np + 1 << " " << nz + 1 << "\n";
    f << "POINTS " << (nr + 1) * (np + 1) * (nz + 1) << " double\n";
    for (int k = 0; k <= nz; ++k)
        for (int j = 0; j <= np; ++j)
            for (int i = 0; i <= nr; ++i) {
                const double r = m.r_face(i), phi = j * m.dphi, z = -m.spec.h + k * m.dz;
                f << format_double(r * std::cos(phi)) << " " << format_double(r * std::sin(phi)) << " "
                  << format_double(z) << "\n";
            }
    f << "CELL_DATA " << m.n_cells() << "\n";
    for (std::size_t s = 0; s < names.size(); ++s) {
        f << "SCALARS " << names[s] << " double 1\nLOOKUP_TABLE default\n";
        for (int k = 0; k < nz; ++k)
            for (int j = 0; j < np; ++j)
                for (int i = 0; i < nr; ++i) f << format_double(c[s][m.index(i, j, k)]) << "\n";
    }
    if (!f) throw IoError("write failed: '" + path.string() + "'");
}

/// The wall as quadrilateral polygons, one per patch in patch order.
inline void write_surface_vtk(const std::filesystem::path& path, const Discretization& disc,
                              const std::vector<std::string>& names, const SurfaceState& cs) {
    const auto& s = disc.mesh.surface;
    auto f = open_output(path);
    f << "# vtk DataFile Version 3.0\nporecat surface\nASCII\nDATASET POLYDATA\n";
    f << "POINTS " << (s.n_phi + 1) * (s.n_z + 1) << " double\n";
    auto point = [&](int j, int k) { return j * (s.n_z + 1) + k; };
    for (int j = 0; j <= s.n_phi; ++j)
        for (int k = 0; k <= s.n_z; ++k) {
            const double phi = j * s.dphi, z = -s.h + k * s.dz;
            f << format_double(s.R * std::cos(phi)) << " " << format_double(s.R * std::sin(phi)) << " "
              << format_double(z) << "\n";
        }
    f << "POLYGONS " << s.n_patches() << " " << 5 * s.n_patches() << "\n";
    for (int j = 0; j < s.n_phi; ++j)
        for (int k = 0; k < s.n_z; ++k)
            f << "4 " << point(j, k) << " " << point(j + 1, k) << " " << point(j + 1, k + 1) << " "
              << point(j, k + 1) << "\n";
    f << "CELL_DATA " << s.n_patches() << "\n";
    for (std::size_t q = 0; q < names.size(); ++q) {
        f << "SCALARS " << names[q] << " double 1\nLOOKUP_TABLE default\n";
        for (int p = 0; p < s.n_patches(); ++p) f << format_double(cs[q][p]) << "\n";
    }
    if (!f) throw IoError("write failed: '" + path.string() + "'");
}

inline Json to_json(const CheckResult& c) {
    Json j{{"assumption", c.assumption},
           {"verdict", to_string(c.verdict)},
           {"method", to_string(c.method)},
           {"detail", c.detail}};
    if (!c.witness.empty()) j["witness"] = c.witness;
    if (!c.constants.empty()) j["constants"] = c.constants;
    return j;
}

inline Json to_json(const ValidationReport& r) {
    Json checks = Json::array();
    for (const auto& c : r.checks) checks.push_back(to_json(c));
    return Json{{"subject", r.subject}, {"passed", r.passed()}, {"checks", checks}};
}

/// Finite numbers as themselves, infinities and NaN as null.
inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json summary_json(const std::vector<std::string>& names, const MonitorReport& rep) {
    Json j;
    j["species"] = names;
    j["min_bulk"] = number_or_null(rep.min_bulk);
    j["min_surface"] = number_or_null(rep.min_surface);
    j["ledger_max_residual"] = rep.ledger_max_residual;
    if (rep.gronwall)
        j["gronwall"] = Json{{"M", number_or_null(rep.gronwall->M)},
                             {"omega", number_or_null(rep.gronwall->omega)},
                             {"violation", number_or_null(rep.gronwall->violation)}};
    else
        j["gronwall"] = nullptr;
    Json comps = Json::array();
    for (const auto& c : rep.comparisons)
        comps.push_back(Json{{"species", names.at(static_cast<std::size_t>(c.species))},
                             {"C", c.C},
                             {"max_excess", number_or_null(c.max_excess)},
                             {"worst_step", c.worst_step},
                             {"worst_cell", c.worst_cell},
                             {"passed", c.passed}});
    j["comparisons"] = comps;
    Json vals = Json::array();
    for (const auto& v : rep.validators) vals.push_back(to_json(v));
    j["validators"] = vals;
    return j;
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
    auto f = open_output(path);
    f << j.dump(2) << "\n";
    if (!f) throw IoError("write failed: '" + path.string() + "'");
}

inline Json read_json(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open '" + path.string() + "'");
    try {
        return Json::parse(f);
    } catch (const Json::parse_error& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

/// One row per recorded step: masses, cumulative boundary and reaction
/// totals, and the relative step residual, per species.
inline void write_ledger_csv(const std::filesystem::path& path, const MassLedger& ledger,
                             const std::vector<std::string>& names) {
    auto f = open_output(path);
    f << "step,t";
    for (const char* col : {"bulk", "surface", "inflow", "outflow", "reaction", "residual"})
        for (const auto& n : names) f << "," << col << "_" << n;
    f << "\n";
    for (const auto& r : ledger.rows()) {
        f << r.step << "," << format_double(r.t);
        for (const auto* v : {&r.bulk_mass, &r.surface_mass, &r.inflow, &r.outflow, &r.reaction, &r.residual})
            for (double x : *v) f << "," << format_double(x);
        f << "\n";
    }
    if (!f) throw IoError("write failed: '" + path.string() + "'");
}

inline void write_matrix_market(const std::filesystem::path& path, const SparseMatrix& a) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    if (!Eigen::saveMarket(a, path.string())) throw IoError("cannot write '" + path.string() + "'");
}

} // namespace porecat
