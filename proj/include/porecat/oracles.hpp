#pragma once

// Reference solutions: separable mode decays, the Henry equilibrium, a
// lumped well-mixed ODE, and manufactured solutions of the linear problem.

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "porecat/errors.hpp"
#include "porecat/model/species.hpp"

namespace porecat {

/// Decay factor of cos(m phi) cos(k pi (z+h)/(2h)) under surface diffusion.
inline double surface_mode_decay(int m, int k, double dS, double R, double h, double t) {
    PORECAT_REQUIRE(m >= 0 && k >= 0, ConfigError, "surface_mode_decay: wavenumbers must be >= 0");
    const double kz = k * std::numbers::pi / (2.0 * h);
    return std::exp(-dS * (m * m / (R * R) + kz * kz) * t);
}

/// Decay factor of cos(k pi (z+h)/(2h)) under bulk diffusion with closed ends.
inline double bulk_mode_decay(int k, double d, double h, double t) {
    PORECAT_REQUIRE(k >= 0, ConfigError, "bulk_mode_decay: wavenumber must be >= 0");
    const double kz = k * std::numbers::pi / (2.0 * h);
    return std::exp(-d * kz * kz * t);
}

/// Eigenvalue of the assembled axial operator (unit diffusivity, per unit
/// volume) for the mode cos(k pi (z+h)/(2h)) on n_z cells.
inline double discrete_bulk_mode_eigenvalue(int k, double h, int n_z) {
    const double dz = 2.0 * h / n_z;
    return 2.0 / (dz * dz) * (1.0 - std::cos(k * std::numbers::pi * dz / (2.0 * h)));
}

/// Eigenvalue of the assembled wall operator (unit diffusivity, per unit
/// area) for cos(m phi) on n_phi columns.
inline double discrete_surface_mode_eigenvalue(int m, double R, int n_phi) {
    const double dphi = 2.0 * std::numbers::pi / n_phi;
    return 2.0 / (R * dphi * R * dphi) * (1.0 - std::cos(m * dphi));
}

struct HenryEquilibrium {
    double c = 0.0;
    double cs = 0.0;
};

inline HenryEquilibrium henry_equilibrium(double volume, double area, double k_ad, double k_de, double M0) {
    PORECAT_REQUIRE(volume > 0.0 && area > 0.0 && k_de > 0.0 && k_ad >= 0.0, ConfigError,
                    "henry_equilibrium: need volume, area, k_de > 0 and k_ad >= 0");
    const double c = M0 / (volume + area * k_ad / k_de);
    return {c, k_ad / k_de * c};
}

struct WellMixedSpec {
    double volume = 0.0;       ///< |Omega|
    double wall_area = 0.0;    ///< |Sigma|
    double inlet_area = 0.0;   ///< |Gamma_in|
    double throughflow = 0.0;  ///< volumetric outflow rate Q
    std::vector<double> g_in;
    std::vector<double> c0;
    std::vector<double> cs0;
    double t_end = 1.0;
    double fine_dt = 0.0;      ///< 0 picks 1e-4 t_end
};

struct WellMixedSample {
    double t = 0.0;
    std::vector<double> c;
    std::vector<double> cs;
};

/// Classical RK4 on the lumped system
///   |Omega| c' = -|Sigma| r(c, cs) - g_in |Gamma_in| - Q c,   cs' = r(c, cs) + r_ch(cs).
/// Returns the state at every requested time (ascending, within [0, t_end]).
inline std::vector<WellMixedSample> wellmixed_ode(const WellMixedSpec& spec, const Chemistry& chem,
                                                  std::span<const double> times) {
    const int n = chem.n_species();
    PORECAT_REQUIRE(spec.volume > 0.0 && spec.wall_area >= 0.0, ConfigError, "wellmixed_ode: bad geometry");
    PORECAT_REQUIRE(static_cast<int>(spec.c0.size()) == n && static_cast<int>(spec.cs0.size()) == n &&
                        static_cast<int>(spec.g_in.size()) == n,
                    ConfigError, "wellmixed_ode: need one c0, cs0 and g_in per species");
    const double h_max = spec.fine_dt > 0.0 ? spec.fine_dt : 1e-4 * spec.t_end;
    PORECAT_REQUIRE(h_max > 0.0, ConfigError, "wellmixed_ode: fine_dt must be > 0");

    using State = std::vector<double>;
    auto rhs = [&](const State& y, State& dy) {
        std::vector<double> cs(y.begin() + n, y.end()), rch(static_cast<std::size_t>(n), 0.0);
        if (!chem.reaction.is_zero()) chem.reaction.evaluate(cs, rch);
        for (int i = 0; i < n; ++i) {
            const double r = chem.sorption[i].evaluate(y[i], y[n + i]);
            dy[i] = (-spec.wall_area * r - spec.g_in[i] * spec.inlet_area - spec.throughflow * y[i]) / spec.volume;
            dy[n + i] = r + rch[i];
        }
    };
    auto rk4 = [&](State& y, double h) {
        const std::size_t m = y.size();
        State k1(m), k2(m), k3(m), k4(m), tmp(m);
        rhs(y, k1);
        for (std::size_t q = 0; q < m; ++q) tmp[q] = y[q] + 0.5 * h * k1[q];
        rhs(tmp, k2);
        for (std::size_t q = 0; q < m; ++q) tmp[q] = y[q] + 0.5 * h * k2[q];
        rhs(tmp, k3);
        for (std::size_t q = 0; q < m; ++q) tmp[q] = y[q] + h * k3[q];
        rhs(tmp, k4);
        for (std::size_t q = 0; q < m; ++q) y[q] += h / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
    };

    State y(spec.c0);
    y.insert(y.end(), spec.cs0.begin(), spec.cs0.end());
    std::vector<WellMixedSample> out;
    double t = 0.0;
    for (double target : times) {
        PORECAT_REQUIRE(target >= t - 1e-15 && target <= spec.t_end * (1.0 + 1e-12), ConfigError,
                        "wellmixed_ode: output times must be ascending within [0, t_end]");
        const double span = target - t;
        if (span > 0.0) {
            const auto steps = static_cast<long>(std::ceil(span / h_max - 1e-9));
            const double h = span / static_cast<double>(steps);
            for (long s = 0; s < steps; ++s) rk4(y, h);
            t = target;
        }
        out.push_back({target, State(y.begin(), y.begin() + n), State(y.begin() + n, y.end())});
    }
    return out;
}

/// Exact solution and data of the linear problem
///   c_t + u.grad c - d lap c = f in the pore,  cs_t - dS lap_S cs = fS on the wall,
///   (u.nu) c - d dc/dnu = g_in at z = -h,  -d dc/dnu = g_wall at r = R,  -d dc/dnu = g_out at z = h,
/// with the axial velocity u_z = u_max (1 - r^2/R^2).
class ManufacturedSolution {
public:
    struct Params {
        double R = 1.0, h = 1.0;
        double d = 1.0, dS = 1.0;
        double u_max = 0.0;
        int k = 1;  ///< axial wavenumber
        int m = 1;  ///< azimuthal wavenumber
    };

    static const std::vector<std::string>& presets() {
        static const std::vector<std::string> p{"zero", "bulk_cosine", "surface_cosine", "bulk_full", "surface_full"};
        return p;
    }

    ManufacturedSolution(std::string preset, Params p) : preset_(std::move(preset)), p_(p) {
        bool known = false;
        for (const auto& s : presets()) known = known || s == preset_;
        PORECAT_REQUIRE(known, ConfigError, "unknown manufactured preset '" + preset_ + "'");
        PORECAT_REQUIRE(p_.R > 0.0 && p_.h > 0.0 && p_.d > 0.0 && p_.dS > 0.0, ConfigError,
                        "manufactured solution: R, h, d, dS must be > 0");
        PORECAT_REQUIRE(p_.u_max == 0.0 || preset_ == "bulk_full" || preset_ == "zero", ConfigError,
                        "manufactured solution: only bulk_full carries a velocity");
    }

    const std::string& preset() const { return preset_; }
    const Params& params() const { return p_; }

    double bulk(double t, double r, double, double z) const {
        const double e = std::exp(-t);
        if (preset_ == "bulk_cosine") return e * std::cos(kz() * (z + p_.h));
        if (preset_ == "bulk_full")
            return e * (2.0 + std::cos(kz() * (z + p_.h)) + r * r / (p_.R * p_.R) + z / (2.0 * p_.h));
        return 0.0;
    }

    double surface(double t, double phi, double z) const {
        const double e = std::exp(-t);
        if (preset_ == "surface_cosine") return e * std::cos(p_.m * phi);
        if (preset_ == "surface_full") return e * (2.0 + std::cos(p_.m * phi) * std::cos(kz() * (z + p_.h)));
        return 0.0;
    }

    double f(double t, double r, double phi, double z) const {
        const double e = std::exp(-t);
        if (preset_ == "bulk_cosine") return (-1.0 + p_.d * kz() * kz()) * bulk(t, r, phi, z);
        if (preset_ == "bulk_full") {
            const double lap = e * (4.0 / (p_.R * p_.R) - kz() * kz() * std::cos(kz() * (z + p_.h)));
            return -bulk(t, r, phi, z) + uz(r) * dcdz(t, z) - p_.d * lap;
        }
        return 0.0;
    }

    double f_surface(double t, double phi, double z) const {
        const double e = std::exp(-t);
        if (preset_ == "surface_cosine") return (-1.0 + p_.dS * p_.m * p_.m / (p_.R * p_.R)) * surface(t, phi, z);
        if (preset_ == "surface_full") {
            const double mode = std::cos(p_.m * phi) * std::cos(kz() * (z + p_.h));
            return e * (-2.0 + (-1.0 + p_.dS * (p_.m * p_.m / (p_.R * p_.R) + kz() * kz())) * mode);
        }
        return 0.0;
    }

    /// Total outward flux density at the inlet point (r, phi, -h).
    double g_in(double t, double r, double) const {
        if (preset_ != "bulk_full") return 0.0;
        // nu = -e_z: (u.nu) c - d dc/dnu = -u_z c + d dc/dz.
        return -uz(r) * bulk(t, r, 0.0, -p_.h) + p_.d * dcdz(t, -p_.h);
    }

    double g_wall(double t, double, double) const {
        if (preset_ != "bulk_full") return 0.0;
        return -p_.d * std::exp(-t) * 2.0 / p_.R;
    }

    double g_out(double t, double, double) const {
        if (preset_ != "bulk_full") return 0.0;
        return -p_.d * dcdz(t, p_.h);
    }

private:
    double kz() const { return p_.k * std::numbers::pi / (2.0 * p_.h); }
    double uz(double r) const { return p_.u_max * (1.0 - r * r / (p_.R * p_.R)); }
    double dcdz(double t, double z) const {
        const double e = std::exp(-t);
        if (preset_ == "bulk_cosine") return -e * kz() * std::sin(kz() * (z + p_.h));
        if (preset_ == "bulk_full") return e * (-kz() * std::sin(kz() * (z + p_.h)) + 1.0 / (2.0 * p_.h));
        return 0.0;
    }

    std::string preset_;
    Params p_;
};

inline ManufacturedSolution manufactured_solution(const std::string& preset, ManufacturedSolution::Params p) {
    return ManufacturedSolution(preset, p);
}

} // namespace porecat
