#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "porecat/errors.hpp"

namespace porecat {

/// Initial-condition presets. Bulk profiles use `mode` as the axial
/// wavenumber k in cos(k pi (z+h)/(2h)); surface phi_cosine uses it as the
/// azimuthal wavenumber m.
enum class ProfileKind { constant, axial_cosine, radial_parabola, phi_cosine, z_cosine };

struct Profile {
    ProfileKind kind = ProfileKind::constant;
    double mean = 0.0;
    double amplitude = 0.0;
    int mode = 1;

    /// Value at (r, phi, z) in a pore of radius R and half-height h.
    double at(double r, double phi, double z, double R, double h) const {
        switch (kind) {
        case ProfileKind::constant: return mean;
        case ProfileKind::axial_cosine:
        case ProfileKind::z_cosine:
            return mean + amplitude * std::cos(mode * std::numbers::pi * (z + h) / (2.0 * h));
        case ProfileKind::radial_parabola: return mean + amplitude * (1.0 - r * r / (R * R));
        case ProfileKind::phi_cosine: return mean + amplitude * std::cos(mode * phi);
        }
        return mean;
    }

    double minimum() const {
        switch (kind) {
        case ProfileKind::constant: return mean;
        case ProfileKind::radial_parabola: return std::min(mean, mean + amplitude);
        default: return mean - std::abs(amplitude);
        }
    }
    double maximum() const {
        switch (kind) {
        case ProfileKind::constant: return mean;
        case ProfileKind::radial_parabola: return std::max(mean, mean + amplitude);
        default: return mean + std::abs(amplitude);
        }
    }
};

inline ProfileKind parse_profile_kind(const std::string& s) {
    if (s == "constant") return ProfileKind::constant;
    if (s == "axial_cosine") return ProfileKind::axial_cosine;
    if (s == "radial_parabola") return ProfileKind::radial_parabola;
    if (s == "phi_cosine") return ProfileKind::phi_cosine;
    if (s == "z_cosine") return ProfileKind::z_cosine;
    throw ConfigError("unknown profile kind '" + s + "'");
}

inline std::string to_string(ProfileKind k) {
    switch (k) {
    case ProfileKind::constant: return "constant";
    case ProfileKind::axial_cosine: return "axial_cosine";
    case ProfileKind::radial_parabola: return "radial_parabola";
    case ProfileKind::phi_cosine: return "phi_cosine";
    case ProfileKind::z_cosine: return "z_cosine";
    }
    return "constant";
}

struct ScenarioSpec {
    std::vector<Profile> bulk_initial;
    std::vector<Profile> surface_initial;
    std::vector<double> g_in;  ///< per unit inlet area; <= 0 injects mass
    double t_end = 1.0;
    bool closed_pore = false;

    /// Sign conditions under which nonnegativity is guaranteed.
    void validate(int n_species, bool require_nonnegative) const {
        PORECAT_REQUIRE(static_cast<int>(bulk_initial.size()) == n_species &&
                            static_cast<int>(surface_initial.size()) == n_species &&
                            static_cast<int>(g_in.size()) == n_species,
                        ConfigError, "scenario: need one bulk IC, surface IC and g_in per species");
        PORECAT_REQUIRE(t_end > 0.0, ConfigError, "scenario: t_end must be > 0");
        for (int i = 0; i < n_species; ++i) {
            PORECAT_REQUIRE(std::isfinite(g_in[i]), ConfigError, "scenario: g_in must be finite");
            if (closed_pore)
                PORECAT_REQUIRE(g_in[i] == 0.0, ConfigError, "scenario: closed_pore requires g_in = 0");
            if (require_nonnegative) {
                PORECAT_REQUIRE(g_in[i] <= 0.0, ConfigError,
                                "scenario: g_in must be <= 0 (inflow injects mass) for species " +
                                    std::to_string(i + 1));
                PORECAT_REQUIRE(bulk_initial[i].minimum() >= 0.0 && surface_initial[i].minimum() >= 0.0,
                                ConfigError,
                                "scenario: initial concentrations must be non-negative for species " +
                                    std::to_string(i + 1));
            }
        }
    }
};

} // namespace porecat
