#pragma once

#include <set>
#include <string>
#include <vector>

#include "porecat/errors.hpp"
#include "porecat/model/reaction.hpp"
#include "porecat/model/sorption.hpp"

namespace porecat {

struct SpeciesSet {
    std::vector<std::string> names;
    std::vector<double> d;          ///< bulk diffusivities
    std::vector<double> d_surface;  ///< surface diffusivities

    int size() const { return static_cast<int>(names.size()); }

    int index_of(const std::string& name) const {
        for (int i = 0; i < size(); ++i)
            if (names[i] == name) return i;
        return -1;
    }

    void validate() const {
        PORECAT_REQUIRE(!names.empty(), ConfigError, "species: at least one species is required");
        PORECAT_REQUIRE(d.size() == names.size() && d_surface.size() == names.size(), ConfigError,
                        "species: need one bulk and one surface diffusivity per species");
        std::set<std::string> seen;
        for (int i = 0; i < size(); ++i) {
            PORECAT_REQUIRE(seen.insert(names[i]).second, ConfigError,
                            "species: duplicate species name '" + names[i] + "'");
            PORECAT_REQUIRE(d[i] > 0.0, ConfigError,
                            "species '" + names[i] + "': bulk diffusivity d must be > 0 (got " +
                                std::to_string(d[i]) + ")");
            PORECAT_REQUIRE(d_surface[i] > 0.0, ConfigError,
                            "species '" + names[i] + "': surface diffusivity must be > 0 (got " +
                                std::to_string(d_surface[i]) + ")");
        }
    }
};

/// Species with their per-species sorption laws and the surface network.
struct Chemistry {
    SpeciesSet species;
    std::vector<SorptionLaw> sorption;
    ReactionNetwork reaction;
    /// Weighted species sums conserved by the network (e.g. A + P for (R1)).
    std::vector<std::vector<double>> conserved;

    int n_species() const { return species.size(); }

    void validate() const {
        species.validate();
        PORECAT_REQUIRE(static_cast<int>(sorption.size()) == species.size(), ConfigError,
                        "chemistry: need one sorption law per species");
        PORECAT_REQUIRE(reaction.n_species() == species.size(), ConfigError,
                        "chemistry: reaction network species count does not match the species list");
        for (const auto& w : conserved)
            PORECAT_REQUIRE(static_cast<int>(w.size()) == species.size(), ConfigError,
                            "chemistry: conserved combination needs one weight per species");
    }
};

} // namespace porecat
