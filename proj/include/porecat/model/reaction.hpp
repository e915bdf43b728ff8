#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "porecat/errors.hpp"
#include "porecat/model/polynomial.hpp"
#include "porecat/model/rate_expr.hpp"

namespace porecat {

/// One reversible mass-action step sum(nu_f) <-> sum(nu_b) with net rate
/// w = k_re (prod y^nu_f - kappa prod y^nu_b); species i is produced at
/// (nu_b[i] - nu_f[i]) w.
struct ReversibleReaction {
    std::vector<int> forward;
    std::vector<int> backward;
    double k_re = 1.0;
    double kappa = 1.0;
};

struct MassActionNetwork {
    std::vector<ReversibleReaction> reactions;
};

/// One expression per species in the variables cs_1 .. cs_N.
struct CustomNetwork {
    std::vector<RateExpr> rates;
    Bindings constants;
};

inline std::vector<std::string> surface_variable_names(int n) {
    std::vector<std::string> v;
    for (int i = 1; i <= n; ++i) v.push_back("cs_" + std::to_string(i));
    return v;
}

class ReactionNetwork {
public:
    using Variant = std::variant<MassActionNetwork, CustomNetwork>;

    /// The zero network on n species.
    explicit ReactionNetwork(int n_species = 0) : n_(n_species), law_(MassActionNetwork{}) { build_polys(); }

    ReactionNetwork(int n_species, MassActionNetwork m) : n_(n_species), law_(std::move(m)) {
        for (const auto& r : std::get<MassActionNetwork>(law_).reactions) {
            PORECAT_REQUIRE(static_cast<int>(r.forward.size()) == n_ && static_cast<int>(r.backward.size()) == n_,
                            ConfigError, "reaction: stoichiometric vectors must have one entry per species");
            PORECAT_REQUIRE(std::all_of(r.forward.begin(), r.forward.end(), [](int v) { return v >= 0; }) &&
                                std::all_of(r.backward.begin(), r.backward.end(), [](int v) { return v >= 0; }),
                            ConfigError, "reaction: stoichiometric coefficients must be non-negative");
            PORECAT_REQUIRE(r.k_re > 0.0 && r.kappa > 0.0, ConfigError, "reaction: k_re and kappa must be > 0");
        }
        build_polys();
    }

    ReactionNetwork(int n_species, CustomNetwork c) : n_(n_species), law_(std::move(c)) {
        const auto& cu = std::get<CustomNetwork>(law_);
        PORECAT_REQUIRE(static_cast<int>(cu.rates.size()) == n_, ConfigError,
                        "reaction: custom network needs one rate per species");
        const auto names = surface_variable_names(n_);
        for (const auto& e : cu.rates) {
            compiled_.emplace_back(e, names, cu.constants);
            std::vector<CompiledExpr> row;
            for (const auto& v : names) row.emplace_back(e.derivative(v), names, cu.constants);
            jacobian_.push_back(std::move(row));
            if (auto p = e.to_polynomial(names, cu.constants)) polys_.push_back(*p);
        }
        if (static_cast<int>(polys_.size()) != n_) polys_.clear();
    }

    /// (R1): A + B <-> P on three species.
    static ReactionNetwork r1(double k_re, double kappa) {
        return ReactionNetwork(3, MassActionNetwork{{ReversibleReaction{{1, 1, 0}, {0, 0, 1}, k_re, kappa}}});
    }

    int n_species() const { return n_; }
    const Variant& variant() const { return law_; }
    bool is_mass_action() const { return std::holds_alternative<MassActionNetwork>(law_); }
    bool is_zero() const { return is_mass_action() && std::get<MassActionNetwork>(law_).reactions.empty(); }

    /// Polynomial form of every rate, when available (mass action always;
    /// custom networks only when every expression is polynomial).
    const std::vector<Polynomial>& polynomials() const { return polys_; }
    bool has_polynomial_form() const { return static_cast<int>(polys_.size()) == n_; }

    /// Rates at the componentwise positive part of `cs`.
    void evaluate(std::span<const double> cs, std::span<double> out) const {
        thread_local std::vector<double> y;
        positive_part(cs, y);
        if (const auto* m = std::get_if<MassActionNetwork>(&law_)) {
            std::fill(out.begin(), out.end(), 0.0);
            for (const auto& r : m->reactions) {
                const double w = r.k_re * (monomial(r.forward, y) - r.kappa * monomial(r.backward, y));
                for (int i = 0; i < n_; ++i) out[i] += (r.backward[i] - r.forward[i]) * w;
            }
            return;
        }
        for (int i = 0; i < n_; ++i) out[i] = compiled_[static_cast<std::size_t>(i)](y);
    }

    std::vector<double> evaluate(std::span<const double> cs) const {
        std::vector<double> out(static_cast<std::size_t>(n_));
        evaluate(cs, out);
        return out;
    }

    /// Jacobian of y -> r(y+) at `cs`, row-major n x n. Entries for
    /// negative components vanish.
    void jacobian(std::span<const double> cs, std::span<double> out) const {
        thread_local std::vector<double> y;
        positive_part(cs, y);
        std::fill(out.begin(), out.end(), 0.0);
        if (const auto* m = std::get_if<MassActionNetwork>(&law_)) {
            for (const auto& r : m->reactions) {
                for (int j = 0; j < n_; ++j) {
                    if (cs[j] < 0.0) continue;
                    const double dw = r.k_re * (monomial_derivative(r.forward, y, j) -
                                                r.kappa * monomial_derivative(r.backward, y, j));
                    for (int i = 0; i < n_; ++i) out[i * n_ + j] += (r.backward[i] - r.forward[i]) * dw;
                }
            }
            return;
        }
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j)
                if (cs[j] >= 0.0) out[i * n_ + j] = jacobian_[i][j](y);
    }

private:
    void positive_part(std::span<const double> cs, std::vector<double>& y) const {
        y.resize(static_cast<std::size_t>(n_));
        for (int i = 0; i < n_; ++i) y[i] = std::max(cs[i], 0.0);
    }

    static double monomial(const std::vector<int>& e, const std::vector<double>& y) {
        double m = 1.0;
        for (std::size_t i = 0; i < e.size(); ++i)
            for (int k = 0; k < e[i]; ++k) m *= y[i];
        return m;
    }

    static double monomial_derivative(const std::vector<int>& e, const std::vector<double>& y, int j) {
        if (e[j] == 0) return 0.0;
        double m = e[j];
        for (std::size_t i = 0; i < e.size(); ++i) {
            const int k = static_cast<int>(i) == j ? e[i] - 1 : e[i];
            for (int q = 0; q < k; ++q) m *= y[i];
        }
        return m;
    }

    void build_polys() {
        polys_.assign(static_cast<std::size_t>(n_), Polynomial(n_));
        for (const auto& r : std::get<MassActionNetwork>(law_).reactions) {
            Polynomial w(n_);
            w.add_term(r.forward, r.k_re);
            w.add_term(r.backward, -r.k_re * r.kappa);
            for (int i = 0; i < n_; ++i) polys_[i] += w * static_cast<double>(r.backward[i] - r.forward[i]);
        }
    }

    int n_;
    Variant law_;
    std::vector<Polynomial> polys_;
    std::vector<CompiledExpr> compiled_;
    std::vector<std::vector<CompiledExpr>> jacobian_;
};

} // namespace porecat
