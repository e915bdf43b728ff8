#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <variant>

#include "porecat/errors.hpp"
#include "porecat/model/rate_expr.hpp"
#include "porecat/model/smooth.hpp"

namespace porecat {

/// No exchange with the wall: r = 0.
struct NoSorption {};

/// Linear Henry law r = k_ad c - k_de cs.
struct HenryLaw {
    double k_ad = 1.0;
    double k_de = 1.0;
};

/// Langmuir law with the smooth cut-offs that make it globally Lipschitz:
/// r = k_ad zeta_B(c) zeta_+(1 - zeta_+(cs)/c_inf) - k_de cs.
struct ModifiedLangmuirLaw {
    double k_ad = 1.0;
    double k_de = 1.0;
    double c_inf = 1.0;
    double eps_plus = 1e-3;
    double b_cap = 10.0;
};

/// Arbitrary rate in the variables `c` (bulk trace) and `cs` (surface).
/// `constants` binds every other identifier; if it binds `k_ad` and `k_de`
/// those are the constants the linear-bound check uses.
struct CustomSorption {
    RateExpr expr;
    Bindings constants;
};

class SorptionLaw {
public:
    using Variant = std::variant<NoSorption, HenryLaw, ModifiedLangmuirLaw, CustomSorption>;

    SorptionLaw() : law_(NoSorption{}) {}
    SorptionLaw(NoSorption n) : law_(n) {}

    SorptionLaw(HenryLaw h) : law_(h) {
        PORECAT_REQUIRE(h.k_ad > 0.0 && h.k_de > 0.0, ConfigError,
                        "sorption: Henry constants k_ad, k_de must be > 0");
    }

    SorptionLaw(ModifiedLangmuirLaw l) : law_(l) {
        PORECAT_REQUIRE(l.k_ad > 0.0 && l.k_de > 0.0 && l.c_inf > 0.0 && l.eps_plus > 0.0 && l.b_cap > 0.0,
                        ConfigError,
                        "sorption: modified Langmuir constants k_ad, k_de, c_inf, eps_plus, b_cap must be > 0");
    }

    SorptionLaw(CustomSorption c) : law_(std::move(c)) {
        const auto& cu = std::get<CustomSorption>(law_);
        static const std::string args_names[] = {"c", "cs"};
        value_ = CompiledExpr(cu.expr, args_names, cu.constants);
        d_c_ = CompiledExpr(cu.expr.derivative("c"), args_names, cu.constants);
        d_cs_ = CompiledExpr(cu.expr.derivative("cs"), args_names, cu.constants);
        for (double c : {0.0, 1.0, 1e3, 1e6}) {
            for (double cs : {0.0, 1.0, 1e3, 1e6}) {
                const double v = evaluate(c, cs);
                PORECAT_REQUIRE(std::isfinite(v), ConfigError,
                                "sorption: custom expression is not finite at (c, cs) = (" + std::to_string(c) +
                                    ", " + std::to_string(cs) + ")");
            }
        }
    }

    const Variant& variant() const { return law_; }

    std::string kind_name() const {
        switch (law_.index()) {
        case 0: return "none";
        case 1: return "henry";
        case 2: return "modified_langmuir";
        default: return "custom";
        }
    }

    bool is_none() const { return std::holds_alternative<NoSorption>(law_); }

    double evaluate(double c, double cs) const {
        if (is_none()) return 0.0;
        if (const auto* h = std::get_if<HenryLaw>(&law_)) return h->k_ad * c - h->k_de * cs;
        if (const auto* l = std::get_if<ModifiedLangmuirLaw>(&law_)) {
            const double cover = 1.0 - zeta_plus(cs, l->eps_plus) / l->c_inf;
            return l->k_ad * zeta_b(c, l->b_cap) * zeta_plus(cover, l->eps_plus) - l->k_de * cs;
        }
        const std::array<double, 2> a{c, cs};
        return value_(a);
    }

    /// (dr/dc, dr/dcs).
    std::array<double, 2> gradient(double c, double cs) const {
        if (is_none()) return {0.0, 0.0};
        if (const auto* h = std::get_if<HenryLaw>(&law_)) return {h->k_ad, -h->k_de};
        if (const auto* l = std::get_if<ModifiedLangmuirLaw>(&law_)) {
            const double cover = 1.0 - zeta_plus(cs, l->eps_plus) / l->c_inf;
            const double zc = zeta_plus(cover, l->eps_plus);
            const double dzc = zeta_plus_derivative(cover, l->eps_plus);
            const double dr_dc = l->k_ad * zeta_b_derivative(c, l->b_cap) * zc;
            const double dr_dcs = -l->k_ad * zeta_b(c, l->b_cap) * dzc *
                                      zeta_plus_derivative(cs, l->eps_plus) / l->c_inf -
                                  l->k_de;
            return {dr_dc, dr_dcs};
        }
        const std::array<double, 2> a{c, cs};
        return {d_c_(a), d_cs_(a)};
    }

    /// The (k_ad, k_de) pair of the linear bounds -k_de cs <= r <= k_ad c, if
    /// the law declares one.
    std::optional<std::array<double, 2>> declared_constants() const {
        if (is_none()) return std::array{0.0, 0.0};
        if (const auto* h = std::get_if<HenryLaw>(&law_)) return std::array{h->k_ad, h->k_de};
        if (const auto* l = std::get_if<ModifiedLangmuirLaw>(&law_)) return std::array{l->k_ad, l->k_de};
        const auto& cu = std::get<CustomSorption>(law_);
        auto a = cu.constants.find("k_ad");
        auto d = cu.constants.find("k_de");
        if (a == cu.constants.end() || d == cu.constants.end()) return std::nullopt;
        return std::array{a->second, d->second};
    }

private:
    Variant law_;
    CompiledExpr value_, d_c_, d_cs_;
};

} // namespace porecat
