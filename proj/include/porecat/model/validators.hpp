#pragma once

// Checks of the structural assumptions on sorption and reaction rates.
// Conditions quantified over [0, inf) are checked on finite grids, and
// symbolically where the rate is a polynomial. Every result records the
// method that certified it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "porecat/errors.hpp"
#include "porecat/model/reaction.hpp"
#include "porecat/model/sorption.hpp"

namespace porecat {

enum class Verdict { pass, fail, not_applicable };
enum class CheckMethod { symbolic, sampled };

inline std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::not_applicable: return "not_applicable";
    }
    return "fail";
}
inline std::string to_string(CheckMethod m) { return m == CheckMethod::symbolic ? "symbolic" : "sampled"; }

struct CheckResult {
    std::string assumption;  ///< A_sorp_F, A_sorp_M, A_sorp_B, A_ch_F, A_ch_N, A_ch_P, A_ch_S
    Verdict verdict = Verdict::pass;
    CheckMethod method = CheckMethod::sampled;
    std::vector<double> witness;  ///< failing point, empty on pass
    std::string detail;
    std::vector<double> constants;  ///< smallest constants found, meaning per assumption

    bool passed() const { return verdict == Verdict::pass; }
};

struct ValidationReport {
    std::string subject;
    std::vector<CheckResult> checks;

    bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.verdict != Verdict::fail; });
    }
    const CheckResult* find(const std::string& assumption) const {
        for (const auto& c : checks)
            if (c.assumption == assumption) return &c;
        return nullptr;
    }
    std::vector<std::string> failures() const {
        std::vector<std::string> out;
        for (const auto& c : checks)
            if (c.verdict == Verdict::fail) out.push_back(c.assumption);
        return out;
    }
};

struct ValidationConfig {
    double gamma = 6.0;        ///< claimed growth exponent
    double M_growth = 1.0;     ///< claimed growth constant (reported against)
    double sorption_bound = 100.0;
    int sorption_points = 41;
    double reaction_bound = 100.0;
    int reaction_points = 11;
    int max_grid_species = 4;  ///< beyond this, random sampling
    int random_samples = 20000;
    std::uint64_t seed = 20240611;
    double tolerance = 1e-12;

    void validate() const {
        PORECAT_REQUIRE(gamma >= 1.0, ConfigError, "validation: gamma must be >= 1");
        PORECAT_REQUIRE(M_growth > 0.0, ConfigError, "validation: M_growth must be > 0");
        PORECAT_REQUIRE(sorption_points >= 3 && reaction_points >= 2, ConfigError,
                        "validation: sample grids need at least 3 (sorption) / 2 (reaction) points");
    }
};

namespace detail {

inline std::string point_string(const std::vector<double>& p) {
    std::ostringstream os;
    os.precision(6);
    os << "(";
    for (std::size_t i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
    os << ")";
    return os.str();
}

/// Visits sample points of [0, bound]^n: the full tensor grid for small n,
/// otherwise `samples` uniform random points (seeded, so reproducible)
/// plus the corner origin.
template <class F>
void for_each_sample(int n, double bound, int points, const ValidationConfig& cfg, F&& visit) {
    std::vector<double> y(static_cast<std::size_t>(n), 0.0);
    if (n <= cfg.max_grid_species) {
        std::vector<int> idx(static_cast<std::size_t>(n), 0);
        const double step = bound / (points - 1);
        while (true) {
            for (int i = 0; i < n; ++i) y[i] = idx[i] * step;
            visit(y);
            int d = 0;
            while (d < n && ++idx[d] == points) idx[d++] = 0;
            if (d == n) break;
        }
        return;
    }
    visit(y);
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u(0.0, bound);
    for (int s = 0; s < cfg.random_samples; ++s) {
        for (auto& v : y) v = u(rng);
        visit(y);
    }
}

} // namespace detail

/// Checks (A_sorp_F), (A_sorp_M), (A_sorp_B) on the grid [0, bound]^2.
inline ValidationReport validate_sorption(const SorptionLaw& law, const ValidationConfig& cfg = {}) {
    cfg.validate();
    ValidationReport rep;
    rep.subject = "sorption:" + law.kind_name();
    const int n = cfg.sorption_points;
    const double step = cfg.sorption_bound / (n - 1);
    const double tol = cfg.tolerance;
    auto at = [&](int a, int b) { return law.evaluate(a * step, b * step); };

    // (A_sorp_F): finite values, and gradient/Hessian that do not grow with
    // the sampled region. Linear growth of |grad r| doubles the maximum from
    // the inner half-grid to the full grid; bounded gradients do not.
    {
        CheckResult c;
        c.assumption = "A_sorp_F";
        double g_inner = 0.0, g_outer = 0.0, h_inner = 0.0, h_outer = 0.0;
        std::vector<double> g_arg, h_arg;
        const double fd = 1e-4;
        for (int a = 0; a < n && c.verdict == Verdict::pass; ++a) {
            for (int b = 0; b < n; ++b) {
                const double x = a * step, y = b * step;
                const double v = law.evaluate(x, y);
                const auto g = law.gradient(x, y);
                if (!std::isfinite(v) || !std::isfinite(g[0]) || !std::isfinite(g[1])) {
                    c.verdict = Verdict::fail;
                    c.witness = {x, y};
                    c.detail = "rate or gradient not finite";
                    break;
                }
                const auto gx = law.gradient(x + fd, y), gy = law.gradient(x, y + fd);
                const double gn = std::hypot(g[0], g[1]);
                const double hn = std::hypot(std::hypot(gx[0] - g[0], gx[1] - g[1]),
                                             std::hypot(gy[0] - g[0], gy[1] - g[1])) / fd;
                const bool inner = 2 * a <= n - 1 && 2 * b <= n - 1;
                if (inner) {
                    g_inner = std::max(g_inner, gn);
                    h_inner = std::max(h_inner, hn);
                }
                if (gn > g_outer) {
                    g_outer = gn;
                    g_arg = {x, y};
                }
                if (hn > h_outer) {
                    h_outer = hn;
                    h_arg = {x, y};
                }
            }
        }
        if (c.verdict == Verdict::pass) {
            c.constants = {g_outer, h_outer};
            if (g_outer > 1.5 * g_inner + 1e-9) {
                c.verdict = Verdict::fail;
                c.witness = g_arg;
                c.detail = "gradient grows with the sampled region: max |grad r| " + std::to_string(g_inner) +
                           " on the half grid vs " + std::to_string(g_outer) + " on the full grid";
            } else if (h_outer > 1.5 * h_inner + 1e-6) {
                c.verdict = Verdict::fail;
                c.witness = h_arg;
                c.detail = "second derivatives grow with the sampled region";
            } else {
                c.detail = "gradient bounded by " + std::to_string(g_outer) + " on the grid";
            }
        }
        rep.checks.push_back(std::move(c));
    }

    // (A_sorp_M): nondecreasing in c, nonincreasing in cs along grid lines.
    {
        CheckResult c;
        c.assumption = "A_sorp_M";
        for (int a = 0; a < n && c.verdict == Verdict::pass; ++a) {
            for (int b = 0; b < n; ++b) {
                const double v = at(a, b);
                if (a + 1 < n && at(a + 1, b) < v - tol) {
                    c.verdict = Verdict::fail;
                    c.witness = {a * step, b * step};
                    c.detail = "decreasing in c between c = " + std::to_string(a * step) + " and " +
                               std::to_string((a + 1) * step) + " at cs = " + std::to_string(b * step);
                    break;
                }
                if (b + 1 < n && at(a, b + 1) > v + tol) {
                    c.verdict = Verdict::fail;
                    c.witness = {a * step, b * step};
                    c.detail = "increasing in cs between cs = " + std::to_string(b * step) + " and " +
                               std::to_string((b + 1) * step) + " at c = " + std::to_string(a * step);
                    break;
                }
            }
        }
        rep.checks.push_back(std::move(c));
    }

    // (A_sorp_B): -k_de cs <= r <= k_ad c. Reports the smallest constants the
    // samples admit; checks against the law's own constants when declared.
    {
        CheckResult c;
        c.assumption = "A_sorp_B";
        double need_ad = 0.0, need_de = 0.0, need_ad_inner = 0.0, need_de_inner = 0.0;
        std::vector<double> bad_upper, bad_lower;
        for (int a = 0; a < n; ++a) {
            for (int b = 0; b < n; ++b) {
                const double x = a * step, y = b * step, v = at(a, b);
                const bool inner = 2 * a <= n - 1 && 2 * b <= n - 1;
                if (v > tol) {
                    if (a == 0) bad_upper = {x, y};
                    else {
                        need_ad = std::max(need_ad, v / x);
                        if (inner) need_ad_inner = std::max(need_ad_inner, v / x);
                    }
                }
                if (v < -tol) {
                    if (b == 0) bad_lower = {x, y};
                    else {
                        need_de = std::max(need_de, -v / y);
                        if (inner) need_de_inner = std::max(need_de_inner, -v / y);
                    }
                }
            }
        }
        c.constants = {need_ad, need_de};
        if (!bad_upper.empty()) {
            c.verdict = Verdict::fail;
            c.witness = bad_upper;
            c.detail = "positive rate with zero bulk concentration";
        } else if (!bad_lower.empty()) {
            c.verdict = Verdict::fail;
            c.witness = bad_lower;
            c.detail = "negative rate with zero surface concentration";
        } else if (auto k = law.declared_constants()) {
            const double k_ad = (*k)[0], k_de = (*k)[1];
            for (int a = 0; a < n && c.verdict == Verdict::pass; ++a) {
                for (int b = 0; b < n; ++b) {
                    const double x = a * step, y = b * step, v = at(a, b);
                    if (v > k_ad * x + tol || v < -k_de * y - tol) {
                        c.verdict = Verdict::fail;
                        c.witness = {x, y};
                        c.detail = "r = " + std::to_string(v) + " outside [-k_de cs, k_ad c] = [" +
                                   std::to_string(-k_de * y) + ", " + std::to_string(k_ad * x) + "]";
                        break;
                    }
                }
            }
            if (c.passed()) c.detail = "bounds hold with k_ad = " + std::to_string(k_ad) + ", k_de = " + std::to_string(k_de);
        } else if (need_ad > 1.5 * need_ad_inner + 1e-9 || need_de > 1.5 * need_de_inner + 1e-9) {
            c.verdict = Verdict::fail;
            c.detail = "required bound constants grow with the sampled region";
        } else {
            c.detail = "bounds hold with sampled constants";
        }
        rep.checks.push_back(std::move(c));
    }
    return rep;
}

/// Checks (A_ch_F), (A_ch_N), (A_ch_P).
inline ValidationReport validate_reaction(const ReactionNetwork& net, const ValidationConfig& cfg = {}) {
    cfg.validate();
    ValidationReport rep;
    rep.subject = net.is_mass_action() ? "reaction:mass_action" : "reaction:custom";
    const int n = net.n_species();
    const double tol = cfg.tolerance;

    {
        CheckResult c;
        c.assumption = "A_ch_F";
        if (net.has_polynomial_form()) {
            c.method = CheckMethod::symbolic;
            c.detail = "polynomial rates are C^1";
        } else {
            std::vector<double> r(static_cast<std::size_t>(n)), jac(static_cast<std::size_t>(n * n));
            detail::for_each_sample(n, cfg.reaction_bound, cfg.reaction_points, cfg, [&](const std::vector<double>& y) {
                if (!c.passed()) return;
                net.evaluate(y, r);
                net.jacobian(y, jac);
                const bool ok = std::all_of(r.begin(), r.end(), [](double v) { return std::isfinite(v); }) &&
                                std::all_of(jac.begin(), jac.end(), [](double v) { return std::isfinite(v); });
                if (!ok) {
                    c.verdict = Verdict::fail;
                    c.witness = y;
                    c.detail = "rate or Jacobian not finite";
                }
            });
            if (c.passed()) c.detail = "finite rate and Jacobian on the sample grid";
        }
        rep.checks.push_back(std::move(c));
    }

    {
        CheckResult c;
        c.assumption = "A_ch_N";
        std::vector<double> r(static_cast<std::size_t>(n));
        detail::for_each_sample(n, cfg.reaction_bound, cfg.reaction_points, cfg, [&](const std::vector<double>& y0) {
            if (!c.passed()) return;
            for (int i = 0; i < n && c.passed(); ++i) {
                std::vector<double> y = y0;
                y[i] = 0.0;
                net.evaluate(y, r);
                if (r[i] < -tol) {
                    c.verdict = Verdict::fail;
                    c.witness = y;
                    c.detail = "r_" + std::to_string(i + 1) + " = " + std::to_string(r[i]) + " < 0 on the face y_" +
                               std::to_string(i + 1) + " = 0";
                }
            }
        });
        rep.checks.push_back(std::move(c));
    }

    {
        CheckResult c;
        c.assumption = "A_ch_P";
        double degree = 0.0;
        if (net.has_polynomial_form()) {
            c.method = CheckMethod::symbolic;
            int dmax = 0;
            for (const auto& p : net.polynomials()) dmax = std::max(dmax, p.degree());
            degree = dmax;
        } else {
            // Log-log slope of |r| along rays over the last decade sampled.
            std::vector<double> r(static_cast<std::size_t>(n));
            std::vector<std::vector<double>> dirs;
            dirs.emplace_back(static_cast<std::size_t>(n), 1.0);
            for (int i = 0; i < n; ++i) {
                std::vector<double> e(static_cast<std::size_t>(n), 0.0);
                e[i] = 1.0;
                dirs.push_back(e);
            }
            auto norm_at = [&](const std::vector<double>& d, double s) {
                std::vector<double> y(d.size());
                for (std::size_t i = 0; i < d.size(); ++i) y[i] = s * d[i];
                net.evaluate(y, r);
                double m = 0.0;
                for (double v : r) m = std::max(m, std::abs(v));
                return m;
            };
            for (const auto& d : dirs) {
                const double lo = norm_at(d, 1e3), hi = norm_at(d, 1e4);
                if (!std::isfinite(hi)) {
                    degree = INFINITY;
                    c.witness = std::vector<double>(d.size());
                    for (std::size_t i = 0; i < d.size(); ++i) c.witness[i] = 1e4 * d[i];
                    break;
                }
                if (hi > 0.0 && lo > 0.0) degree = std::max(degree, std::log10(hi / lo));
                else if (hi > 0.0) degree = std::max(degree, 1.0);
            }
        }
        // Smallest growth constant on the sample grid for the claimed gamma.
        double M = 0.0;
        std::vector<double> r(static_cast<std::size_t>(n));
        detail::for_each_sample(n, cfg.reaction_bound, cfg.reaction_points, cfg, [&](const std::vector<double>& y) {
            net.evaluate(y, r);
            double rn = 0.0, yn = 0.0;
            for (int i = 0; i < n; ++i) {
                rn += r[i] * r[i];
                yn += y[i] * y[i];
            }
            M = std::max(M, std::sqrt(rn) / (1.0 + std::pow(std::sqrt(yn), cfg.gamma)));
        });
        c.constants = {degree, M};
        const double slack = c.method == CheckMethod::symbolic ? 0.0 : 0.05;
        if (!(degree <= cfg.gamma + slack)) {
            c.verdict = Verdict::fail;
            c.detail = "growth exponent " + std::to_string(degree) + " exceeds gamma = " + std::to_string(cfg.gamma);
        } else {
            c.detail = "growth exponent " + std::to_string(degree) + " <= gamma = " + std::to_string(cfg.gamma) +
                       ", sampled M = " + std::to_string(M);
        }
        rep.checks.push_back(std::move(c));
    }
    return rep;
}

/// Lower-triangular candidate Q with positive diagonal and claimed C.
struct TriangularCandidate {
    std::vector<std::vector<double>> Q;
    double C = 1.0;

    void validate(int n) const {
        PORECAT_REQUIRE(static_cast<int>(Q.size()) == n, ConfigError, "triangular candidate: Q must be N x N");
        for (int i = 0; i < n; ++i) {
            PORECAT_REQUIRE(static_cast<int>(Q[i].size()) == n, ConfigError, "triangular candidate: Q must be N x N");
            for (int j = i + 1; j < n; ++j)
                PORECAT_REQUIRE(Q[i][j] == 0.0, ConfigError,
                                "triangular candidate: Q is not lower triangular (entry " + std::to_string(i + 1) +
                                    "," + std::to_string(j + 1) + ")");
            PORECAT_REQUIRE(Q[i][i] > 0.0, ConfigError,
                            "triangular candidate: diagonal entry " + std::to_string(i + 1) + " must be > 0");
        }
        PORECAT_REQUIRE(C > 0.0, ConfigError, "triangular candidate: C must be > 0");
    }
};

/// Checks (A_ch_S): [Q r(y)]_i <= C (1 + sum y) for y >= 0.
///
/// With a polynomial form, passes symbolically when every monomial of Q r
/// with positive coefficient has degree <= 1 (a sufficient condition), and
/// reports the smallest C that the surviving terms need in constants[0].
/// Otherwise samples the inequality with the claimed C.
inline CheckResult check_triangular(const ReactionNetwork& net, const TriangularCandidate& cand,
                                    const ValidationConfig& cfg = {}) {
    const int n = net.n_species();
    cand.validate(n);
    CheckResult c;
    c.assumption = "A_ch_S";
    const auto names = surface_variable_names(n);

    auto sample = [&](double C) {
        CheckResult s;
        s.assumption = "A_ch_S";
        s.method = CheckMethod::sampled;
        std::vector<double> r(static_cast<std::size_t>(n));
        detail::for_each_sample(n, cfg.reaction_bound, cfg.reaction_points, cfg, [&](const std::vector<double>& y) {
            if (!s.passed()) return;
            net.evaluate(y, r);
            double sum_y = 0.0;
            for (double v : y) sum_y += v;
            for (int i = 0; i < n; ++i) {
                double row = 0.0;
                for (int j = 0; j <= i; ++j) row += cand.Q[i][j] * r[j];
                if (row > C * (1.0 + sum_y) + cfg.tolerance) {
                    s.verdict = Verdict::fail;
                    s.witness = y;
                    s.detail = "row " + std::to_string(i + 1) + ": [Q r] = " + std::to_string(row) + " > C (1 + sum y) = " +
                               std::to_string(C * (1.0 + sum_y)) + " at " + detail::point_string(y);
                    return;
                }
            }
        });
        if (s.passed()) s.detail = "inequality holds on the sample grid with C = " + std::to_string(C);
        s.constants = {C};
        return s;
    };

    if (!net.has_polynomial_form()) return sample(cand.C);

    c.method = CheckMethod::symbolic;
    double C_min = 0.0;
    for (int i = 0; i < n; ++i) {
        Polynomial row(n);
        for (int j = 0; j <= i; ++j) row += net.polynomials()[j] * cand.Q[i][j];
        for (const auto& [e, coeff] : row.terms()) {
            if (coeff <= 0.0) continue;
            if (Polynomial::total_degree(e) > 1) {
                c.verdict = Verdict::fail;
                Polynomial mono(n);
                mono.add_term(e, coeff);
                c.detail = "row " + std::to_string(i + 1) + " = " + row.to_string(names) +
                           " has positive monomial " + mono.to_string(names) + " of degree " +
                           std::to_string(Polynomial::total_degree(e));
                // Concrete point where the inequality breaks along the
                // monomial's support.
                std::vector<double> r(static_cast<std::size_t>(n));
                for (double s = 1.0; s <= 1e12; s *= 10.0) {
                    std::vector<double> y(static_cast<std::size_t>(n), 0.0);
                    double sum_y = 0.0;
                    for (int k = 0; k < n; ++k)
                        if (e[k] > 0) {
                            y[k] = s;
                            sum_y += s;
                        }
                    net.evaluate(y, r);
                    double val = 0.0;
                    for (int j = 0; j <= i; ++j) val += cand.Q[i][j] * r[j];
                    if (val > cand.C * (1.0 + sum_y)) {
                        c.witness = y;
                        break;
                    }
                }
                return c;
            }
            C_min = std::max(C_min, coeff);
        }
    }
    c.constants = {C_min};
    if (cand.C >= C_min) {
        c.detail = "positive monomials of Q r are at most linear; smallest C = " + std::to_string(C_min);
        return c;
    }
    // The claimed C is below the symbolic bound; negative terms may still
    // rescue the inequality, so fall back to sampling.
    CheckResult s = sample(cand.C);
    s.constants = {C_min};
    return s;
}

} // namespace porecat
