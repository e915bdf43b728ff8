#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace porecat {

/// Sparse multivariate polynomial with real coefficients. Monomials are
/// keyed by their exponent vectors, so iteration order is deterministic.
class Polynomial {
public:
    using Exponents = std::vector<int>;

    explicit Polynomial(int n_vars = 0) : n_vars_(n_vars) {}

    static Polynomial constant(int n_vars, double value) {
        Polynomial p(n_vars);
        p.add_term(Exponents(static_cast<std::size_t>(n_vars), 0), value);
        return p;
    }
    static Polynomial variable(int n_vars, int index) {
        Polynomial p(n_vars);
        Exponents e(static_cast<std::size_t>(n_vars), 0);
        e[static_cast<std::size_t>(index)] = 1;
        p.add_term(e, 1.0);
        return p;
    }

    int n_vars() const { return n_vars_; }
    const std::map<Exponents, double>& terms() const { return terms_; }

    void add_term(const Exponents& e, double coeff) {
        if (coeff == 0.0) return;
        auto [it, inserted] = terms_.emplace(e, coeff);
        if (!inserted) {
            it->second += coeff;
            if (it->second == 0.0) terms_.erase(it);
        }
    }

    bool is_zero() const { return terms_.empty(); }

    /// Highest total degree; 0 for constants and for the zero polynomial.
    int degree() const {
        int d = 0;
        for (const auto& [e, c] : terms_) d = std::max(d, total_degree(e));
        return d;
    }

    static int total_degree(const Exponents& e) {
        int d = 0;
        for (int x : e) d += x;
        return d;
    }

    bool is_constant() const { return degree() == 0; }
    double constant_term() const {
        auto it = terms_.find(Exponents(static_cast<std::size_t>(n_vars_), 0));
        return it == terms_.end() ? 0.0 : it->second;
    }

    double evaluate(std::span<const double> y) const {
        double s = 0.0;
        for (const auto& [e, c] : terms_) {
            double m = c;
            for (std::size_t i = 0; i < e.size(); ++i)
                if (e[i] != 0) m *= std::pow(y[i], e[i]);
            s += m;
        }
        return s;
    }

    Polynomial derivative(int var) const {
        Polynomial d(n_vars_);
        for (const auto& [e, c] : terms_) {
            const int k = e[static_cast<std::size_t>(var)];
            if (k == 0) continue;
            Exponents e2 = e;
            e2[static_cast<std::size_t>(var)] = k - 1;
            d.add_term(e2, c * k);
        }
        return d;
    }

    Polynomial& operator+=(const Polynomial& o) {
        for (const auto& [e, c] : o.terms_) add_term(e, c);
        return *this;
    }
    Polynomial& operator-=(const Polynomial& o) {
        for (const auto& [e, c] : o.terms_) add_term(e, -c);
        return *this;
    }
    Polynomial& operator*=(double s) {
        if (s == 0.0) {
            terms_.clear();
            return *this;
        }
        for (auto& [e, c] : terms_) c *= s;
        return *this;
    }
    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
    friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        Polynomial p(a.n_vars_);
        for (const auto& [ea, ca] : a.terms_) {
            for (const auto& [eb, cb] : b.terms_) {
                Exponents e(ea.size());
                for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
                p.add_term(e, ca * cb);
            }
        }
        return p;
    }

    std::string to_string(std::span<const std::string> names) const {
        if (terms_.empty()) return "0";
        std::string s;
        for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
            const auto& [e, c] = *it;
            if (!s.empty()) s += c < 0 ? " - " : " + ";
            else if (c < 0) s += "-";
            std::string mono;
            for (std::size_t i = 0; i < e.size(); ++i) {
                if (e[i] == 0) continue;
                if (!mono.empty()) mono += "*";
                mono += names[i];
                if (e[i] > 1) mono += "^" + std::to_string(e[i]);
            }
            const double a = std::abs(c);
            if (mono.empty()) s += format_coeff(a);
            else if (a == 1.0) s += mono;
            else s += format_coeff(a) + "*" + mono;
        }
        return s;
    }

private:
    static std::string format_coeff(double a) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", a);
        return buf;
    }

    int n_vars_;
    std::map<Exponents, double> terms_;
};

} // namespace porecat
