#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "porecat/model/rate_expr.hpp"

using namespace porecat;

TEST(RateExpr, EvaluatesMassActionText) {
    const auto e = RateExpr::parse("k*(c1*c2 - kappa*c3)");
    EXPECT_DOUBLE_EQ(e.evaluate({{"k", 1}, {"kappa", 1}, {"c1", 2}, {"c2", 1}, {"c3", 0}}), 2.0);
}

TEST(RateExpr, SyntaxErrorPosition) {
    try {
        RateExpr::parse("1 + ");
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.position(), 4u);
        EXPECT_FALSE(e.expected().empty());
    }
}

TEST(RateExpr, ExpAtZero) { EXPECT_DOUBLE_EQ(RateExpr::parse("exp(-c1)").evaluate({{"c1", 0}}), 1.0); }

TEST(RateExpr, UnknownFunction) { EXPECT_THROW(RateExpr::parse("sin(c)"), ParseError); }

TEST(RateExpr, MalformedInputs) {
    for (const char* s : {"", "(", "c +* 2", "2 ^ -1", "c)", "exp c", "1.2.3", "c ^ 1.5"})
        EXPECT_THROW(RateExpr::parse(s), ParseError) << s;
}

TEST(RateExpr, UnboundIdentifier) { EXPECT_THROW(RateExpr::parse("a + b").evaluate({{"a", 1}}), ConfigError); }

TEST(RateExpr, PrecedenceAndUnaryMinus) {
    EXPECT_DOUBLE_EQ(RateExpr::parse("2 + 3 * 4").evaluate({}), 14.0);
    EXPECT_DOUBLE_EQ(RateExpr::parse("2 * 3 ^ 2").evaluate({}), 18.0);
    EXPECT_DOUBLE_EQ(RateExpr::parse("-2 ^ 2").evaluate({}), 4.0);
    EXPECT_DOUBLE_EQ(RateExpr::parse("8 / 4 / 2").evaluate({}), 1.0);
    EXPECT_DOUBLE_EQ(RateExpr::parse("1 - 2 - 3").evaluate({}), -4.0);
    EXPECT_DOUBLE_EQ(RateExpr::parse("1e-3 * 2").evaluate({}), 2e-3);
}

TEST(RateExpr, Max0IsSmoothPositivePart) {
    const auto e = RateExpr::parse("max0(x)");
    EXPECT_EQ(e.evaluate({{"x", -1}}), 0.0);
    EXPECT_EQ(e.evaluate({{"x", 0}}), 0.0);
    EXPECT_DOUBLE_EQ(e.evaluate({{"x", 2}}), 2.0);
    const double mid = e.evaluate({{"x", 0.5e-6}});
    EXPECT_GT(mid, 0.0);
    EXPECT_LT(mid, 0.5e-6);
}

TEST(RateExpr, RoundTripOnRandomTrees) {
    std::mt19937 rng(11);
    const char* leaves[] = {"c", "cs", "k", "2", "0.5", "1e-3"};
    std::function<std::string(int)> gen = [&](int depth) -> std::string {
        std::uniform_int_distribution<int> pick(0, depth > 0 ? 7 : 0);
        const int op = pick(rng);
        auto leaf = [&] { return std::string(leaves[std::uniform_int_distribution<int>(0, 5)(rng)]); };
        switch (op) {
        case 0: return leaf();
        case 1: return gen(depth - 1) + " + " + gen(depth - 1);
        case 2: return gen(depth - 1) + " - " + gen(depth - 1);
        case 3: return "(" + gen(depth - 1) + ") * " + gen(depth - 1);
        case 4: return gen(depth - 1) + " / (" + gen(depth - 1) + ")";
        case 5: return "(" + gen(depth - 1) + ")^" + std::to_string(std::uniform_int_distribution<int>(0, 3)(rng));
        case 6: return "exp(" + gen(depth - 1) + ")";
        default: return "-max0(" + gen(depth - 1) + ")";
        }
    };
    const Bindings b{{"c", 0.7}, {"cs", 1.3}, {"k", 2.0}};
    for (int t = 0; t < 200; ++t) {
        const std::string text = gen(4);
        const auto e = RateExpr::parse(text);
        const auto again = RateExpr::parse(e.to_string());
        EXPECT_TRUE(e == again) << text << " -> " << e.to_string();
        const double v1 = e.evaluate(b), v2 = again.evaluate(b);
        if (std::isfinite(v1)) EXPECT_EQ(v1, v2);
    }
}

TEST(RateExpr, DerivativeMatchesFiniteDifference) {
    const auto e = RateExpr::parse("k*c*(1 - cs/cinf)^2 - exp(-cs)*c + max0(c - 0.5)");
    const Bindings base{{"k", 1.5}, {"cinf", 2.0}, {"c", 0.9}, {"cs", 0.4}};
    for (const char* var : {"c", "cs"}) {
        const auto d = e.derivative(var);
        Bindings p = base, m = base;
        const double h = 1e-6;
        p[var] += h;
        m[var] -= h;
        const double fd = (e.evaluate(p) - e.evaluate(m)) / (2 * h);
        EXPECT_NEAR(d.evaluate(base), fd, 1e-7) << var;
    }
}

TEST(RateExpr, PolynomialForm) {
    const std::vector<std::string> vars{"y1", "y2"};
    const auto p = RateExpr::parse("k*(y1*y2 - 2*y1^2) + 3").to_polynomial(vars, {{"k", 2}});
    ASSERT_TRUE(p.has_value());
    EXPECT_EQ(p->degree(), 2);
    const std::vector<double> y{1.5, -0.5};
    EXPECT_DOUBLE_EQ(p->evaluate(y), 2 * (1.5 * -0.5 - 2 * 2.25) + 3);
    EXPECT_FALSE(RateExpr::parse("1/y1").to_polynomial(vars, {}).has_value());
    EXPECT_FALSE(RateExpr::parse("exp(y2)").to_polynomial(vars, {}).has_value());
}

TEST(CompiledExpr, AgreesWithTreeEvaluation) {
    const auto e = RateExpr::parse("k*c*(1 - cs/cinf) - kd*cs + exp(-c)^2");
    const Bindings consts{{"k", 2.0}, {"cinf", 3.0}, {"kd", 0.5}};
    const std::vector<std::string> args{"c", "cs"};
    const CompiledExpr f(e, args, consts);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0, 10);
    for (int t = 0; t < 100; ++t) {
        const double c = u(rng), cs = u(rng);
        Bindings b = consts;
        b["c"] = c;
        b["cs"] = cs;
        const std::array<double, 2> a{c, cs};
        EXPECT_DOUBLE_EQ(f(a), e.evaluate(b));
    }
}
