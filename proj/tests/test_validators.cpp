#include <gtest/gtest.h>

#include <algorithm>

#include "porecat/model/validators.hpp"

using namespace porecat;

namespace {

SorptionLaw raw_langmuir(double c_inf = 1.0) {
    return SorptionLaw(CustomSorption{RateExpr::parse("k_ad*c*(1-cs/c_inf)-k_de*cs"),
                                      {{"k_ad", 1}, {"k_de", 1}, {"c_inf", c_inf}}});
}

ReactionNetwork single(const std::string& rate) {
    return ReactionNetwork(1, CustomNetwork{{RateExpr::parse(rate)}, {}});
}

const std::vector<std::vector<double>> q_r1{{1, 0, 0}, {0, 1, 0}, {1, 0, 1}};
const std::vector<std::vector<double>> q_id{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

} // namespace

TEST(ValidateSorption, HenryPassesAll) {
    const auto rep = validate_sorption(SorptionLaw(HenryLaw{1, 0.5}));
    EXPECT_TRUE(rep.passed());
    for (const char* a : {"A_sorp_F", "A_sorp_M", "A_sorp_B"}) ASSERT_NE(rep.find(a), nullptr) << a;
}

TEST(ValidateSorption, RawLangmuirFailsSignConditions) {
    const double c_inf = 2.0;
    const auto rep = validate_sorption(raw_langmuir(c_inf));
    EXPECT_FALSE(rep.passed());
    const auto f = rep.failures();
    EXPECT_NE(std::find(f.begin(), f.end(), "A_sorp_M"), f.end());
    EXPECT_NE(std::find(f.begin(), f.end(), "A_sorp_B"), f.end());
    const CheckResult* b = rep.find("A_sorp_B");
    ASSERT_NE(b, nullptr);
    ASSERT_EQ(b->witness.size(), 2u);
    EXPECT_GT(b->witness[1], c_inf);
}

TEST(ValidateSorption, ModifiedLangmuirPassesAll) {
    const auto rep = validate_sorption(SorptionLaw(ModifiedLangmuirLaw{1, 1, 1, 1e-3, 10}));
    EXPECT_TRUE(rep.passed()) << rep.failures().size();
}

TEST(ValidateSorption, NoSorptionPasses) { EXPECT_TRUE(validate_sorption(SorptionLaw()).passed()); }

TEST(ValidateSorption, WrongSignHenryLikeCustomFails) {
    const auto rep = validate_sorption(SorptionLaw(CustomSorption{RateExpr::parse("-c - cs"), {}}));
    EXPECT_FALSE(rep.passed());
}

TEST(ValidateReaction, R1QuasiPositiveQuadratic) {
    const auto rep = validate_reaction(ReactionNetwork::r1(1, 1));
    ASSERT_NE(rep.find("A_ch_N"), nullptr);
    EXPECT_TRUE(rep.find("A_ch_N")->passed());
    const CheckResult* p = rep.find("A_ch_P");
    ASSERT_NE(p, nullptr);
    ASSERT_FALSE(p->constants.empty());
    EXPECT_EQ(p->constants[0], 2.0);
    EXPECT_EQ(p->method, CheckMethod::symbolic);
    EXPECT_TRUE(rep.passed());
}

TEST(ValidateReaction, SquareGrowthPasses) {
    const auto rep = validate_reaction(single("cs_1^2"));
    EXPECT_TRUE(rep.find("A_ch_N")->passed());
    EXPECT_EQ(rep.find("A_ch_P")->constants[0], 2.0);
}

TEST(ValidateReaction, ConstantConsumptionFailsQuasiPositivity) {
    const auto rep = validate_reaction(single("-1"));
    const CheckResult* n = rep.find("A_ch_N");
    ASSERT_NE(n, nullptr);
    EXPECT_EQ(n->verdict, Verdict::fail);
    EXPECT_EQ(n->witness, std::vector<double>{0.0});
}

TEST(ValidateReaction, DegreeAboveGammaFails) {
    ValidationConfig cfg;
    cfg.gamma = 2;
    const auto rep = validate_reaction(single("cs_1^3"), cfg);
    EXPECT_EQ(rep.find("A_ch_P")->verdict, Verdict::fail);
}

TEST(ValidateReaction, SampledDegreeForNonPolynomialRate) {
    const auto rep = validate_reaction(single("cs_1^2/(1 + cs_1)"));
    const CheckResult* p = rep.find("A_ch_P");
    EXPECT_EQ(p->method, CheckMethod::sampled);
    EXPECT_NEAR(p->constants[0], 1.0, 0.01);
}

TEST(CheckTriangular, R1WithLowerTriangularQ) {
    const auto c = check_triangular(ReactionNetwork::r1(1, 1), {q_r1, 1.0});
    EXPECT_EQ(c.assumption, "A_ch_S");
    EXPECT_TRUE(c.passed()) << c.detail;
    EXPECT_EQ(c.method, CheckMethod::symbolic);
    EXPECT_DOUBLE_EQ(c.constants[0], 1.0);
}

TEST(CheckTriangular, R1WithIdentityFails) {
    const auto c = check_triangular(ReactionNetwork::r1(1, 1), {q_id, 1.0});
    EXPECT_EQ(c.verdict, Verdict::fail);
    EXPECT_NE(c.detail.find("row 3"), std::string::npos);
    EXPECT_NE(c.detail.find("degree 2"), std::string::npos);
    ASSERT_EQ(c.witness.size(), 3u);
    EXPECT_GT(c.witness[0], 0.0);
    EXPECT_GT(c.witness[1], 0.0);
}

TEST(CheckTriangular, ZeroNetworkPassesAnyC) {
    for (double C : {1e-6, 1.0, 1e6}) EXPECT_TRUE(check_triangular(ReactionNetwork(3), {q_id, C}).passed());
}

TEST(CheckTriangular, RejectsBadCandidates) {
    const auto r1 = ReactionNetwork::r1(1, 1);
    EXPECT_THROW(check_triangular(r1, {{{1, 1, 0}, {0, 1, 0}, {0, 0, 1}}, 1}), ConfigError);
    EXPECT_THROW(check_triangular(r1, {{{1, 0, 0}, {0, 0, 0}, {0, 0, 1}}, 1}), ConfigError);
    EXPECT_THROW(check_triangular(r1, {{{1, 0}, {0, 1}}, 1}), ConfigError);
}

TEST(CheckTriangular, SampledPathForNonPolynomialNetwork) {
    const ReactionNetwork net(1, CustomNetwork{{RateExpr::parse("-cs_1/(1 + cs_1)")}, {}});
    EXPECT_TRUE(check_triangular(net, {{{1}}, 1.0}).passed());
    const ReactionNetwork grow(1, CustomNetwork{{RateExpr::parse("cs_1^2/(1 + cs_1) + exp(cs_1/10)")}, {}});
    EXPECT_FALSE(check_triangular(grow, {{{1}}, 1.0}).passed());
}
