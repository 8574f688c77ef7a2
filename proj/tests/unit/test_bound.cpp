#include <cmath>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "wdje/bound.hpp"
#include "wdje/error.hpp"

namespace wdje::bound {
namespace {

TEST(LipschitzCrossEntropy, Substitution) {
    // Spectral norm 50: a 100 x 1 column of fives.
    const auto est = lipschitz_cross_entropy(Matrix::Constant(100, 1, 5.0), 10);
    EXPECT_NEAR(est.norm, 50.0, 1e-12);
    EXPECT_NEAR(est.k, 0.45, 1e-15);

    const auto small = lipschitz_cross_entropy((Matrix(1, 2) << 1, 0).finished(), 2);
    EXPECT_EQ(small.k, 0.5);
    EXPECT_TRUE(small.flags.empty());
}

TEST(LipschitzCrossEntropy, ZeroFeaturesAreFlagged) {
    const auto est = lipschitz_cross_entropy(Matrix::Zero(4, 3), 3);
    EXPECT_EQ(est.k, 0.0);
    ASSERT_EQ(est.flags.size(), 1u);
    EXPECT_EQ(est.flags[0], "zero_norm");
    EXPECT_THROW(lambda_and_phi(est.k, BoundConfig{}), ValidationError);
}

TEST(LipschitzCrossEntropy, Errors) {
    EXPECT_THROW(lipschitz_cross_entropy(Matrix::Zero(0, 3), 3), ValidationError);
    EXPECT_THROW(lipschitz_cross_entropy(Matrix::Ones(2, 2), 1), ValidationError);
}

TEST(SpectralNorm, MatchesSingularValues) {
    testing::Gen gen(2);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix x = gen.matrix(gen.integer(1, 12), gen.integer(1, 12));
        Eigen::JacobiSVD<Matrix> svd(x);
        EXPECT_NEAR(spectral_norm(x), svd.singularValues()(0), 1e-10);
    }
}

TEST(LipschitzMse, Substitution) {
    const auto est = lipschitz_mse((Matrix(2, 1) << 1, 1).finished(), Vector::Zero(2), 1.0);
    EXPECT_EQ(est.norm, 2.0);
    EXPECT_EQ(est.label_norm, 0.0);
    EXPECT_EQ(est.k, 1.0);

    const auto clamped = lipschitz_mse(Matrix::Ones(1, 1), Vector::Constant(1, 2.0), 1.0);
    EXPECT_EQ(clamped.k, 1e-6);
    ASSERT_EQ(clamped.flags.size(), 1u);
    EXPECT_EQ(clamped.flags[0], "clamped_to_floor");

    // ||X^T X|| = 1 with N_t1 = 2 rows, so k = (1/2) * 1.
    const auto identity = lipschitz_mse(Matrix::Identity(2, 2), Vector::Zero(2), 1.0);
    EXPECT_EQ(identity.norm, 1.0);
    EXPECT_EQ(identity.k, 0.5);
}

TEST(LipschitzMse, Errors) {
    EXPECT_THROW(lipschitz_mse(Matrix::Zero(0, 1), Vector::Zero(0)), ValidationError);
    EXPECT_THROW(lipschitz_mse(Matrix::Ones(2, 1), Vector::Zero(3)), ValidationError);
}

TEST(LambdaAndPhi, Substitution) {
    const BoundConfig cfg;
    const auto a = lambda_and_phi(0.001, cfg);
    EXPECT_EQ(a.lambda, 1.0);
    EXPECT_EQ(a.phi, std::exp(-1.0));
    const auto b = lambda_and_phi(1.0, cfg);
    EXPECT_EQ(b.lambda, 0.001);
    EXPECT_NEAR(b.phi, 0.99900, 1e-5);
    const auto c = lambda_and_phi(1e-6, cfg);
    EXPECT_NEAR(c.lambda, 1000.0, 1e-9);
    EXPECT_GE(c.phi, 0.0);
    EXPECT_LT(c.phi, 1e-300);
}

TEST(LambdaAndPhi, PropertyProductIsExact) {
    testing::Gen gen(17);
    BoundConfig cfg;
    for (int trial = 0; trial < 500; ++trial) {
        const double k = std::pow(10.0, gen.uniform(-6, 3));
        cfg.k_lambda_product = std::pow(10.0, gen.uniform(-4, 0));
        const auto lp = lambda_and_phi(k, cfg);
        EXPECT_NEAR(lp.lambda * k, cfg.k_lambda_product, 2 * std::numeric_limits<double>::epsilon() * cfg.k_lambda_product);
        EXPECT_GE(lp.phi, 0.0);
        EXPECT_LE(lp.phi, 1.0);
    }
}

TEST(LambdaAndPhi, UnderflowIsFlagged) {
    BoundConfig cfg;
    cfg.k_lambda_product = 1.0;
    const auto lp = lambda_and_phi(1e-3, cfg);
    EXPECT_EQ(lp.phi, 0.0);
    EXPECT_TRUE(lp.phi_underflow);
    EXPECT_THROW(lambda_and_phi(-1.0, cfg), ValidationError);
}

TEST(SourceLabelMoment, Examples) {
    testing::Gen gen(3);
    for (int trial = 0; trial < 20; ++trial) {
        const int classes = gen.integer(2, 6);
        Vector y(15);
        for (Eigen::Index i = 0; i < 15; ++i) y(i) = gen.integer(0, classes - 1);
        const auto m = empirical_measure(encode_labels(y, LabelEncoding::one_hot(classes)), gen.weights(15));
        for (const double p : {1.0, 2.0, 3.5}) EXPECT_NEAR(source_label_moment(m, p), 1.0, 1e-12);
    }
    EXPECT_DOUBLE_EQ(source_label_moment(empirical_measure((Matrix(2, 1) << 3, 4).finished()), 1.0), 3.5);
    EXPECT_EQ(source_label_moment(DiscreteMeasure::empty(3), 2.0), 0.0);
    EXPECT_THROW(source_label_moment(DiscreteMeasure::empty(1), 0.5), ValidationError);
}

TEST(TargetRiskBound, OnlySlackSurvivesForIdenticalTasks) {
    const auto r = target_risk_bound(0, 0, 0, 0, 0.001, BoundConfig{});
    EXPECT_NEAR(r.total, 0.00036787944117144236, 1e-18);
    EXPECT_EQ(r.mode, Mode::supervised);
}

TEST(TargetRiskBound, HandEvaluatedFiveTerms) {
    const auto r = target_risk_bound(0.5, 10, 0.2, 1, 0.01, BoundConfig{});
    EXPECT_NEAR(r.lambda, 0.1, 1e-15);
    EXPECT_NEAR(r.domain_term, 0.01, 1e-15);
    EXPECT_NEAR(r.total, 1.7190483741803595, 1e-12);
    EXPECT_EQ(r.total - r.sum_of_terms(), 0.0);
}

TEST(TargetRiskBound, RejectsNegativeInputs) {
    EXPECT_THROW(target_risk_bound(-0.1, 0, 0, 0, 1, BoundConfig{}), ValidationError);
    EXPECT_THROW(target_risk_bound(0, -1, 0, 0, 1, BoundConfig{}), ValidationError);
    EXPECT_THROW(target_risk_bound(0, 0, -1, 0, 1, BoundConfig{}), ValidationError);
    EXPECT_THROW(target_risk_bound(0, 0, 0, -1, 1, BoundConfig{}), ValidationError);
    EXPECT_THROW(target_risk_bound(0, 0, 0, 0, 0, BoundConfig{}), ValidationError);
}

TEST(TargetRiskBound, PropertyDecompositionAndMonotonicity) {
    testing::Gen gen(4242);
    BoundConfig cfg;
    for (int trial = 0; trial < 300; ++trial) {
        const double risk = gen.uniform(0, 3);
        const double wx = gen.uniform(0, 20);
        const double wy = gen.uniform(0, 2);
        const double moment = gen.uniform(0, 2);
        const double k = std::pow(10.0, gen.uniform(-5, 1));
        cfg.M = gen.uniform(0.1, 3);
        const auto base = target_risk_bound(risk, wx, wy, moment, k, cfg);
        EXPECT_NEAR(base.total, base.sum_of_terms(), 1e-12);
        for (const auto& term : {base.source_risk, base.domain_term, base.task_term_w, base.task_term_moment,
                                 base.slack_term}) {
            EXPECT_GE(term, 0.0);
        }
        const double bump = 0.25;
        EXPECT_GT(target_risk_bound(risk + bump, wx, wy, moment, k, cfg).total, base.total);
        EXPECT_GT(target_risk_bound(risk, wx + bump, wy, moment, k, cfg).total, base.total);
        EXPECT_GT(target_risk_bound(risk, wx, wy + bump, moment, k, cfg).total, base.total);
        EXPECT_GT(target_risk_bound(risk, wx, wy, moment + bump, k, cfg).total, base.total);
    }
}

TEST(UnsupervisedBound, OneHotTaskContributionIsOne) {
    Vector y(6);
    y << 0, 1, 2, 2, 1, 0;
    const auto labels = empirical_measure(encode_labels(y, LabelEncoding::one_hot(3)));
    const auto r = target_risk_bound_unsupervised(0, 0, labels, 0.001, BoundConfig{});
    EXPECT_EQ(r.mode, Mode::unsupervised);
    EXPECT_EQ(r.task_term_w, 0.0);
    EXPECT_NEAR(r.task_term_moment, 1.0, 1e-15);
    EXPECT_NEAR(r.total, 1.0003678794411714, 1e-15);
    EXPECT_THROW(target_risk_bound_unsupervised(0, 0, DiscreteMeasure::empty(3), 0.001, BoundConfig{}),
                 ValidationError);
}

TEST(GeneralizationTerms, DegenerateConfidence) {
    GeneralizationDiagnostics diag;
    diag.delta = 1.0;
    const auto out = generalization_terms(diag, 50, 50, 10);
    for (const auto& [name, value] : out.sampling_terms) EXPECT_EQ(value, 0.0) << name;
    EXPECT_EQ(out.total_slack, 0.0);
}

TEST(GeneralizationTerms, HandEvaluatedSum) {
    GeneralizationDiagnostics diag;
    diag.delta = 0.05;
    diag.B = 1.0;
    diag.M_S = 1.0;
    diag.d = 8;
    const auto out = generalization_terms(diag, 100, 100, 25);
    auto term = [&](const std::string& name) {
        for (const auto& [key, value] : out.sampling_terms) {
            if (key == name) return value;
        }
        ADD_FAILURE() << "missing term " << name;
        return 0.0;
    };
    EXPECT_NEAR(term("feature_sampling"), 0.24477468306808167, 1e-14);
    EXPECT_NEAR(term("label_sampling"), 0.5473328305111974, 1e-14);
    EXPECT_NEAR(term("source_generalization"), 0.12238734153404082, 1e-14);
    EXPECT_EQ(term("gamma_x"), 0.0);
    EXPECT_EQ(term("gamma_y"), 0.0);
    EXPECT_NEAR(out.total_slack, 0.91449485511332, 1e-13);
}

TEST(GeneralizationTerms, DoesNotAlterTheTotal) {
    const auto r = target_risk_bound(0.5, 10, 0.2, 1, 0.01, BoundConfig{});
    GeneralizationDiagnostics diag;
    diag.zeta = 0.3;
    const auto with = with_diagnostics(r, generalization_terms(diag, 10, 10, 5));
    EXPECT_EQ(with.total, r.total);
    ASSERT_TRUE(with.diagnostics.has_value());
    EXPECT_GT(with.diagnostics->total_slack, 0.0);
}

TEST(GeneralizationTerms, ParameterRanges) {
    GeneralizationDiagnostics diag;
    diag.delta = 0.0;
    EXPECT_THROW(generalization_terms(diag, 1, 1, 1), ValidationError);
    diag = {};
    diag.d = 2;  // p = 1 is not below d/2
    EXPECT_THROW(generalization_terms(diag, 1, 1, 1), ValidationError);
    diag = {};
    diag.q = 1.0;  // q must exceed p
    EXPECT_THROW(generalization_terms(diag, 1, 1, 1), ValidationError);
    diag = {};
    diag.d = 4;
    diag.q = 4.0 / 3.0;  // q == d/(d-p)
    EXPECT_THROW(generalization_terms(diag, 1, 1, 1), ValidationError);
    diag = {};
    diag.zeta = -1.0;
    EXPECT_THROW(generalization_terms(diag, 1, 1, 1), ValidationError);
    EXPECT_THROW(generalization_terms(GeneralizationDiagnostics{}, 1, 1, 0), ValidationError);
}

TEST(TaskDifferenceCheck, ReportsBothSides) {
    // Source labels all class 0, target all class 1, nothing labelled: the
    // left side is sqrt(2) while the stated right side is only the moment 1.
    const Vector source_y = Vector::Zero(4);
    const Dataset source(Matrix::Zero(4, 1), source_y, TaskSpec::classification(2));
    const auto enc = LabelEncoding::one_hot(2);
    const auto target = empirical_measure(encode_labels(Vector::Ones(3), enc));
    const auto labels = label_measure(source, enc);
    const auto none = check_task_difference(labels, split_source_labels(source, 0, enc), target, {});
    EXPECT_NEAR(none.lhs, std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(none.rhs, 1.0, 1e-12);
    EXPECT_FALSE(none.holds);

    const auto half = check_task_difference(labels, split_source_labels(source, 2, enc), target, {});
    EXPECT_NEAR(half.rhs, std::sqrt(2.0) + 1.0, 1e-12);
    EXPECT_TRUE(half.holds);
}

TEST(BoundConfig, Validation) {
    BoundConfig cfg;
    cfg.k_lambda_product = 0;
    EXPECT_THROW(cfg.validate(), ValidationError);
    cfg = {};
    cfg.M = -1;
    EXPECT_THROW(cfg.validate(), ValidationError);
    cfg = {};
    cfg.p = 0.9;
    EXPECT_THROW(cfg.validate(), ValidationError);
    cfg = {};
    cfg.K_weight_sup = 0;
    EXPECT_THROW(cfg.validate(), ValidationError);
    EXPECT_EQ(parse_loss("mse"), Loss::mse);
    EXPECT_THROW(parse_loss("hinge"), ValidationError);
}

}  // namespace
}  // namespace wdje::bound
