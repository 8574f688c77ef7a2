#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "wdje/error.hpp"
#include "wdje/models.hpp"

namespace wdje::models {
namespace {

using testing::Gen;

Dataset blobs(Gen& gen, int classes, Eigen::Index n, double spread) {
    Matrix x(n, 2);
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int c = static_cast<int>(i % classes);
        y(i) = c;
        x(i, 0) = 4.0 * c + spread * gen.normal();
        x(i, 1) = spread * gen.normal();
    }
    return Dataset(x, y, TaskSpec::classification(classes));
}

TEST(Models, ZeroEpochsGiveLogClasses) {
    Gen gen(31);
    for (int c : {2, 3, 7}) {
        const auto data = blobs(gen, c, 20, 1.0);
        Hyper h;
        h.epochs = 0;
        const auto m = fit(data, ModelKind::multinomial_logistic, h);
        EXPECT_EQ(risk(m, data), std::log(static_cast<double>(c)));
        EXPECT_EQ(m.weights, Matrix::Zero(2, c));
    }
}

TEST(Models, LogisticLearnsSeparableData) {
    Gen gen(32);
    const auto data = blobs(gen, 2, 60, 0.3);
    const auto base = train_target_baseline(data, ModelKind::multinomial_logistic, Hyper{});
    EXPECT_LT(base.risk_without, std::log(2.0) / 4);
    EXPECT_EQ(base.accuracy, 1.0);
    const auto proba = base.model.predict_proba(data.features());
    EXPECT_LT((proba.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(Models, PropertyMoreEpochsLowerTrainingLoss) {
    Gen gen(33);
    for (int trial = 0; trial < 10; ++trial) {
        const auto data = blobs(gen, gen.integer(2, 4), 40, 1.5);
        Hyper few;
        few.epochs = 20;
        Hyper many = few;
        many.epochs = 200;
        EXPECT_LE(risk(fit(data, ModelKind::multinomial_logistic, many), data),
                  risk(fit(data, ModelKind::multinomial_logistic, few), data) + 1e-12);
    }
}

TEST(Models, RidgeWithoutPenaltyInterpolatesLinearData) {
    Gen gen(34);
    const Matrix x = gen.matrix(15, 3);
    Vector w(3);
    w << 1.5, -2.0, 0.25;
    const Vector y = (x * w).array() + 0.7;
    const Dataset data(x, y, TaskSpec::regression());
    Hyper h;
    h.l2 = 0.0;
    const auto m = fit(data, ModelKind::ridge, h);
    EXPECT_LE(risk(m, data), 1e-9);
    EXPECT_NEAR(m.bias(0), 0.7, 1e-9);
    EXPECT_LT((m.weights.col(0) - w).norm(), 1e-9);
}

TEST(Models, RidgePenaltyShrinks) {
    Gen gen(35);
    const Matrix x = gen.matrix(30, 2);
    const Vector y = x.col(0) + 0.1 * gen.matrix(30, 1).col(0);
    const Dataset data(x, y, TaskSpec::regression());
    Hyper small;
    small.l2 = 1e-4;
    Hyper big;
    big.l2 = 10.0;
    EXPECT_LT(fit(data, ModelKind::ridge, big).weights.norm(), fit(data, ModelKind::ridge, small).weights.norm());
}

TEST(Models, WarmStartHelpsOnAMatchingTask) {
    Gen gen(36);
    const auto source = blobs(gen, 3, 300, 0.8);
    const auto target = blobs(gen, 3, 12, 0.8);
    Hyper h;
    h.epochs = 200;
    h.finetune_epochs = 5;
    const auto transfer = train_transfer_baseline(source, target, ModelKind::multinomial_logistic, h);
    Hyper short_fit = h;
    short_fit.epochs = 5;
    const auto scratch = train_target_baseline(target, ModelKind::multinomial_logistic, short_fit);
    EXPECT_LT(transfer.risk_with, scratch.risk_without);
    EXPECT_LT(transfer.source_risk, std::log(3.0));
}

TEST(Models, ContinueWithNothingIsIdentity) {
    Gen gen(37);
    const auto data = blobs(gen, 2, 10, 1.0);
    const auto m = fit(data, ModelKind::multinomial_logistic, Hyper{});
    const auto same = continue_training(m, data, Hyper{}, 0);
    EXPECT_EQ(same.weights, m.weights);
    EXPECT_EQ(same.bias, m.bias);
}

TEST(Models, DivergenceIsANumericalError) {
    Gen gen(38);
    const Matrix x = gen.matrix(20, 2, 100.0);
    const Dataset data(x, x.col(0), TaskSpec::regression());
    Hyper h;
    h.learning_rate = 10.0;
    EXPECT_THROW(continue_training(LinearModel::zeros(ModelKind::ridge, 2, 1), data, h, 200), NumericalError);
}

TEST(Models, KindMustMatchTask) {
    Gen gen(39);
    const auto cls = blobs(gen, 2, 10, 1.0);
    EXPECT_THROW(fit(cls, ModelKind::ridge, Hyper{}), ValidationError);
    const Dataset reg(gen.matrix(5, 2), Vector::Zero(5), TaskSpec::regression());
    EXPECT_THROW(fit(reg, ModelKind::multinomial_logistic, Hyper{}), ValidationError);
    EXPECT_THROW(train_transfer_baseline(cls, reg, ModelKind::ridge, Hyper{}), ValidationError);
    EXPECT_EQ(parse_model("logistic"), ModelKind::multinomial_logistic);
    EXPECT_THROW(parse_model("svm"), ValidationError);
    Hyper bad;
    bad.learning_rate = 0;
    EXPECT_THROW(bad.validate(), ValidationError);
}

}  // namespace
}  // namespace wdje::models
