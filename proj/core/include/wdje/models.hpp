#pragma once

#include <cstddef>
#include <string>

#include "wdje/measures.hpp"

namespace wdje::models {

enum class ModelKind { multinomial_logistic, ridge };

std::string to_string(ModelKind kind);
ModelKind parse_model(const std::string& name);

/// Logistic models use full-batch gradient descent; ridge is solved in closed
/// form and only uses the gradient settings during transfer continuation.
struct Hyper {
    double learning_rate = 0.5;
    std::size_t epochs = 200;
    double l2 = 1e-3;
    std::size_t finetune_epochs = 50;

    void validate() const;
};

/// Linear head: logits (or the prediction) = X W + 1 b^T.
struct LinearModel {
    ModelKind kind = ModelKind::multinomial_logistic;
    Matrix weights;         // D x C (logistic) or D x 1 (ridge)
    Eigen::RowVectorXd bias;

    static LinearModel zeros(ModelKind kind, Eigen::Index dim, Eigen::Index outputs);

    Matrix logits(const Matrix& x) const;
    /// Row-wise softmax of the logits (logistic only).
    Matrix predict_proba(const Matrix& x) const;
};

/// Training-set loss: mean cross-entropy (logistic) or mean squared error (ridge).
double risk(const LinearModel& model, const Dataset& data);

/// Fraction of correct argmax predictions (logistic only).
double accuracy(const LinearModel& model, const Dataset& data);

struct TargetBaseline {
    double risk_without = 0;
    double accuracy = 0;  // classification only, 0 otherwise
    LinearModel model;
};

struct TransferBaseline {
    double risk_with = 0;
    double source_risk = 0;
    double accuracy = 0;
    LinearModel source_model;  // before continuation
    LinearModel model;         // after continuation
};

/// Fits a fresh zero-initialized model on the target rows.
TargetBaseline train_target_baseline(const Dataset& target, ModelKind kind, const Hyper& hyper);

/// Fits on the source, then continues gradient descent on the target for
/// hyper.finetune_epochs.
TransferBaseline train_transfer_baseline(const Dataset& source, const Dataset& target, ModelKind kind,
                                         const Hyper& hyper);

/// Logistic: hyper.epochs gradient steps from zeros. Ridge: closed form.
LinearModel fit(const Dataset& data, ModelKind kind, const Hyper& hyper);
/// Gradient descent on the training loss (plus l2) from `start`.
LinearModel continue_training(LinearModel start, const Dataset& data, const Hyper& hyper, std::size_t epochs);

}  // namespace wdje::models
