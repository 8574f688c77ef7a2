#include "wdje/models.hpp"

#include <cmath>

#include <fmt/core.h>

#include "wdje/error.hpp"

namespace wdje::models {

std::string to_string(ModelKind kind) { return kind == ModelKind::ridge ? "ridge" : "multinomial_logistic"; }

ModelKind parse_model(const std::string& name) {
    if (name == "multinomial_logistic" || name == "logistic") return ModelKind::multinomial_logistic;
    if (name == "ridge") return ModelKind::ridge;
    throw ValidationError(fmt::format("unknown model '{}' (expected multinomial_logistic or ridge)", name));
}

void Hyper::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw ValidationError(fmt::format("learning_rate = {} must be > 0", learning_rate));
    }
    if (!(l2 >= 0.0) || !std::isfinite(l2)) throw ValidationError(fmt::format("l2 = {} must be >= 0", l2));
}

LinearModel LinearModel::zeros(ModelKind kind, Eigen::Index dim, Eigen::Index outputs) {
    LinearModel m;
    m.kind = kind;
    m.weights = Matrix::Zero(dim, outputs);
    m.bias = Eigen::RowVectorXd::Zero(outputs);
    return m;
}

Matrix LinearModel::logits(const Matrix& x) const {
    if (x.cols() != weights.rows()) {
        throw ValidationError(fmt::format("model expects {} features, got {}", weights.rows(), x.cols()));
    }
    return (x * weights).rowwise() + bias;
}

namespace {

Matrix softmax_rows(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double top = logits.row(i).maxCoeff();
        const Eigen::RowVectorXd e = (logits.row(i).array() - top).exp().matrix();
        out.row(i) = e / e.sum();
    }
    return out;
}

void check_kind(ModelKind kind, const TaskSpec& task) {
    if (kind == ModelKind::multinomial_logistic && !task.is_classification()) {
        throw ValidationError("multinomial_logistic needs a classification task (use ridge for regression)");
    }
    if (kind == ModelKind::ridge && task.is_classification()) {
        throw ValidationError("ridge needs a regression task (use multinomial_logistic for classification)");
    }
}

Eigen::Index outputs_for(const TaskSpec& task) { return task.is_classification() ? task.class_count : 1; }

Matrix one_hot(const Vector& labels, int classes) {
    Matrix y = Matrix::Zero(labels.size(), classes);
    for (Eigen::Index i = 0; i < labels.size(); ++i) y(i, static_cast<Eigen::Index>(labels(i))) = 1.0;
    return y;
}

// Running mean: exact for constant sequences.
template <typename F>
double mean_of(Eigen::Index n, F&& value) {
    double mean = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) mean += (value(i) - mean) / static_cast<double>(i + 1);
    return mean;
}

}  // namespace

Matrix LinearModel::predict_proba(const Matrix& x) const {
    if (kind != ModelKind::multinomial_logistic) throw ValidationError("predict_proba needs a logistic model");
    return softmax_rows(logits(x));
}

double risk(const LinearModel& model, const Dataset& data) {
    const Vector& y = data.require_labels();
    if (data.size() == 0) throw ValidationError("risk of an empty dataset");
    const Matrix z = model.logits(data.features());
    if (model.kind == ModelKind::ridge) {
        return mean_of(data.size(), [&](Eigen::Index i) {
            const double r = z(i, 0) - y(i);
            return r * r;
        });
    }
    if (z.cols() != data.task().class_count) {
        throw ValidationError(fmt::format("model has {} classes, data has {}", z.cols(), data.task().class_count));
    }
    return mean_of(data.size(), [&](Eigen::Index i) {
        const double top = z.row(i).maxCoeff();
        const double lse = top + std::log((z.row(i).array() - top).exp().sum());
        return lse - z(i, static_cast<Eigen::Index>(y(i)));
    });
}

double accuracy(const LinearModel& model, const Dataset& data) {
    if (model.kind != ModelKind::multinomial_logistic) return 0.0;
    const Vector& y = data.require_labels();
    if (data.size() == 0) throw ValidationError("accuracy of an empty dataset");
    const Matrix z = model.logits(data.features());
    std::size_t hits = 0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        Eigen::Index arg = 0;
        z.row(i).maxCoeff(&arg);
        if (arg == static_cast<Eigen::Index>(y(i))) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(z.rows());
}

LinearModel continue_training(LinearModel model, const Dataset& data, const Hyper& hyper, std::size_t epochs) {
    hyper.validate();
    check_kind(model.kind, data.task());
    const Vector& labels = data.require_labels();
    const Matrix& x = data.features();
    if (x.cols() != model.weights.rows() || outputs_for(data.task()) != model.weights.cols()) {
        throw ValidationError(fmt::format("model shape {}x{} does not fit data with {} features and {} outputs",
                                          model.weights.rows(), model.weights.cols(), x.cols(),
                                          outputs_for(data.task())));
    }
    if (data.size() == 0 || epochs == 0) return model;
    const double n = static_cast<double>(data.size());
    const Matrix targets = model.kind == ModelKind::multinomial_logistic
                               ? one_hot(labels, data.task().class_count)
                               : Matrix(labels);
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        const Matrix z = model.logits(x);
        Matrix residual = model.kind == ModelKind::multinomial_logistic ? Matrix(softmax_rows(z) - targets)
                                                                         : Matrix(2.0 * (z - targets));
        residual /= n;
        const double l2_scale = model.kind == ModelKind::multinomial_logistic ? hyper.l2 : 2.0 * hyper.l2;
        model.weights -= hyper.learning_rate * (x.transpose() * residual + l2_scale * model.weights);
        model.bias -= hyper.learning_rate * residual.colwise().sum();
        if (!model.weights.allFinite() || !model.bias.allFinite()) {
            throw NumericalError(fmt::format("training diverged at epoch {} (learning_rate = {}); lower learning_rate",
                                             epoch + 1, hyper.learning_rate));
        }
    }
    return model;
}

LinearModel fit(const Dataset& data, ModelKind kind, const Hyper& hyper) {
    hyper.validate();
    check_kind(kind, data.task());
    const Vector& y = data.require_labels();
    if (data.size() == 0) throw ValidationError("cannot fit a model on an empty dataset");
    auto model = LinearModel::zeros(kind, data.dim(), outputs_for(data.task()));
    if (kind == ModelKind::multinomial_logistic) return continue_training(std::move(model), data, hyper, hyper.epochs);

    // min (1/n)||y - X w - b||^2 + l2 ||w||^2, bias unpenalized: centre, then
    // solve the stacked least-squares system [Xc; sqrt(n l2) I] w = [yc; 0].
    const Matrix& x = data.features();
    const Eigen::RowVectorXd x_mean = x.colwise().mean();
    const double y_mean = y.mean();
    const auto n = x.rows();
    const auto d = x.cols();
    Matrix stacked = Matrix::Zero(n + d, d);
    stacked.topRows(n) = x.rowwise() - x_mean;
    stacked.bottomRows(d) = std::sqrt(static_cast<double>(n) * hyper.l2) * Matrix::Identity(d, d);
    Vector rhs = Vector::Zero(n + d);
    rhs.head(n) = y.array() - y_mean;
    const Vector w = stacked.completeOrthogonalDecomposition().solve(rhs);
    if (!w.allFinite()) throw NumericalError("ridge solve produced non-finite weights");
    model.weights.col(0) = w;
    model.bias(0) = y_mean - x_mean.dot(w);
    return model;
}

TargetBaseline train_target_baseline(const Dataset& target, ModelKind kind, const Hyper& hyper) {
    TargetBaseline out;
    out.model = fit(target, kind, hyper);
    out.risk_without = risk(out.model, target);
    out.accuracy = accuracy(out.model, target);
    if (!std::isfinite(out.risk_without)) {
        throw NumericalError("target-only risk is not finite; lower learning_rate");
    }
    return out;
}

TransferBaseline train_transfer_baseline(const Dataset& source, const Dataset& target, ModelKind kind,
                                         const Hyper& hyper) {
    if (source.dim() != target.dim()) {
        throw ValidationError(fmt::format("source has {} features, target has {}", source.dim(), target.dim()));
    }
    if (source.task() != target.task()) {
        throw ValidationError("source and target label spaces differ (task kind or class count)");
    }
    TransferBaseline out;
    out.source_model = fit(source, kind, hyper);
    out.source_risk = risk(out.source_model, source);
    out.model = continue_training(out.source_model, target, hyper, hyper.finetune_epochs);
    out.risk_with = risk(out.model, target);
    out.accuracy = accuracy(out.model, target);
    if (!std::isfinite(out.risk_with) || !std::isfinite(out.source_risk)) {
        throw NumericalError("transfer risk is not finite; lower learning_rate");
    }
    return out;
}

}  // namespace wdje::models
