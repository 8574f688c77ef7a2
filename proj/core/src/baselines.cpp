#include "wdje/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include <fmt/core.h>

#include "wdje/error.hpp"

namespace wdje::baselines {

SourcePredictions::SourcePredictions(Matrix probs) : probs_(std::move(probs)) {
    if (probs_.rows() == 0 || probs_.cols() == 0) {
        throw ValidationError("source predictions are empty");
    }
    for (Eigen::Index i = 0; i < probs_.rows(); ++i) {
        if ((probs_.row(i).array() < 0.0).any() || !probs_.row(i).allFinite()) {
            throw ValidationError(fmt::format("source prediction row {} has negative or non-finite entries", i));
        }
        if (std::abs(probs_.row(i).sum() - 1.0) > 1e-9) {
            throw ValidationError(fmt::format("source prediction row {} sums to {:.12g}, expected 1", i,
                                              probs_.row(i).sum()));
        }
        Eigen::Index arg = 0;
        probs_.row(i).maxCoeff(&arg);
        pseudo_labels_.push_back(static_cast<int>(arg));
    }
}

namespace {

int class_of(double label, int classes, Eigen::Index row) {
    if (label < 0 || label >= classes || label != std::floor(label)) {
        throw ValidationError(fmt::format("label {} at row {} outside [0, {}]", label, row, classes - 1));
    }
    return static_cast<int>(label);
}

}  // namespace

double leep(const SourcePredictions& preds, const Vector& labels, int classes) {
    const Matrix& theta = preds.probs();
    const auto n = theta.rows();
    if (labels.size() != n) {
        throw ValidationError(fmt::format("{} labels for {} prediction rows", labels.size(), n));
    }
    if (classes < 2) throw ValidationError("LEEP needs at least 2 target classes");

    std::vector<int> y(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = class_of(labels(i), classes, i);

    // Empirical joint P(y, z) and marginal P(z).
    Matrix joint = Matrix::Zero(classes, theta.cols());
    for (Eigen::Index i = 0; i < n; ++i) joint.row(y[static_cast<std::size_t>(i)]) += theta.row(i);
    joint /= static_cast<double>(n);
    const Eigen::RowVectorXd marginal = joint.colwise().sum();

    Matrix conditional = Matrix::Zero(classes, theta.cols());
    for (Eigen::Index z = 0; z < theta.cols(); ++z) {
        if (marginal(z) > 0.0) conditional.col(z) = joint.col(z) / marginal(z);
    }

    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double eep = conditional.row(y[static_cast<std::size_t>(i)]).dot(theta.row(i));
        total += std::log(eep);
    }
    return total / static_cast<double>(n);
}

double nce(std::span<const int> source_labels, std::span<const int> target_labels) {
    if (source_labels.size() != target_labels.size()) {
        throw ValidationError(fmt::format("{} source pseudo-labels for {} target labels", source_labels.size(),
                                          target_labels.size()));
    }
    if (source_labels.empty()) throw ValidationError("NCE needs at least one sample");
    std::map<std::pair<int, int>, std::size_t> joint;
    std::map<int, std::size_t> marginal;
    for (std::size_t i = 0; i < source_labels.size(); ++i) {
        ++joint[{target_labels[i], source_labels[i]}];
        ++marginal[source_labels[i]];
    }
    const double n = static_cast<double>(source_labels.size());
    double score = 0.0;
    for (const auto& [key, count] : joint) {
        const double p_yz = static_cast<double>(count) / n;
        const double p_z = static_cast<double>(marginal[key.second]) / n;
        score += p_yz * std::log(p_yz / p_z);
    }
    return score;
}

namespace {

// Spectrum of F^T F padded with zeros to D entries, and the squared
// coordinates of a target vector in the left singular basis.
struct Spectrum {
    Vector sigma;  // D squared singular values
    Matrix left;   // n x k left singular vectors
};

Spectrum spectrum_of(const Matrix& features) {
    Eigen::BDCSVD<Matrix> svd(features, Eigen::ComputeThinU);
    Spectrum s;
    s.sigma = Vector::Zero(features.cols());
    const Vector sv = svd.singularValues();
    s.sigma.head(sv.size()) = sv.array().square().matrix();
    s.left = svd.matrixU();
    return s;
}

struct EvidenceParts {
    double m2;    // ||m||^2, m the posterior mean
    double res2;  // ||y - F m||^2
    double gamma; // effective number of parameters
};

EvidenceParts evidence_parts(const Vector& sigma, const Vector& x2, double res_x2, double alpha, double beta) {
    EvidenceParts e{0.0, res_x2, 0.0};
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        const double denom = alpha + beta * sigma(i);
        e.gamma += beta * sigma(i) / denom;
        e.m2 += beta * beta * sigma(i) * x2(i) / (denom * denom);
        const double shrink = alpha / denom;
        e.res2 += x2(i) * shrink * shrink;
    }
    return e;
}

double evidence_value(const Vector& sigma, double n, double alpha, double beta, const EvidenceParts& e) {
    const double d = static_cast<double>(sigma.size());
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) log_det += std::log(alpha + beta * sigma(i));
    return 0.5 * d * std::log(alpha) + 0.5 * n * std::log(beta) - 0.5 * log_det - 0.5 * beta * e.res2 -
           0.5 * alpha * e.m2 - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

struct SingleOutput {
    double evidence_per_sample;
    bool converged;
    std::size_t iterations;
};

SingleOutput maximize_evidence(const Spectrum& spec, const Vector& y, const LogmeOptions& opt) {
    const double n = static_cast<double>(y.size());
    const Vector projected = spec.left.transpose() * y;
    Vector x2 = Vector::Zero(spec.sigma.size());
    x2.head(projected.size()) = projected.array().square().matrix();
    const double res_x2 = std::max(0.0, y.squaredNorm() - projected.squaredNorm());

    double alpha = 1.0;
    double beta = 1.0;
    double previous = -std::numeric_limits<double>::infinity();
    double evidence = previous;
    for (std::size_t it = 1; it <= opt.max_iter; ++it) {
        const auto parts = evidence_parts(spec.sigma, x2, res_x2, alpha, beta);
        alpha = parts.m2 > 0.0 ? parts.gamma / parts.m2 : opt.precision_max;
        beta = parts.res2 > 0.0 ? (n - parts.gamma) / parts.res2 : opt.precision_max;
        alpha = std::clamp(std::isfinite(alpha) ? alpha : opt.precision_max, opt.precision_min, opt.precision_max);
        beta = std::clamp(std::isfinite(beta) ? beta : opt.precision_max, opt.precision_min, opt.precision_max);
        evidence = evidence_value(spec.sigma, n, alpha, beta, evidence_parts(spec.sigma, x2, res_x2, alpha, beta)) / n;
        if (!std::isfinite(evidence)) {
            throw NumericalError("LogME evidence became non-finite");
        }
        if (std::abs(evidence - previous) <= opt.tol) return {evidence, true, it};
        previous = evidence;
    }
    return {evidence, false, opt.max_iter};
}

}  // namespace

double log_evidence(const Matrix& features, const Vector& targets, double alpha, double beta) {
    if (features.rows() != targets.size()) {
        throw ValidationError("feature rows and targets differ in length");
    }
    const auto spec = spectrum_of(features);
    const Vector projected = spec.left.transpose() * targets;
    Vector x2 = Vector::Zero(spec.sigma.size());
    x2.head(projected.size()) = projected.array().square().matrix();
    const double res_x2 = std::max(0.0, targets.squaredNorm() - projected.squaredNorm());
    return evidence_value(spec.sigma, static_cast<double>(targets.size()), alpha, beta,
                          evidence_parts(spec.sigma, x2, res_x2, alpha, beta));
}

LogmeResult logme(const Matrix& features, const Vector& labels, const TaskSpec& task, const LogmeOptions& options) {
    const auto n = features.rows();
    if (n < 2) throw ValidationError("LogME needs at least 2 samples");
    if (labels.size() != n) {
        throw ValidationError(fmt::format("{} labels for {} feature rows", labels.size(), n));
    }
    if (!features.allFinite() || !labels.allFinite()) throw ValidationError("LogME inputs must be finite");

    const auto spec = spectrum_of(features);
    LogmeResult result;
    if (!task.is_classification()) {
        if ((labels.array() == labels(0)).all()) {
            throw ValidationError("LogME regression labels are all equal");
        }
        const auto out = maximize_evidence(spec, labels, options);
        result.value = out.evidence_per_sample;
        result.converged = out.converged;
        result.iterations = out.iterations;
        return result;
    }
    double sum = 0.0;
    for (int c = 0; c < task.class_count; ++c) {
        Vector indicator(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            indicator(i) = class_of(labels(i), task.class_count, i) == c ? 1.0 : 0.0;
        }
        const auto out = maximize_evidence(spec, indicator, options);
        sum += out.evidence_per_sample;
        result.converged = result.converged && out.converged;
        result.iterations = std::max(result.iterations, out.iterations);
    }
    result.value = sum / task.class_count;
    return result;
}

double hscore(const Matrix& features, const Vector& labels) {
    const auto n = features.rows();
    if (labels.size() != n) {
        throw ValidationError(fmt::format("{} labels for {} feature rows", labels.size(), n));
    }
    std::map<double, std::vector<Eigen::Index>> groups;
    for (Eigen::Index i = 0; i < n; ++i) groups[labels(i)].push_back(i);
    if (groups.size() < 2) throw ValidationError("H-score needs at least two classes");

    const Matrix centered = features.rowwise() - features.colwise().mean();
    Matrix class_means(n, features.cols());
    for (const auto& [label, rows] : groups) {
        Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(features.cols());
        for (const auto r : rows) mean += centered.row(r);
        mean /= static_cast<double>(rows.size());
        for (const auto r : rows) class_means.row(r) = mean;
    }
    const double scale = 1.0 / static_cast<double>(n);
    const Matrix cov_f = scale * centered.transpose() * centered;
    const Matrix cov_g = scale * class_means.transpose() * class_means;

    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov_f);
    const Vector& values = eig.eigenvalues();
    const double cutoff = 1e-10 * std::max(values.cwiseAbs().maxCoeff(), 0.0);
    Vector inv = Vector::Zero(values.size());
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (values(i) > cutoff) inv(i) = 1.0 / values(i);
    }
    const Matrix& vecs = eig.eigenvectors();
    const Matrix pinv = vecs * inv.asDiagonal() * vecs.transpose();
    return (pinv * cov_g).trace();
}

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ValidationError(fmt::format("pearson inputs differ in length ({} vs {})", a.size(), b.size()));
    }
    if (a.size() < 3) throw ValidationError("pearson needs at least 3 pairs");
    const double n = static_cast<double>(a.size());
    double mean_a = 0.0;
    double mean_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        mean_a += a[i];
        mean_b += b[i];
    }
    mean_a /= n;
    mean_b /= n;
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - mean_a;
        const double db = b[i] - mean_b;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) return std::nullopt;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace wdje::baselines
