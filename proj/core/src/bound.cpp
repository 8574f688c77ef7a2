#include "wdje/bound.hpp"

#include <cmath>
#include <limits>

#include <fmt/core.h>

#include "wdje/error.hpp"

namespace wdje::bound {

std::string to_string(Loss loss) { return loss == Loss::cross_entropy ? "cross_entropy" : "mse"; }

std::string to_string(Mode mode) { return mode == Mode::supervised ? "supervised" : "unsupervised"; }

Loss parse_loss(const std::string& name) {
    if (name == "cross_entropy") return Loss::cross_entropy;
    if (name == "mse") return Loss::mse;
    throw ValidationError(fmt::format("unknown loss '{}'", name));
}

void BoundConfig::validate() const {
    if (!(k_lambda_product > 0.0)) throw ValidationError("k_lambda_product must be > 0");
    if (!(M > 0.0)) throw ValidationError("M must be > 0");
    if (!(p >= 1.0)) throw ValidationError(fmt::format("p = {} must be >= 1", p));
    if (!(K_weight_sup > 0.0)) throw ValidationError("K_weight_sup must be > 0");
    if (!(k_floor > 0.0)) throw ValidationError("k_floor must be > 0");
}

double BoundReport::sum_of_terms() const {
    return source_risk + domain_term + task_term_w + task_term_moment + slack_term;
}

double spectral_norm(const Matrix& x) {
    if (x.size() == 0) return 0.0;
    const Matrix gram = x.rows() >= x.cols() ? Matrix(x.transpose() * x) : Matrix(x * x.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(eig.eigenvalues().maxCoeff(), 0.0));
}

LipschitzEstimate lipschitz_cross_entropy(const Matrix& target_features, int classes) {
    if (target_features.rows() == 0 || target_features.cols() == 0) {
        throw ValidationError("cross-entropy Lipschitz constant needs a nonempty target feature matrix");
    }
    if (classes < 2) {
        throw ValidationError(fmt::format("class count {} must be >= 2", classes));
    }
    LipschitzEstimate est;
    est.norm = spectral_norm(target_features);
    const double c = classes;
    const double n = static_cast<double>(target_features.rows());
    est.k = (c - 1.0) / (c * n) * est.norm;
    if (est.k == 0.0) est.flags.emplace_back("zero_norm");
    return est;
}

LipschitzEstimate lipschitz_mse(const Matrix& labelled_features, const Vector& labels, double K, double floor) {
    const auto n = labelled_features.rows();
    if (n == 0) {
        throw ValidationError("squared-error Lipschitz constant needs at least one labelled target row");
    }
    if (labels.size() != n) {
        throw ValidationError(fmt::format("{} labels for {} labelled rows", labels.size(), n));
    }
    if (!(K > 0.0) || !(floor > 0.0)) {
        throw ValidationError("K and the Lipschitz floor must be > 0");
    }
    LipschitzEstimate est;
    const Matrix gram = labelled_features.transpose() * labelled_features;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    est.norm = std::max(eig.eigenvalues().maxCoeff(), 0.0);
    est.label_norm = (labels.transpose() * labelled_features).norm();
    const double rows = static_cast<double>(n);
    est.k = K / rows * est.norm - 1.0 / rows * est.label_norm;
    if (!(est.k > 0.0)) {
        est.k = floor;
        est.flags.emplace_back("clamped_to_floor");
    }
    return est;
}

LambdaPhi lambda_and_phi(double k, const BoundConfig& config) {
    config.validate();
    if (!(k > 0.0) || !std::isfinite(k)) {
        throw ValidationError(fmt::format("Lipschitz constant k = {} must be positive and finite", k));
    }
    LambdaPhi out;
    out.lambda = config.k_lambda_product / k;
    out.phi = std::exp(-out.lambda);
    out.phi_underflow = out.phi < std::numeric_limits<double>::min();
    if (!std::isfinite(out.lambda)) {
        throw NumericalError(fmt::format("lambda overflowed for k = {}", k));
    }
    return out;
}

double source_label_moment(const DiscreteMeasure& labels, double p) {
    if (!(p >= 1.0)) throw ValidationError(fmt::format("p = {} must be >= 1", p));
    if (labels.is_empty()) return 0.0;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < labels.size(); ++i) {
        const double norm = labels.points().row(i).norm();
        acc += labels.weights()(i) * (p == 1.0 ? norm : std::pow(norm, p));
    }
    return p == 1.0 ? acc : std::pow(acc, 1.0 / p);
}

namespace {

void require_nonnegative(double value, const char* name) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
        throw ValidationError(fmt::format("{} = {} must be finite and >= 0", name, value));
    }
}

BoundReport assemble(double source_risk, double w_x, double task_w, double moment, double k,
                     const BoundConfig& config, Mode mode) {
    require_nonnegative(source_risk, "source_risk");
    require_nonnegative(w_x, "W_x");
    require_nonnegative(task_w, "W_y");
    require_nonnegative(moment, "label moment");
    const auto lp = lambda_and_phi(k, config);

    BoundReport r;
    r.mode = mode;
    r.source_risk = source_risk;
    r.k = k;
    r.lambda = lp.lambda;
    r.phi_lambda = lp.phi;
    r.domain_term = k * lp.lambda * w_x;
    r.task_term_w = task_w;
    r.task_term_moment = moment;
    r.slack_term = k * config.M * lp.phi;
    r.total = r.sum_of_terms();
    if (lp.phi_underflow) r.flags.emplace_back("phi_underflow");
    return r;
}

}  // namespace

BoundReport target_risk_bound(double source_risk, double w_x, double w_y_s1_t, double moment_s2, double k,
                              const BoundConfig& config) {
    return assemble(source_risk, w_x, w_y_s1_t, moment_s2, k, config, Mode::supervised);
}

BoundReport target_risk_bound_unsupervised(double source_risk, double w_x, double moment_full_source, double k,
                                           const BoundConfig& config) {
    return assemble(source_risk, w_x, 0.0, moment_full_source, k, config, Mode::unsupervised);
}

BoundReport target_risk_bound_unsupervised(double source_risk, double w_x, const DiscreteMeasure& source_labels,
                                           double k, const BoundConfig& config) {
    if (source_labels.is_empty()) {
        throw ValidationError("unsupervised bound needs the source label measure (it is empty)");
    }
    return target_risk_bound_unsupervised(source_risk, w_x, source_label_moment(source_labels, config.p), k,
                                          config);
}

void GeneralizationDiagnostics::validate() const {
    if (!(delta > 0.0 && delta <= 1.0)) {
        throw ValidationError(fmt::format("delta = {} outside (0, 1]", delta));
    }
    for (const double v : {B, M_S, rademacher, zeta, moment_q_source_x, moment_q_target_x, moment_q_s1_y,
                           moment_q_target_y}) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw ValidationError("generalization constants must be finite and >= 0");
        }
    }
    if (d < 1) throw ValidationError(fmt::format("dimension d = {} must be >= 1", d));
    if (!(p > 0.0 && p < d / 2.0)) {
        throw ValidationError(fmt::format("p = {} outside (0, d/2) = (0, {})", p, d / 2.0));
    }
    if (!(q > p)) throw ValidationError(fmt::format("q = {} must exceed p = {}", q, p));
    if (d != p && q == d / (d - p)) {
        throw ValidationError(fmt::format("q = {} must differ from d/(d-p)", q));
    }
}

GeneralizationDiagnostics generalization_terms(GeneralizationDiagnostics diag, long n_source, long n_target,
                                               long n_t1) {
    diag.validate();
    if (n_source < 1 || n_target < 1 || n_t1 < 1) {
        throw ValidationError("sample counts N_S, N_T and N_t1 must be >= 1");
    }
    const double log_inv_delta = std::log(1.0 / diag.delta);
    const double ns = static_cast<double>(n_source);
    const double nt = static_cast<double>(n_target);
    const double nl = static_cast<double>(n_t1);
    const double p = diag.p;
    const double q = diag.q;
    const double d = diag.d;
    auto rate = [&](double count) { return std::pow(count, -p / d) + std::pow(count, -(q - p) / q); };
    auto moment = [&](double mq) { return std::pow(mq, p / q); };

    diag.sampling_terms = {
        {"feature_sampling", diag.B * std::sqrt(0.5 * log_inv_delta) * (1.0 / std::sqrt(ns) + 1.0 / std::sqrt(nt))},
        {"label_sampling", diag.B * std::sqrt(log_inv_delta / (2.0 * std::sqrt(nl)))},
        {"gamma_x", diag.zeta * moment(diag.moment_q_source_x) * rate(ns) +
                        diag.zeta * moment(diag.moment_q_target_x) * rate(nt)},
        {"gamma_y", diag.zeta * (moment(diag.moment_q_s1_y) + moment(diag.moment_q_target_y)) * rate(nl)},
        {"source_generalization", 2.0 * diag.rademacher + diag.M_S * std::sqrt(log_inv_delta / (2.0 * ns))},
    };
    diag.total_slack = 0.0;
    for (const auto& [name, value] : diag.sampling_terms) diag.total_slack += value;
    return diag;
}

BoundReport with_diagnostics(BoundReport report, GeneralizationDiagnostics diag) {
    report.diagnostics = std::move(diag);
    return report;
}

TaskDifferenceCheck check_task_difference(const DiscreteMeasure& source_labels, const SourceLabelSplit& split,
                                          const DiscreteMeasure& target_labels, const ot::WassersteinConfig& ot) {
    TaskDifferenceCheck check;
    check.lhs = ot::wasserstein(source_labels, target_labels, ot).distance;
    const double w_s1 = split.s1.is_empty() ? 0.0 : ot::wasserstein(split.s1, target_labels, ot).distance;
    check.rhs = w_s1 + source_label_moment(split.s2, ot.p);
    check.holds = check.lhs <= check.rhs + 1e-12;
    return check;
}

}  // namespace wdje::bound
