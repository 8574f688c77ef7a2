#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wdje/measures.hpp"
#include "wdje/ot.hpp"

namespace wdje::bound {

enum class Loss { cross_entropy, mse };
enum class Mode { supervised, unsupervised };

std::string to_string(Loss loss);
std::string to_string(Mode mode);
Loss parse_loss(const std::string& name);

struct BoundConfig {
    Loss loss = Loss::cross_entropy;
    double k_lambda_product = 0.001;  // k * lambda
    double M = 1.0;                   // loss bound on the output space
    double p = 1.0;                   // Wasserstein order, shared with the OT config
    double K_weight_sup = 1.0;        // supremum of regressor weights (mse only)
    double k_floor = 1e-6;            // clamp for non-positive mse Lipschitz estimates
    LabelEncoding label_encoding = LabelEncoding::raw_scalar();

    void validate() const;
};

/// Lipschitz estimate plus the norm it was derived from.
struct LipschitzEstimate {
    double k = 0;
    double norm = 0;                // spectral norm of X (cross-entropy) or of X^T X (mse)
    double label_norm = 0;          // ||y^T X|| (mse only)
    std::vector<std::string> flags; // "zero_norm", "clamped_to_floor"
};

/// Sampling constants. All user supplied: rademacher complexity,
/// the concentration constant zeta and the q-th moments M_q of the four
/// underlying distributions cannot be estimated from the data here.
struct GeneralizationDiagnostics {
    double delta = 0.05;
    double B = 1.0;
    double M_S = 1.0;
    double rademacher = 0.0;
    double zeta = 0.0;
    double q = 2.0;
    int d = 3;
    double p = 1.0;
    double moment_q_source_x = 1.0;
    double moment_q_target_x = 1.0;
    double moment_q_s1_y = 1.0;
    double moment_q_target_y = 1.0;
    /// Named terms, filled by generalization_terms.
    std::vector<std::pair<std::string, double>> sampling_terms;
    double total_slack = 0.0;

    void validate() const;
};

struct BoundReport {
    double source_risk = 0;
    double k = 0;
    double lambda = 0;
    double phi_lambda = 0;
    double domain_term = 0;       // k * lambda * W_x
    double task_term_w = 0;       // W[p^S1(y), p^T(y)]
    double task_term_moment = 0;  // E_{S2}[||y||^p]^(1/p)
    double slack_term = 0;        // k * M * phi(lambda)
    double total = 0;
    Mode mode = Mode::supervised;
    std::optional<GeneralizationDiagnostics> diagnostics;
    std::vector<std::string> flags;

    /// source_risk + domain_term + task_term_w + task_term_moment + slack_term,
    /// summed in that order (the same order used to form `total`).
    double sum_of_terms() const;
};

/// Spectral norm (largest singular value).
double spectral_norm(const Matrix& x);

/// k = ((c - 1) / (c * N_T)) * ||X||_2 for softmax cross-entropy.
LipschitzEstimate lipschitz_cross_entropy(const Matrix& target_features, int classes);

/// k = (K / N_t1) ||X^T X||_2 - (1 / N_t1) ||y^T X||_2 for squared error;
/// non-positive results are clamped to `floor` and flagged.
LipschitzEstimate lipschitz_mse(const Matrix& labelled_features, const Vector& labels, double K = 1.0,
                                double floor = 1e-6);

struct LambdaPhi {
    double lambda = 0;
    double phi = 0;
    bool phi_underflow = false;
};

/// lambda = k_lambda_product / k, phi = exp(-lambda).
LambdaPhi lambda_and_phi(double k, const BoundConfig& config);

/// (sum_i w_i ||y_i||^p)^(1/p); 0 for an empty measure.
double source_label_moment(const DiscreteMeasure& labels, double p);

BoundReport target_risk_bound(double source_risk, double w_x, double w_y_s1_t, double moment_s2, double k,
                              const BoundConfig& config);

BoundReport target_risk_bound_unsupervised(double source_risk, double w_x, double moment_full_source, double k,
                                           const BoundConfig& config);

/// Unsupervised bound with the moment taken from the full source label
/// measure; an empty measure is rejected.
BoundReport target_risk_bound_unsupervised(double source_risk, double w_x, const DiscreteMeasure& source_labels,
                                           double k, const BoundConfig& config);

/// Evaluates the finite-sample terms and stores them in diag.sampling_terms
/// (and their sum in diag.total_slack). Returns the filled copy.
GeneralizationDiagnostics generalization_terms(GeneralizationDiagnostics diag, long n_source, long n_target,
                                               long n_t1);

/// Attaches diagnostics to a report without touching its total.
BoundReport with_diagnostics(BoundReport report, GeneralizationDiagnostics diag);

/// Empirical evaluation of both sides of the task-difference inequality
/// W[S, T] <= W[S1, T] + E_{S2}||y||^p^(1/p). Reported, never asserted.
struct TaskDifferenceCheck {
    double lhs = 0;
    double rhs = 0;
    bool holds = true;
};

TaskDifferenceCheck check_task_difference(const DiscreteMeasure& source_labels, const SourceLabelSplit& split,
                                          const DiscreteMeasure& target_labels, const ot::WassersteinConfig& ot);

}  // namespace wdje::bound
