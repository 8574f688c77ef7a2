#pragma once

#include <optional>
#include <span>
#include <vector>

#include "wdje/measures.hpp"

namespace wdje::baselines {

/// Softmax outputs of a source model on target samples (n x Z).
class SourcePredictions {
  public:
    explicit SourcePredictions(Matrix probs);

    const Matrix& probs() const { return probs_; }
    /// Row-wise argmax (first maximum wins).
    const std::vector<int>& pseudo_labels() const { return pseudo_labels_; }

  private:
    Matrix probs_;
    std::vector<int> pseudo_labels_;
};

/// Log expected empirical prediction. Always <= 0.
double leep(const SourcePredictions& preds, const Vector& labels, int classes);

/// Negative conditional entropy -H(Y | Z) of target labels given source
/// pseudo-labels. Always <= 0.
double nce(std::span<const int> source_labels, std::span<const int> target_labels);

struct LogmeOptions {
    std::size_t max_iter = 100;
    double tol = 1e-6;  // on the per-sample evidence
    // Box for the prior/noise precisions. Evidence that keeps growing (labels
    // interpolated exactly, or a class absent) settles on the box edge.
    double precision_min = 1e-6;
    double precision_max = 1e6;
};

struct LogmeResult {
    double value = 0;  // mean over output dimensions of the maximized log evidence per sample
    bool converged = true;
    std::size_t iterations = 0;  // worst case over output dimensions
};

/// Log marginal evidence of Bayesian linear regression on the features,
/// maximized over (alpha, beta) by MacKay fixed-point updates on the SVD of
/// the feature matrix. Classification labels are expanded one-vs-rest.
LogmeResult logme(const Matrix& features, const Vector& labels, const TaskSpec& task, const LogmeOptions& options = {});

/// Closed-form log evidence log p(y | F, alpha, beta) (not divided by n),
/// evaluated with the SVD of F. Exposed for diagnostics and tests.
double log_evidence(const Matrix& features, const Vector& targets, double alpha, double beta);

/// tr(pinv(cov(F)) * cov(E[F | y])), pseudo-inverse cutoff 1e-10 * largest eigenvalue.
double hscore(const Matrix& features, const Vector& labels);

/// Sample correlation; nullopt when either input has zero variance.
std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

}  // namespace wdje::baselines
