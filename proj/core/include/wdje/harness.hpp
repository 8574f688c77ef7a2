#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "wdje/bound.hpp"
#include "wdje/measures.hpp"
#include "wdje/models.hpp"
#include "wdje/ot.hpp"
#include "wdje/transferability.hpp"

namespace wdje::harness {

/// Gaussian source/target pair. Classification: one cluster per class with
/// centre j * e_0; the target centres move by mean_shift along (1, ..., 1)/sqrt(d)
/// and target class j is relabelled label_permutation[j]. Regression:
/// y = w^T x + b + noise with target inputs moved as above and target
/// outputs offset by label_shift.
struct SyntheticConfig {
    TaskSpec task = TaskSpec::classification(4);
    int feature_dim = 8;
    int samples_per_domain = 200;
    double mean_shift = 0.0;
    std::vector<int> label_permutation;  // empty = identity
    double label_shift = 0.0;
    double noise_sigma = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

std::pair<Dataset, Dataset> gen_synthetic_pair(const SyntheticConfig& config);

enum class Evaluation { training, held_out };

std::string to_string(Evaluation evaluation);
Evaluation parse_evaluation(const std::string& name);

/// The bound's loss and label encoding follow the task (cross-entropy with
/// one-hot labels, or squared error with raw labels); bound.loss and
/// bound.label_encoding are overwritten per cell.
struct PipelineConfig {
    bound::BoundConfig bound;
    ot::WassersteinConfig ot;
    models::ModelKind model = models::ModelKind::multinomial_logistic;
    models::Hyper hyper;
    /// Fraction of each subsampled target set treated as labelled (its first
    /// rows). Zero routes the cell to the unsupervised bound.
    double labelled_fraction = 1.0;
    /// held_out scores the risks on the unlabelled remainder when it exists.
    Evaluation evaluation = Evaluation::training;
    bool baselines = true;
    std::size_t threads = 1;
    std::string task_prefix;

    void validate() const;
};

struct SweepGrid {
    std::vector<std::optional<int>> c_values{std::nullopt};
    std::vector<double> r_values{1.0};
    std::vector<std::uint64_t> seeds{0};

    void validate() const;
    std::size_t size() const { return c_values.size() * r_values.size() * seeds.size(); }
};

struct SweepRow {
    std::string task_id;
    std::optional<int> c;
    double r = 0;
    std::uint64_t seed = 0;
    double bound_total = 0;
    double tr_score = 0;
    double risk_without = 0;
    double risk_with = 0;
    double empirical_tr = 0;
    std::optional<double> leep;
    std::optional<double> nce;
    std::optional<double> logme;
    std::optional<double> hscore;
    std::string status = "ok";  // "ok" or "error: <message>"

    // Detail carried into the JSON report only.
    double accuracy_without = 0;
    double accuracy_with = 0;
    double w_x = 0;
    long n_source = 0;
    long n_target = 0;
    long n_t1 = 0;
    bound::BoundReport bound;
    std::vector<std::string> warnings;

    bool ok() const { return status == "ok"; }
};

/// Source/target pair given directly, or regenerated per seed from a config.
using SweepInput = std::variant<std::pair<Dataset, Dataset>, SyntheticConfig>;

/// One cell: subsample (c, r, seed), bound, risks, score and baselines.
/// Failures are reported in the row's status.
SweepRow run_cell(const Dataset& source, const Dataset& target, std::optional<int> c, double r, std::uint64_t seed,
                  const PipelineConfig& config);

/// Rows in grid order (c outer, then r, then seed).
std::vector<SweepRow> run_sweep(const SweepInput& input, const SweepGrid& grid, const PipelineConfig& config);

struct MetricCorrelation {
    std::string metric;
    std::string against;
    std::optional<double> pearson;  // nullopt: zero variance or fewer than 3 values
    std::size_t rows = 0;
};

struct SweepEvaluation {
    std::vector<MetricCorrelation> pearson;
    ConfusionMatrix confusion;
    ConsistencyResult ci;
    std::size_t rows_used = 0;
};

/// Correlations of every metric column with risk_with (tr_score with
/// empirical_tr), confusion counts and CI over rows with status ok.
SweepEvaluation evaluate_sweep(const std::vector<SweepRow>& rows);

}  // namespace wdje::harness
