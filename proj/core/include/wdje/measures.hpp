#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace wdje {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class TaskKind { classification, regression };

/// Kind of supervised task plus the class count for classification.
struct TaskSpec {
    TaskKind kind = TaskKind::regression;
    int class_count = 0;

    static TaskSpec classification(int classes) { return {TaskKind::classification, classes}; }
    static TaskSpec regression() { return {TaskKind::regression, 0}; }

    bool is_classification() const { return kind == TaskKind::classification; }
    bool operator==(const TaskSpec&) const = default;
};

/// Feature matrix with optional labels. Rows are samples.
///
/// Classification labels are stored as integral doubles in [0, C-1]. The
/// constructor validates every invariant and throws ValidationError with the
/// offending row/column.
class Dataset {
  public:
    Dataset(Matrix features, std::optional<Vector> labels, TaskSpec task, std::string name = {});

    const Matrix& features() const { return features_; }
    const std::optional<Vector>& labels() const { return labels_; }
    bool has_labels() const { return labels_.has_value(); }
    const TaskSpec& task() const { return task_; }
    const std::string& name() const { return name_; }

    Eigen::Index size() const { return features_.rows(); }
    Eigen::Index dim() const { return features_.cols(); }

    /// Labels, throwing ValidationError when the dataset is unlabelled.
    const Vector& require_labels() const;

    /// Rows selected by index, in the given order.
    Dataset select_rows(const std::vector<Eigen::Index>& rows) const;

    /// First `count` rows (count clamped to size()).
    Dataset head(Eigen::Index count) const;

  private:
    Matrix features_;
    std::optional<Vector> labels_;
    TaskSpec task_;
    std::string name_;
};

/// Weighted Dirac mixture. An empty measure carries only its point dimension.
class DiscreteMeasure {
  public:
    DiscreteMeasure(Matrix points, Vector weights);

    static DiscreteMeasure empty(Eigen::Index dim);

    const Matrix& points() const { return points_; }
    const Vector& weights() const { return weights_; }
    bool is_empty() const { return points_.rows() == 0; }
    Eigen::Index size() const { return points_.rows(); }
    Eigen::Index dim() const { return points_.cols(); }

    /// True for identical support coordinates and weights, point by point.
    bool identical_to(const DiscreteMeasure& other) const;

  private:
    DiscreteMeasure() = default;
    Matrix points_;
    Vector weights_;
};

struct LabelEncoding {
    enum class Mode { one_hot, raw_scalar };
    Mode mode = Mode::raw_scalar;
    std::optional<int> class_count;

    static LabelEncoding one_hot(int classes) { return {Mode::one_hot, classes}; }
    static LabelEncoding raw_scalar() { return {Mode::raw_scalar, std::nullopt}; }

    /// One-hot for classification, raw scalars for regression.
    static LabelEncoding default_for(const TaskSpec& task);

    /// Throws ValidationError when the mode is inconsistent with the task.
    void validate_for(const TaskSpec& task) const;
};

enum class DataFormat { csv, binary };

/// Reads a dataset. `label_column` names the label column in CSV headers
/// (default "label"); when the column is absent the dataset is unlabelled.
Dataset load_dataset(const std::filesystem::path& path, DataFormat format, TaskSpec task,
                     const std::optional<std::string>& label_column = std::nullopt);

void save_dataset(const Dataset& dataset, const std::filesystem::path& path, DataFormat format);

/// Uniform weights when `weights` is absent, otherwise renormalized to sum 1.
DiscreteMeasure empirical_measure(const Matrix& points, const std::optional<Vector>& weights = std::nullopt);

Matrix encode_labels(const Vector& labels, const LabelEncoding& encoding);

/// Uniform empirical measure over the encoded labels of a labelled dataset.
DiscreteMeasure label_measure(const Dataset& dataset, const LabelEncoding& encoding);

struct SourceLabelSplit {
    DiscreteMeasure s1;  // first n_t1 source labels
    DiscreteMeasure s2;  // remaining N_S - n_t1 labels
};

SourceLabelSplit split_source_labels(const Dataset& source, Eigen::Index n_t1, const LabelEncoding& encoding);
SourceLabelSplit split_source_labels(const Dataset& source, Eigen::Index n_t1);

/// Keeps rows with label < classes (classification only), then draws
/// ceil(ratio * remaining) rows without replacement. Selected rows keep their
/// original relative order. The generator is std::mt19937_64 seeded with
/// `seed`; indices are chosen by a partial Fisher-Yates shuffle.
Dataset subsample_task(const Dataset& dataset, std::optional<int> classes, double ratio, std::uint64_t seed);

}  // namespace wdje
