#include "wdje/measures.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <fmt/core.h>

#include "wdje/error.hpp"

namespace wdje {

namespace {

void check_finite_features(const Matrix& features) {
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
        for (Eigen::Index j = 0; j < features.cols(); ++j) {
            if (!std::isfinite(features(i, j))) {
                throw ValidationError(fmt::format("non-finite feature at row {}, column {}", i, j));
            }
        }
    }
}

bool is_class_index(double value, int classes) {
    return value >= 0.0 && value <= classes - 1 && value == std::floor(value);
}

}  // namespace

Dataset::Dataset(Matrix features, std::optional<Vector> labels, TaskSpec task, std::string name)
    : features_(std::move(features)), labels_(std::move(labels)), task_(task), name_(std::move(name)) {
    if (task_.is_classification() && task_.class_count < 2) {
        throw ValidationError(fmt::format("classification needs at least 2 classes, got {}", task_.class_count));
    }
    check_finite_features(features_);
    if (!labels_) return;
    if (labels_->size() != features_.rows()) {
        throw ValidationError(fmt::format("label count {} does not match row count {}", labels_->size(),
                                          features_.rows()));
    }
    for (Eigen::Index i = 0; i < labels_->size(); ++i) {
        const double y = (*labels_)(i);
        if (!std::isfinite(y)) {
            throw ValidationError(fmt::format("non-finite label at row {}", i));
        }
        if (task_.is_classification() && !is_class_index(y, task_.class_count)) {
            throw ValidationError(
                fmt::format("label {} at row {} is not a class index in [0, {}]", y, i, task_.class_count - 1));
        }
    }
}

const Vector& Dataset::require_labels() const {
    if (!labels_) {
        throw ValidationError(fmt::format("dataset '{}' has no labels", name_));
    }
    return *labels_;
}

Dataset Dataset::select_rows(const std::vector<Eigen::Index>& rows) const {
    Matrix features(static_cast<Eigen::Index>(rows.size()), dim());
    std::optional<Vector> labels;
    if (labels_) labels.emplace(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto src = rows[r];
        if (src < 0 || src >= size()) {
            throw ValidationError(fmt::format("row index {} out of range", src));
        }
        features.row(static_cast<Eigen::Index>(r)) = features_.row(src);
        if (labels) (*labels)(static_cast<Eigen::Index>(r)) = (*labels_)(src);
    }
    return Dataset(std::move(features), std::move(labels), task_, name_);
}

Dataset Dataset::head(Eigen::Index count) const {
    count = std::clamp<Eigen::Index>(count, 0, size());
    std::optional<Vector> labels;
    if (labels_) labels = labels_->head(count);
    return Dataset(features_.topRows(count), std::move(labels), task_, name_);
}

// ---------------------------------------------------------------------------

DiscreteMeasure::DiscreteMeasure(Matrix points, Vector weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
    if (points_.rows() != weights_.size()) {
        throw ValidationError(
            fmt::format("measure has {} points but {} weights", points_.rows(), weights_.size()));
    }
    if (points_.rows() == 0) {
        throw ValidationError("empty measure");
    }
    if ((weights_.array() < 0.0).any() || !weights_.allFinite()) {
        throw ValidationError("measure weights must be finite and nonnegative");
    }
    if (std::abs(weights_.sum() - 1.0) > 1e-12) {
        throw ValidationError(fmt::format("measure weights sum to {:.17g}, expected 1", weights_.sum()));
    }
    check_finite_features(points_);
}

DiscreteMeasure DiscreteMeasure::empty(Eigen::Index dim) {
    DiscreteMeasure m;
    m.points_ = Matrix(0, dim);
    m.weights_ = Vector(0);
    return m;
}

bool DiscreteMeasure::identical_to(const DiscreteMeasure& other) const {
    return points_.rows() == other.points_.rows() && points_.cols() == other.points_.cols() &&
           points_ == other.points_ && weights_ == other.weights_;
}

// ---------------------------------------------------------------------------

LabelEncoding LabelEncoding::default_for(const TaskSpec& task) {
    return task.is_classification() ? one_hot(task.class_count) : raw_scalar();
}

void LabelEncoding::validate_for(const TaskSpec& task) const {
    if (mode == Mode::one_hot) {
        if (!task.is_classification()) {
            throw ValidationError("one-hot label encoding requires a classification task");
        }
        if (!class_count || *class_count < 2) {
            throw ValidationError("one-hot label encoding requires class_count >= 2");
        }
    }
}

Matrix encode_labels(const Vector& labels, const LabelEncoding& encoding) {
    if (encoding.mode == LabelEncoding::Mode::raw_scalar) {
        return labels;
    }
    if (!encoding.class_count || *encoding.class_count < 2) {
        throw ValidationError("one-hot label encoding requires class_count >= 2");
    }
    const int classes = *encoding.class_count;
    Matrix out = Matrix::Zero(labels.size(), classes);
    for (Eigen::Index i = 0; i < labels.size(); ++i) {
        if (!is_class_index(labels(i), classes)) {
            throw ValidationError(fmt::format("label {} at row {} cannot be one-hot encoded with {} classes",
                                              labels(i), i, classes));
        }
        out(i, static_cast<Eigen::Index>(labels(i))) = 1.0;
    }
    return out;
}

DiscreteMeasure empirical_measure(const Matrix& points, const std::optional<Vector>& weights) {
    const auto n = points.rows();
    if (n == 0) {
        throw ValidationError("empty measure");
    }
    const Vector raw = weights.value_or(Vector::Ones(n));
    if (raw.size() != n) {
        throw ValidationError(fmt::format("measure has {} points but {} weights", n, raw.size()));
    }
    if ((raw.array() < 0.0).any() || !raw.allFinite()) {
        throw ValidationError("measure weights must be finite and nonnegative");
    }
    const double total = raw.sum();
    if (total <= 0.0) {
        throw ValidationError("measure weights are all zero");
    }
    Vector normalized = raw / total;
    // Push the rounding residue onto the largest weight so the sum is 1 to the last ulp.
    Eigen::Index largest = 0;
    normalized.maxCoeff(&largest);
    normalized(largest) += 1.0 - normalized.sum();
    normalized(largest) = std::max(normalized(largest), 0.0);
    return DiscreteMeasure(points, std::move(normalized));
}

DiscreteMeasure label_measure(const Dataset& dataset, const LabelEncoding& encoding) {
    return empirical_measure(encode_labels(dataset.require_labels(), encoding));
}

SourceLabelSplit split_source_labels(const Dataset& source, Eigen::Index n_t1, const LabelEncoding& encoding) {
    const Vector& labels = source.require_labels();
    const auto n = labels.size();
    if (n_t1 < 0 || n_t1 > n) {
        throw ValidationError(fmt::format("n_t1 = {} outside [0, {}]", n_t1, n));
    }
    const Matrix encoded = encode_labels(labels, encoding);
    const auto dim = encoded.cols();
    auto s1 = n_t1 == 0 ? DiscreteMeasure::empty(dim) : empirical_measure(encoded.topRows(n_t1));
    auto s2 = n_t1 == n ? DiscreteMeasure::empty(dim) : empirical_measure(encoded.bottomRows(n - n_t1));
    return {std::move(s1), std::move(s2)};
}

SourceLabelSplit split_source_labels(const Dataset& source, Eigen::Index n_t1) {
    return split_source_labels(source, n_t1, LabelEncoding::default_for(source.task()));
}

namespace {

// Unbiased integer in [0, bound) by rejection; avoids the implementation-defined
// std::uniform_int_distribution so row selections match across standard libraries.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw = rng();
    while (draw >= limit) draw = rng();
    return draw % bound;
}

}  // namespace

Dataset subsample_task(const Dataset& dataset, std::optional<int> classes, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio <= 1.0)) {
        throw ValidationError(fmt::format("sampling ratio {} outside (0, 1]", ratio));
    }
    TaskSpec task = dataset.task();
    std::vector<Eigen::Index> pool;
    pool.reserve(static_cast<std::size_t>(dataset.size()));
    if (classes && task.is_classification()) {
        if (*classes < 2 || *classes > task.class_count) {
            throw ValidationError(
                fmt::format("class subset {} outside [2, {}]", *classes, task.class_count));
        }
        const Vector& labels = dataset.require_labels();
        for (Eigen::Index i = 0; i < dataset.size(); ++i) {
            if (labels(i) < *classes) pool.push_back(i);
        }
        task.class_count = *classes;
    } else {
        for (Eigen::Index i = 0; i < dataset.size(); ++i) pool.push_back(i);
    }
    const auto keep = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(pool.size()) - 1e-9));
    if (keep == 0) {
        throw ValidationError("subsampled dataset is empty");
    }
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < keep; ++i) {
        const auto j = i + bounded(rng, pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(keep);
    std::sort(pool.begin(), pool.end());

    const Dataset picked = dataset.select_rows(pool);
    return Dataset(picked.features(), picked.labels(), task, dataset.name());
}

// ---------------------------------------------------------------------------
// File formats

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream stream(line);
    while (std::getline(stream, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_real(const std::string& cell, std::size_t row, std::size_t col, const std::string& column) {
    if (cell.empty()) {
        throw ValidationError(fmt::format("empty cell at row {}, column {} ('{}')", row, col, column));
    }
    char* end = nullptr;
    const double value = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size()) {
        throw ValidationError(
            fmt::format("cannot parse '{}' as a real at row {}, column {} ('{}')", cell, row, col, column));
    }
    if (!std::isfinite(value)) {
        throw ValidationError(
            fmt::format("non-finite value '{}' at row {}, column {} ('{}')", cell, row, col, column));
    }
    return value;
}

Dataset load_csv(const std::filesystem::path& path, TaskSpec task, const std::string& label_column) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError(fmt::format("cannot open '{}'", path.string()));
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError(fmt::format("'{}' is empty (a header row is required)", path.string()));
    }
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = split_csv_line(line);
    std::optional<std::size_t> label_index;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == label_column) {
            if (label_index) {
                throw ValidationError(fmt::format("duplicate label column '{}'", label_column));
            }
            label_index = c;
        }
    }
    if (label_index && *label_index != header.size() - 1) {
        throw ValidationError(fmt::format("label column '{}' must be the last column", label_column));
    }
    const std::size_t feature_cols = header.size() - (label_index ? 1 : 0);

    std::vector<double> values;
    std::vector<double> labels;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw ValidationError(fmt::format("row {} has {} cells, header has {}", row, cells.size(),
                                              header.size()));
        }
        for (std::size_t c = 0; c < feature_cols; ++c) {
            values.push_back(parse_real(cells[c], row, c, header[c]));
        }
        if (label_index) {
            labels.push_back(parse_real(cells[*label_index], row, *label_index, header[*label_index]));
        }
        ++row;
    }

    Matrix features(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(feature_cols));
    for (std::size_t r = 0; r < row; ++r) {
        for (std::size_t c = 0; c < feature_cols; ++c) {
            features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r * feature_cols + c];
        }
    }
    std::optional<Vector> label_vec;
    if (label_index) label_vec = Eigen::Map<const Vector>(labels.data(), static_cast<Eigen::Index>(labels.size()));
    return Dataset(std::move(features), std::move(label_vec), task, path.stem().string());
}

constexpr char kMagic[4] = {'W', 'D', 'J', 'E'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_le(std::ostream& out, T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    auto bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.put(static_cast<char>(bits & 0xFFu));
        if constexpr (sizeof(T) > 1) bits >>= 8;
    }
}

template <typename T>
T read_le(std::istream& in, const char* what) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        const int byte = in.get();
        if (byte == std::char_traits<char>::eof()) {
            throw ValidationError(fmt::format("truncated binary dataset while reading {}", what));
        }
        bits |= static_cast<U>(static_cast<std::uint8_t>(byte)) << (8 * i);
    }
    return std::bit_cast<T>(bits);
}

void write_block(std::ostream& out, const Matrix& m) {
    write_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    write_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) write_le<double>(out, m(i, j));
    }
}

Matrix read_block(std::istream& in, const char* what) {
    const auto rows = read_le<std::uint64_t>(in, what);
    const auto cols = read_le<std::uint64_t>(in, what);
    constexpr std::uint64_t kMaxCells = std::uint64_t{1} << 36;
    if (cols != 0 && rows > kMaxCells / cols) {
        throw ValidationError(fmt::format("implausible {} block size {}x{}", what, rows, cols));
    }
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            m(i, j) = read_le<double>(in, what);
            if (!std::isfinite(m(i, j))) {
                throw ValidationError(fmt::format("non-finite {} value at row {}, column {}", what, i, j));
            }
        }
    }
    return m;
}

Dataset load_binary(const std::filesystem::path& path, TaskSpec task) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError(fmt::format("cannot open '{}'", path.string()));
    }
    char magic[4] = {};
    in.read(magic, 4);
    if (in.gcount() != 4 || !std::equal(magic, magic + 4, kMagic)) {
        throw ValidationError(fmt::format("'{}' is not a WDJE binary dataset (bad magic)", path.string()));
    }
    const auto version = read_le<std::uint32_t>(in, "version");
    if (version != kVersion) {
        throw ValidationError(fmt::format("unsupported binary dataset version {}", version));
    }
    Matrix features = read_block(in, "feature");
    const auto tag = read_le<std::uint8_t>(in, "label tag");
    std::optional<Vector> labels;
    if (tag == 1) {
        Matrix block = read_block(in, "label");
        if (block.cols() != 1) {
            throw ValidationError(fmt::format("label block must have one column, found {}", block.cols()));
        }
        labels = block.col(0);
    } else if (tag != 0) {
        throw ValidationError(fmt::format("invalid label tag {}", tag));
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw ValidationError("trailing bytes after binary dataset");
    }
    return Dataset(std::move(features), std::move(labels), task, path.stem().string());
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path, DataFormat format, TaskSpec task,
                     const std::optional<std::string>& label_column) {
    if (!std::filesystem::exists(path)) {
        throw ValidationError(fmt::format("file not found: '{}'", path.string()));
    }
    if (format == DataFormat::csv) {
        return load_csv(path, task, label_column.value_or("label"));
    }
    return load_binary(path, task);
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path, DataFormat format) {
    if (format == DataFormat::binary) {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError(fmt::format("cannot write '{}'", path.string()));
        out.write(kMagic, 4);
        write_le<std::uint32_t>(out, kVersion);
        write_block(out, dataset.features());
        write_le<std::uint8_t>(out, dataset.has_labels() ? 1 : 0);
        if (dataset.has_labels()) write_block(out, Matrix(*dataset.labels()));
        return;
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ValidationError(fmt::format("cannot write '{}'", path.string()));
    for (Eigen::Index j = 0; j < dataset.dim(); ++j) {
        out << (j ? "," : "") << "f" << j;
    }
    if (dataset.has_labels()) out << (dataset.dim() ? "," : "") << "label";
    out << '\n';
    for (Eigen::Index i = 0; i < dataset.size(); ++i) {
        for (Eigen::Index j = 0; j < dataset.dim(); ++j) {
            out << (j ? "," : "") << fmt::format("{}", dataset.features()(i, j));
        }
        if (dataset.has_labels()) {
            out << (dataset.dim() ? "," : "") << fmt::format("{}", (*dataset.labels())(i));
        }
        out << '\n';
    }
}

}  // namespace wdje
