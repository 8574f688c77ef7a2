#include <algorithm>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "wdje/error.hpp"
#include "wdje/measures.hpp"

namespace wdje {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    auto dir = fs::temp_directory_path() / "wdje_tests" / info->test_suite_name() / info->name();
    fs::create_directories(dir);
    return dir / name;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

TEST(LoadDataset, ParsesSmallCsv) {
    const auto path = scratch("d.csv");
    write_text(path, "f0,f1,label\n0,0,0\n1,0,1\n0,1,1\n");
    const auto ds = load_dataset(path, DataFormat::csv, TaskSpec::classification(2));
    ASSERT_EQ(ds.size(), 3);
    ASSERT_EQ(ds.dim(), 2);
    ASSERT_TRUE(ds.has_labels());
    EXPECT_EQ(*ds.labels(), (Vector(3) << 0, 1, 1).finished());
    EXPECT_EQ(ds.features()(1, 0), 1.0);
    EXPECT_EQ(ds.features()(2, 1), 1.0);
}

TEST(LoadDataset, MissingLabelColumnGivesUnlabelled) {
    const auto path = scratch("d.csv");
    write_text(path, "f0,f1\n0.5,1e-3\n-2,3\n");
    const auto ds = load_dataset(path, DataFormat::csv, TaskSpec::regression());
    EXPECT_FALSE(ds.has_labels());
    EXPECT_EQ(ds.features()(0, 1), 1e-3);
    EXPECT_THROW(ds.require_labels(), ValidationError);
}

TEST(LoadDataset, BinaryRoundTripIsBitExact) {
    testing::Gen gen(11);
    const Matrix x = gen.matrix(17, 3);
    Vector y(17);
    for (Eigen::Index i = 0; i < 17; ++i) y(i) = static_cast<double>(i % 4);
    const Dataset ds(x, y, TaskSpec::classification(4), "rt");
    const auto bin = scratch("d.bin");
    const auto csv = scratch("d.csv");
    save_dataset(ds, bin, DataFormat::binary);
    save_dataset(ds, csv, DataFormat::csv);
    const auto from_bin = load_dataset(bin, DataFormat::binary, TaskSpec::classification(4));
    const auto from_csv = load_dataset(csv, DataFormat::csv, TaskSpec::classification(4));
    EXPECT_EQ(from_bin.features(), x);
    EXPECT_EQ(from_csv.features(), x);  // shortest round-trip text
    EXPECT_EQ(*from_bin.labels(), y);
    EXPECT_EQ(*from_csv.labels(), y);
}

TEST(LoadDataset, NanCellNamesRowAndColumn) {
    const auto path = scratch("d.csv");
    write_text(path, "f0,f1,label\n0,0,0\n1,NaN,1\n");
    try {
        load_dataset(path, DataFormat::csv, TaskSpec::classification(2));
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("row"), std::string::npos) << msg;
        EXPECT_NE(msg.find("f1"), std::string::npos) << msg;
    }
}

TEST(LoadDataset, RejectsMalformedInputs) {
    const auto ragged = scratch("ragged.csv");
    write_text(ragged, "f0,f1\n0,0\n1\n");
    EXPECT_THROW(load_dataset(ragged, DataFormat::csv, TaskSpec::regression()), ValidationError);

    const auto bad_label = scratch("label.csv");
    write_text(bad_label, "f0,label\n0,2\n");
    EXPECT_THROW(load_dataset(bad_label, DataFormat::csv, TaskSpec::classification(2)), ValidationError);

    const auto junk = scratch("junk.bin");
    write_text(junk, "NOPE");
    EXPECT_THROW(load_dataset(junk, DataFormat::binary, TaskSpec::regression()), ValidationError);

    EXPECT_THROW(load_dataset(scratch("absent.csv"), DataFormat::csv, TaskSpec::regression()), ValidationError);
}

TEST(LoadDataset, BinaryRejectsTrailingBytes) {
    const Dataset ds(Matrix::Ones(2, 2), std::nullopt, TaskSpec::regression());
    const auto path = scratch("d.bin");
    save_dataset(ds, path, DataFormat::binary);
    {
        std::ofstream out(path, std::ios::binary | std::ios::app);
        out << 'x';
    }
    EXPECT_THROW(load_dataset(path, DataFormat::binary, TaskSpec::regression()), ValidationError);
}

TEST(Dataset, ValidatesInvariants) {
    EXPECT_THROW(Dataset(Matrix::Zero(2, 1), Vector::Zero(3), TaskSpec::regression()), ValidationError);
    EXPECT_THROW(Dataset(Matrix::Zero(1, 1), Vector::Constant(1, 0.5), TaskSpec::classification(2)),
                 ValidationError);
    EXPECT_THROW(Dataset(Matrix::Zero(1, 1), Vector::Zero(1), TaskSpec::classification(1)), ValidationError);
    Matrix inf = Matrix::Zero(1, 1);
    inf(0, 0) = std::numeric_limits<double>::infinity();
    EXPECT_THROW(Dataset(inf, std::nullopt, TaskSpec::regression()), ValidationError);
}

TEST(EmpiricalMeasure, UniformAndRenormalized) {
    const auto m = empirical_measure((Matrix(3, 1) << 0, 1, 2).finished());
    for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(m.weights()(i), 1.0 / 3.0, 1e-15);

    const auto single = empirical_measure(Matrix::Constant(1, 1, 5.0));
    EXPECT_EQ(single.weights()(0), 1.0);

    const auto two = empirical_measure(Matrix::Zero(2, 1), Vector::Constant(2, 2.0));
    EXPECT_EQ(two.weights()(0), 0.5);
    EXPECT_EQ(two.weights()(1), 0.5);
}

TEST(EmpiricalMeasure, RejectsBadWeights) {
    EXPECT_THROW(empirical_measure(Matrix::Zero(2, 1), Vector::Zero(2)), ValidationError);
    EXPECT_THROW(empirical_measure(Matrix::Zero(0, 1)), ValidationError);
    EXPECT_THROW(empirical_measure(Matrix::Zero(2, 1), (Vector(2) << 1, -1).finished()), ValidationError);
    EXPECT_THROW(empirical_measure(Matrix::Zero(2, 1), Vector::Ones(3)), ValidationError);
}

TEST(EmpiricalMeasure, PropertyWeightsSumToOne) {
    testing::Gen gen(3);
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = gen.integer(1, 60);
        Vector w = gen.weights(n, true);
        w *= std::pow(10.0, gen.uniform(-8, 8));
        const auto m = empirical_measure(gen.matrix(n, 2), w);
        EXPECT_NEAR(m.weights().sum(), 1.0, 1e-12);
        EXPECT_GE(m.weights().minCoeff(), 0.0);
    }
}

TEST(EncodeLabels, OneHotAndRaw) {
    const Matrix one_hot = encode_labels((Vector(2) << 0, 2).finished(), LabelEncoding::one_hot(3));
    EXPECT_EQ(one_hot, (Matrix(2, 3) << 1, 0, 0, 0, 0, 1).finished());
    const Matrix raw = encode_labels((Vector(2) << 1.5, -0.2).finished(), LabelEncoding::raw_scalar());
    EXPECT_EQ(raw, (Matrix(2, 1) << 1.5, -0.2).finished());
    EXPECT_THROW(encode_labels(Vector::Constant(1, 3.0), LabelEncoding::one_hot(3)), ValidationError);
    EXPECT_THROW(encode_labels(Vector::Constant(1, 0.5), LabelEncoding::one_hot(3)), ValidationError);
}

TEST(LabelEncoding, ValidatesAgainstTask) {
    EXPECT_THROW(LabelEncoding::one_hot(3).validate_for(TaskSpec::regression()), ValidationError);
    EXPECT_THROW(LabelEncoding::one_hot(1).validate_for(TaskSpec::classification(2)), ValidationError);
    EXPECT_NO_THROW(LabelEncoding::default_for(TaskSpec::classification(4)).validate_for(TaskSpec::classification(4)));
}

Dataset labelled(std::initializer_list<double> labels, int classes) {
    Vector y(static_cast<Eigen::Index>(labels.size()));
    Eigen::Index i = 0;
    for (const double v : labels) y(i++) = v;
    return Dataset(Matrix::Zero(y.size(), 1), y, TaskSpec::classification(classes));
}

TEST(SplitSourceLabels, IndexSplit) {
    const auto ds = labelled({0, 1, 2, 3}, 4);
    const auto split = split_source_labels(ds, 2);
    ASSERT_EQ(split.s1.size(), 2);
    ASSERT_EQ(split.s2.size(), 2);
    EXPECT_EQ(split.s1.points(), encode_labels((Vector(2) << 0, 1).finished(), LabelEncoding::one_hot(4)));
    EXPECT_EQ(split.s2.points(), encode_labels((Vector(2) << 2, 3).finished(), LabelEncoding::one_hot(4)));
    EXPECT_EQ(split.s1.weights(), Vector::Constant(2, 0.5));
}

TEST(SplitSourceLabels, Boundaries) {
    const auto ds = labelled({0, 1}, 2);
    const auto all = split_source_labels(ds, 2);
    EXPECT_TRUE(all.s2.is_empty());
    EXPECT_EQ(all.s2.dim(), 2);
    const auto none = split_source_labels(ds, 0);
    EXPECT_TRUE(none.s1.is_empty());
    EXPECT_EQ(none.s2.size(), 2);
    EXPECT_THROW(split_source_labels(ds, 3), ValidationError);
    const Dataset unlabelled(Matrix::Zero(2, 1), std::nullopt, TaskSpec::classification(2));
    EXPECT_THROW(split_source_labels(unlabelled, 1), ValidationError);
}

TEST(SplitSourceLabels, PropertyPartitionsTheLabelMultiset) {
    testing::Gen gen(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto n = gen.integer(1, 40);
        Vector y(n);
        for (Eigen::Index i = 0; i < n; ++i) y(i) = gen.uniform(-3, 3);
        const Dataset ds(Matrix::Zero(n, 1), y, TaskSpec::regression());
        const auto n_t1 = gen.integer(0, static_cast<int>(n));
        const auto split = split_source_labels(ds, n_t1);
        std::vector<double> joined;
        for (Eigen::Index i = 0; i < split.s1.size(); ++i) joined.push_back(split.s1.points()(i, 0));
        for (Eigen::Index i = 0; i < split.s2.size(); ++i) joined.push_back(split.s2.points()(i, 0));
        std::vector<double> original(y.data(), y.data() + n);
        std::sort(joined.begin(), joined.end());
        std::sort(original.begin(), original.end());
        EXPECT_EQ(joined, original);
    }
}

Dataset hundred_rows() {
    Vector y(100);
    for (Eigen::Index i = 0; i < 100; ++i) y(i) = static_cast<double>(i % 10);
    Matrix x(100, 1);
    for (Eigen::Index i = 0; i < 100; ++i) x(i, 0) = static_cast<double>(i);
    return Dataset(x, y, TaskSpec::classification(10));
}

TEST(SubsampleTask, ClassFilterOnly) {
    const auto sub = subsample_task(hundred_rows(), 2, 1.0, 0);
    EXPECT_EQ(sub.size(), 20);
    EXPECT_EQ(sub.task().class_count, 2);
    EXPECT_LT(sub.labels()->maxCoeff(), 2.0);
}

TEST(SubsampleTask, SeededRatioIsDeterministic) {
    const auto a = subsample_task(hundred_rows(), 10, 0.5, 7);
    const auto b = subsample_task(hundred_rows(), 10, 0.5, 7);
    const auto c = subsample_task(hundred_rows(), 10, 0.5, 8);
    EXPECT_EQ(a.size(), 50);
    EXPECT_EQ(a.features(), b.features());
    EXPECT_NE(a.features(), c.features());
    // Selected rows keep their original order.
    for (Eigen::Index i = 1; i < a.size(); ++i) EXPECT_LT(a.features()(i - 1, 0), a.features()(i, 0));
}

TEST(SubsampleTask, RegressionIgnoresClasses) {
    const Dataset reg(Matrix::Zero(10, 1), Vector::Zero(10), TaskSpec::regression());
    EXPECT_EQ(subsample_task(reg, 3, 0.3, 1).size(), 3);
}

TEST(SubsampleTask, RejectsBadArguments) {
    EXPECT_THROW(subsample_task(hundred_rows(), 11, 1.0, 0), ValidationError);
    EXPECT_THROW(subsample_task(hundred_rows(), std::nullopt, 0.0, 0), ValidationError);
    EXPECT_THROW(subsample_task(hundred_rows(), std::nullopt, 1.5, 0), ValidationError);
}

}  // namespace
}  // namespace wdje
