#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "l2h/dataset.hpp"
#include "l2h/labels.hpp"
#include "l2h/npy.hpp"
#include "support/test_util.hpp"

using namespace l2h;
using l2h::testing::TempDir;
using l2h::testing::write_text;

namespace {

// Hand-assembled NPY v1.0 file, independent of write_npy.
std::string npy_bytes(const std::string& dict, const void* payload, std::size_t bytes) {
    std::string header = dict;
    const std::size_t unpadded = 10 + header.size() + 1;
    header.append((64 - unpadded % 64) % 64, ' ');
    header.push_back('\n');
    std::string out = "\x93NUMPY";
    out.push_back('\x01');
    out.push_back('\x00');
    out.push_back(static_cast<char>(header.size() & 0xff));
    out.push_back(static_cast<char>(header.size() >> 8));
    out += header;
    out.append(static_cast<const char*>(payload), bytes);
    return out;
}

const float six_floats[] = {1, 2, 3, 4, 5, 6};

} // namespace

TEST(Npy, ReadsVersion1Float32) {
    TempDir dir;
    const auto path = dir.file("a.npy");
    write_text(path, npy_bytes("{'descr': '<f4', 'fortran_order': False, 'shape': (3, 2), }", six_floats, 24));
    const auto m = read_npy(path);
    ASSERT_EQ(m.rows(), 3u);
    ASSERT_EQ(m.cols(), 2u);
    EXPECT_EQ(m.precision(), Precision::single);
    EXPECT_EQ(m.at(0, 0), 1.0);
    EXPECT_EQ(m.at(1, 1), 4.0);
    EXPECT_EQ(m.at(2, 0), 5.0);
    EXPECT_FALSE(m.is_mapped());
}

TEST(Npy, RejectsBigEndian) {
    TempDir dir;
    const auto path = dir.file("a.npy");
    write_text(path, npy_bytes("{'descr': '>f4', 'fortran_order': False, 'shape': (3, 2), }", six_floats, 24));
    EXPECT_THROW(read_npy(path), FormatError);
}

TEST(Npy, RejectsWrongRank) {
    TempDir dir;
    const auto path = dir.file("a.npy");
    write_text(path, npy_bytes("{'descr': '<f4', 'fortran_order': False, 'shape': (6,), }", six_floats, 24));
    EXPECT_THROW(read_npy(path), FormatError);
}

TEST(Npy, RejectsFortranOrderNamingTheFlag) {
    TempDir dir;
    const auto path = dir.file("a.npy");
    write_text(path, npy_bytes("{'descr': '<f4', 'fortran_order': True, 'shape': (3, 2), }", six_floats, 24));
    try {
        read_npy(path);
        FAIL() << "expected FormatError";
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("fortran_order"), std::string::npos);
    }
}

TEST(Npy, RejectsBadMagicAndTruncation) {
    TempDir dir;
    const auto bad = dir.file("bad.npy");
    write_text(bad, "\x93NUMPZ garbage");
    EXPECT_THROW(read_npy(bad), FormatError);

    const auto trunc = dir.file("trunc.npy");
    write_text(trunc, npy_bytes("{'descr': '<f4', 'fortran_order': False, 'shape': (3, 2), }", six_floats, 20));
    EXPECT_THROW(read_npy(trunc), FormatError);
}

TEST(Npy, MissingFileIsIoError) { EXPECT_THROW(read_npy("/nonexistent/x.npy"), IoError); }

TEST(Npy, WriteReadRoundTripIsBitExact) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0, 10);
    TempDir dir;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t r = 1 + rng() % 40, c = 1 + rng() % 9;
        std::vector<double> d(r * c);
        for (auto& v : d) v = g(rng);
        std::vector<float> f(d.begin(), d.end());
        const RealMatrix md(r, c, d), mf(r, c, f);
        const auto pd = dir.file("d.npy"), pf = dir.file("f.npy");
        write_npy(pd, md);
        write_npy(pf, mf);
        EXPECT_TRUE(read_npy(pd).bit_equal(md));
        EXPECT_TRUE(read_npy(pf).bit_equal(mf));
        EXPECT_EQ(read_npy_header(pd).data_offset % 64, 0u);
    }
}

TEST(Npy, MemoryMapsAtThreshold) {
    TempDir dir;
    const auto path = dir.file("m.npy");
    write_npy(path, RealMatrix(3, 2, std::vector<float>(six_floats, six_floats + 6)));
    const auto m = read_npy(path, NpyReadOptions{.mmap_threshold_bytes = 24});
    EXPECT_TRUE(m.is_mapped());
    EXPECT_EQ(m.at(2, 1), 6.0);
    const auto copy = read_npy(path, NpyReadOptions{.mmap_threshold_bytes = 25});
    EXPECT_FALSE(copy.is_mapped());
    EXPECT_TRUE(copy.bit_equal(m));
}

TEST(Npy, IntegerLabelsBothWidths) {
    TempDir dir;
    const std::vector<std::int32_t> a{5, 2, 5};
    const std::vector<std::int64_t> b{9, 9, 1};
    write_npy(dir.file("a.npy"), std::span<const std::int32_t>(a));
    write_npy(dir.file("b.npy"), std::span<const std::int64_t>(b));
    EXPECT_EQ(read_npy_integers(dir.file("a.npy")), (std::vector<std::int64_t>{5, 2, 5}));
    EXPECT_EQ(read_npy_integers(dir.file("b.npy")), b);
    EXPECT_THROW(read_npy_integers(dir.file("nope.npy")), IoError);
    write_npy(dir.file("f.npy"), RealMatrix(3, 2, std::vector<float>(six_floats, six_floats + 6)));
    EXPECT_THROW(read_npy_integers(dir.file("f.npy")), FormatError);
}

TEST(Csv, ParsesWithoutHeader) {
    TempDir dir;
    write_text(dir.file("a.csv"), "1.0,2.0\n3.0,4.0");
    const auto m = read_csv_matrix(dir.file("a.csv"));
    ASSERT_EQ(m.rows(), 2u);
    ASSERT_EQ(m.cols(), 2u);
    EXPECT_EQ(m.at(0, 0), 1.0);
    EXPECT_EQ(m.at(0, 1), 2.0);
    EXPECT_EQ(m.at(1, 0), 3.0);
    EXPECT_EQ(m.at(1, 1), 4.0);
}

TEST(Csv, SkipsHeader) {
    TempDir dir;
    write_text(dir.file("a.csv"), "a,b\n1,2\n");
    const auto m = read_csv_matrix(dir.file("a.csv"), true);
    ASSERT_EQ(m.rows(), 1u);
    EXPECT_EQ(m.at(0, 1), 2.0);
}

TEST(Csv, Errors) {
    TempDir dir;
    write_text(dir.file("ragged.csv"), "1,2\n3");
    EXPECT_THROW(read_csv_matrix(dir.file("ragged.csv")), FormatError);
    write_text(dir.file("text.csv"), "1,x\n3,4");
    EXPECT_THROW(read_csv_matrix(dir.file("text.csv")), FormatError);
    write_text(dir.file("empty.csv"), "");
    EXPECT_THROW(read_csv_matrix(dir.file("empty.csv")), FormatError);
}

TEST(Csv, CrlfAndSpaces) {
    TempDir dir;
    write_text(dir.file("a.csv"), " 1 , -2.5e1\r\n3,4\r\n\r\n");
    const auto m = read_csv_matrix(dir.file("a.csv"));
    ASSERT_EQ(m.rows(), 2u);
    EXPECT_EQ(m.at(0, 1), -25.0);
}

TEST(Labels, StringsByFirstAppearance) {
    TempDir dir;
    write_text(dir.file("l.txt"), "cat\ndog\ncat\n");
    const auto l = read_labels(dir.file("l.txt"));
    EXPECT_EQ(l.labels, (std::vector<ClassId>{0, 1, 0}));
    EXPECT_EQ(l.n_classes, 2u);
    EXPECT_EQ(l.name(0), "cat");
    EXPECT_EQ(l.name(1), "dog");
}

TEST(Labels, IntegersByNumericOrder) {
    TempDir dir;
    write_text(dir.file("l.txt"), "5\n2\n5");
    const auto l = read_labels(dir.file("l.txt"));
    EXPECT_EQ(l.labels, (std::vector<ClassId>{1, 0, 1}));
    EXPECT_EQ(l.name(0), "2");
    EXPECT_EQ(l.name(1), "5");
}

TEST(Labels, EmptyFileErrors) {
    TempDir dir;
    write_text(dir.file("l.txt"), "");
    EXPECT_THROW(read_labels(dir.file("l.txt")), FormatError);
}

TEST(Labels, NpyAndTextAgree) {
    TempDir dir;
    const std::vector<std::int64_t> raw{3, 1, 3, 7};
    write_npy(dir.file("l.npy"), std::span<const std::int64_t>(raw));
    write_text(dir.file("l.txt"), "3\n1\n3\n7\n");
    EXPECT_EQ(read_labels(dir.file("l.npy")), read_labels(dir.file("l.txt")));
}

TEST(Dataset, AcceptsConsistentBundle) {
    const RealMatrix logits(4, 3, std::vector<double>(12, 0.5));
    LabelVector labels = LabelVector::from_integers(std::vector<std::int64_t>{0, 1, 1, 0});
    const auto b = validate_dataset(logits, labels);
    EXPECT_EQ(b.logits.rows(), 4u);
    ASSERT_TRUE(b.labels.has_value());
}

TEST(Dataset, NanReportsPosition) {
    std::vector<double> v(12, 0.0);
    v[1 * 3 + 2] = std::numeric_limits<double>::quiet_NaN();
    try {
        validate_dataset(RealMatrix(4, 3, v));
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("(1, 2)"), std::string::npos) << e.what();
    }
    v[1 * 3 + 2] = std::numeric_limits<double>::infinity();
    EXPECT_THROW(validate_dataset(RealMatrix(4, 3, v)), ValidationError);
}

TEST(Dataset, LengthMismatchReportsBoth) {
    LabelVector labels = LabelVector::from_integers(std::vector<std::int64_t>{0, 1, 1});
    try {
        validate_dataset(RealMatrix(4, 3, std::vector<double>(12, 0.0)), labels);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("3 vs 4"), std::string::npos) << e.what();
    }
}

TEST(Dataset, DegenerateShapes) {
    EXPECT_THROW(validate_dataset(RealMatrix(3, 1, std::vector<double>(3, 0.0))), DegenerateError);
    EXPECT_THROW(validate_dataset(RealMatrix(0, 3, std::vector<double>{})), DegenerateError);
}

TEST(Dataset, ReadMatrixDispatchesOnExtension) {
    TempDir dir;
    write_text(dir.file("a.csv"), "1,2\n3,4\n");
    write_npy(dir.file("a.npy"), RealMatrix(2, 2, std::vector<double>{1, 2, 3, 4}));
    EXPECT_TRUE(read_matrix(dir.file("a.csv")).bit_equal(read_matrix(dir.file("a.npy"))));
}
