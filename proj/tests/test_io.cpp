#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "support.hpp"

using namespace mce;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("mce_test_" + name)).string();
}

}  // namespace

TEST(FormatNumber, RoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, 0.0, 1e-5}) EXPECT_EQ(std::stod(format_number(v)), v);
    EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
    EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
    EXPECT_EQ(format_number(std::nan("")), "nan");
    EXPECT_EQ(format_optional(std::nullopt), "");
}

TEST(DatasetCsv, HeaderAndRoundTrip) {
    NoiseModel nm;
    nm.epsilon = 0.1;
    nm.outlier_frac = 0.1;
    const auto ds = gen_fir_dataset(Vector{0.5, -1.0, 0.2}, 50, nm, 3);
    const auto text = dataset_csv(ds);
    EXPECT_EQ(text.substr(0, text.find('\n')), "y,x1,x2,x3");
    std::istringstream in(text);
    const auto back = parse_dataset_csv(in);
    EXPECT_EQ(back.x, ds.x);
    EXPECT_EQ(back.y, ds.y);
}

TEST(DatasetCsv, RejectsMalformedInput) {
    std::istringstream bad_header("a,b\n1,2\n");
    EXPECT_THROW(parse_dataset_csv(bad_header), IoError);
    std::istringstream short_row("y,x1,x2\n1,2\n");
    EXPECT_THROW(parse_dataset_csv(short_row), IoError);
    std::istringstream not_number("y,x1\n1,abc\n");
    EXPECT_THROW(parse_dataset_csv(not_number), IoError);
    std::istringstream empty_body("y,x1\n");
    EXPECT_THROW(parse_dataset_csv(empty_body), EmptyDataset);
    std::istringstream crlf("y,x1\r\n1,2\r\n");
    EXPECT_EQ(parse_dataset_csv(crlf).y, Vector{1.0});
}

TEST(DatasetFiles, SidecarRoundTrip) {
    NoiseModel nm;
    nm.epsilon = 0.05;
    nm.outlier_frac = 0.2;
    nm.symmetric_outliers = true;
    const auto ds = gen_fir_dataset(Vector{1.0, 2.0}, 40, nm, 9);
    const auto path = temp_path("roundtrip.csv");
    write_dataset(path, ds);
    const auto back = read_dataset(path);
    EXPECT_EQ(back.x, ds.x);
    EXPECT_EQ(back.y, ds.y);
    EXPECT_EQ(back.theta_true, ds.theta_true);
    EXPECT_EQ(back.v, ds.v);
    EXPECT_EQ(back.outlier_mask, ds.outlier_mask);
    EXPECT_EQ(back.seed, ds.seed);
    ASSERT_TRUE(back.noise.has_value());
    EXPECT_EQ(back.noise->epsilon, 0.05);
    EXPECT_TRUE(back.noise->symmetric_outliers);
    std::remove(path.c_str());
    std::remove(sidecar_path(path).c_str());
}

TEST(DatasetFiles, SidecarIsOptionalAndChecked) {
    const auto path = temp_path("plain.csv");
    write_text_file(path, "y,x1\n1,1\n2,1\n");
    const auto ds = read_dataset(path);
    EXPECT_FALSE(ds.theta_true.has_value());
    write_text_file(sidecar_path(path), "{\"theta_true\": [1, 2]}");
    EXPECT_THROW(read_dataset(path), DimensionError);
    write_text_file(sidecar_path(path), "{not json");
    EXPECT_THROW(read_dataset(path), IoError);
    std::remove(path.c_str());
    std::remove(sidecar_path(path).c_str());
    EXPECT_THROW(read_dataset(temp_path("missing.csv")), IoError);
}
