// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "fdnet/cli.hpp"
#include "fdnet/image.hpp"
#include "fdnet/tensor_io.hpp"
#include "fdnet/weights.hpp"

namespace fdnet {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

class CliFiles : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("fdnet_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

TEST(CliFlops, ReportsTotals) {
  const Result r = cli({"flops", "fd-mobilenet", "--alpha", "1.0"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("total MFLOPs: 144.5"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("largest-4-resolution MFLOPs: 58.7"), std::string::npos);

  const Result csv = cli({"flops", "mobilenet", "--alpha", "0.5", "--format", "csv"});
  ASSERT_EQ(csv.code, 0) << csv.err;
  EXPECT_EQ(lines_of(csv.out).front(), "layer_index,kind,out_h,out_w,c_out,macs,params");
}

TEST(CliBench, PrintsTableAndCsv) {
  const Result r = cli({"bench", "fd-mobilenet", "--alpha", "0.25", "--warmup", "0", "--runs", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("MFLOPs"), std::string::npos);
  EXPECT_NE(r.out.find("environment:"), std::string::npos);
  const Result csv =
      cli({"bench", "fd-mobilenet", "--alpha", "0.25", "--warmup", "0", "--runs", "1", "--format", "csv"});
  ASSERT_EQ(csv.code, 0) << csv.err;
  EXPECT_EQ(lines_of(csv.out).size(), 2u);
}

TEST_F(CliFiles, GenWeightsIsByteIdenticalForTheSameSeed) {
  ASSERT_EQ(cli({"gen-weights", "fd-mobilenet", "--alpha", "0.25", "--seed", "3", "--out", path("a.fdw")}).code, 0);
  ASSERT_EQ(cli({"gen-weights", "fd-mobilenet", "--alpha", "0.25", "--seed", "3", "--out", path("b.fdw")}).code, 0);
  ASSERT_EQ(cli({"gen-weights", "fd-mobilenet", "--alpha", "0.25", "--seed", "4", "--out", path("c.fdw")}).code, 0);
  EXPECT_EQ(read_file_bytes(path("a.fdw")), read_file_bytes(path("b.fdw")));
  EXPECT_NE(read_file_bytes(path("a.fdw")), read_file_bytes(path("c.fdw")));
  EXPECT_NO_THROW(check_store(build_fd_mobilenet(0.25), read_weights_file(path("a.fdw"))));
}

TEST_F(CliFiles, ExportArchReimportsAndValidates) {
  const Result r = cli({"export-arch", "mobilenet", "--alpha", "0.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto spec = import_json(r.out);
  EXPECT_TRUE(validate(spec).ok());
  EXPECT_EQ(spec, build_mobilenet(0.5));
  ASSERT_EQ(cli({"export-arch", "mobilenet", "--alpha", "0.5", "--out", path("m.json")}).code, 0);
  std::ifstream in(path("m.json"));
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(in), {}), r.out);
}

TEST_F(CliFiles, RunWithZeroWeightsGivesUniformTopK) {
  const auto spec = build_fd_mobilenet(0.25);
  WeightStore store = init_random_weights(spec, 1);
  for (const WeightEntry& e : store.entries())
    if (e.kind != LayerKind::batch_norm) {
      auto& data = store.find(e.layer)->data;
      std::fill(data.begin(), data.end(), 0.0f);
    }
  write_weights_file(path("zero.fdw"), store);
  write_file_bytes(path("img.ppm"), encode_ppm(Tensorf(Shape{1, 3, 300, 400}, 128.0f)));

  const Result r = cli({"run", "fd-mobilenet", "--alpha", "0.25", "--weights", path("zero.fdw"),
                        "--image", path("img.ppm"), "--topk", "1000", "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = lines_of(r.out);
  ASSERT_EQ(lines.size(), 1001u);
  EXPECT_EQ(lines[0], "rank,class,probability");
  double sum = 0.0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::istringstream row(lines[i]);
    std::string rank, cls, p;
    std::getline(row, rank, ',');
    std::getline(row, cls, ',');
    std::getline(row, p, ',');
    EXPECT_EQ(std::stoul(cls), i - 1);  // equal probabilities keep class order
    sum += std::stod(p);
  }
  EXPECT_NEAR(sum, 1.0, 1e-4);
}

TEST_F(CliFiles, RunIsRepeatableAndAcceptsTensorsAndArchFiles) {
  ASSERT_EQ(cli({"gen-weights", "mobilenet", "--alpha", "0.125", "--seed", "9", "--out", path("w.fdw")}).code, 0);
  ASSERT_EQ(cli({"export-arch", "mobilenet", "--alpha", "0.125", "--out", path("a.json")}).code, 0);
  Tensorf input(Shape{1, 3, 224, 224});
  for (Index i = 0; i < input.size(); ++i) input[i] = float(i % 97) / 97.0f;
  write_tensor_file(path("x.fdt"), input);

  const std::vector<std::string> by_name{"run", "mobilenet", "--alpha", "0.125", "--weights",
                                         path("w.fdw"), "--image", path("x.fdt")};
  const Result first = cli(by_name);
  ASSERT_EQ(first.code, 0) << first.err;
  EXPECT_EQ(lines_of(first.out).size(), 5u);
  EXPECT_EQ(cli(by_name).out, first.out);
  const Result by_arch = cli({"run", "--arch", path("a.json"), "--weights", path("w.fdw"), "--image",
                              path("x.fdt"), "--threads", "2"});
  ASSERT_EQ(by_arch.code, 0) << by_arch.err;
  EXPECT_EQ(by_arch.out, first.out);
}

TEST_F(CliFiles, ErrorsExitNonZero) {
  EXPECT_NE(cli({}).code, 0);
  EXPECT_NE(cli({"flops", "resnet"}).code, 0);
  EXPECT_NE(cli({"flops", "fd-mobilenet", "--alpha", "-1"}).code, 0);
  EXPECT_NE(cli({"flops", "fd-mobilenet", "--format", "xml"}).code, 0);
  EXPECT_NE(cli({"run", "fd-mobilenet", "--image", path("none.ppm")}).code, 0);

  ASSERT_EQ(cli({"gen-weights", "fd-mobilenet", "--alpha", "0.5", "--out", path("half.fdw")}).code, 0);
  write_file_bytes(path("img.ppm"), encode_ppm(Tensorf(Shape{1, 3, 8, 8}, 1.0f)));
  const Result mismatch = cli({"run", "fd-mobilenet", "--alpha", "0.25", "--weights", path("half.fdw"),
                               "--image", path("img.ppm")});
  EXPECT_EQ(mismatch.code, 1);
  EXPECT_EQ(mismatch.err.rfind("error: ", 0), 0u) << mismatch.err;

  const Result missing = cli({"run", "fd-mobilenet", "--weights", path("nope.fdw"), "--image", path("img.ppm")});
  EXPECT_EQ(missing.code, 1);
}

}  // namespace
}  // namespace fdnet
