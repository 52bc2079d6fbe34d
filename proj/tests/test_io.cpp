#include "sop/io.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace sop {
namespace {

namespace fs = std::filesystem;

fs::path temp(const std::string& name) { return fs::temp_directory_path() / name; }

TEST(Io, MatrixRoundTrip) {
  const RowMat a = testing::random_matrix(5, 3, 1);
  const auto p = temp("sop_io_matrix.sopm");
  write_matrix(p, a);
  EXPECT_EQ(fs::file_size(p), 4u + 8u + 15u * 8u);
  EXPECT_EQ(read_matrix(p), a);
  std::ifstream in(p, std::ios::binary);
  char magic[4];
  in.read(magic, 4);
  EXPECT_EQ(std::string(magic, 4), "SOPM");
  fs::remove(p);
}

TEST(Io, MatrixRejectsBadMagicAndTruncation) {
  const auto p = temp("sop_io_bad.sopm");
  {
    std::ofstream out(p, std::ios::binary);
    out << "XXXX";
  }
  EXPECT_THROW(read_matrix(p), IoError);
  write_matrix(p, RowMat::Ones(4, 4));
  fs::resize_file(p, fs::file_size(p) - 8);
  EXPECT_THROW(read_matrix(p), IoError);
  fs::remove(p);
  EXPECT_THROW(read_matrix(p), IoError);
}

TEST(Io, TensorRoundTrip) {
  ImageTensor t{{3, 4, 2}, testing::random_vector(24, 2, 0.0, 1.0)};
  const auto p = temp("sop_io_tensor.sopt");
  write_tensor(p, t);
  const ImageTensor back = read_tensor(p);
  EXPECT_EQ(back.shape.height, 3);
  EXPECT_EQ(back.shape.width, 4);
  EXPECT_EQ(back.shape.channels, 2);
  EXPECT_EQ(back.data, t.data);
  fs::remove(p);
}

TEST(Io, ImageRoundTripQuantizes) {
  for (Index c : {1, 3}) {
    ImageTensor img{{4, 5, c}, testing::random_vector(20 * c, 3, 0.0, 1.0)};
    const auto p = temp(c == 1 ? "sop_io.pgm" : "sop_io.ppm");
    write_image(p, img);
    const ImageTensor back = read_image(p);
    EXPECT_EQ(back.shape.channels, c);
    EXPECT_LE((back.data - img.data).lpNorm<Eigen::Infinity>(), 0.5 / 255.0 + 1e-12);
    fs::remove(p);
  }
}

}  // namespace
}  // namespace sop
