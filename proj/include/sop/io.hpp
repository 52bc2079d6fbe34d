#pragma once

#include "sop/kernels.hpp"
#include "sop/types.hpp"

#include <filesystem>

namespace sop {

// Channel-major image: value(c, i, j) lives at c*H*W + i*W + j, the same
// layout the gradient operator expects.
struct ImageTensor {
  ImageShape shape;
  Vec data;

  double& at(Index c, Index i, Index j) { return data[c * shape.pixels() + i * shape.width + j]; }
  double at(Index c, Index i, Index j) const {
    return data[c * shape.pixels() + i * shape.width + j];
  }
};

// "SOPM", u32 rows, u32 cols, little-endian f64 row-major payload.
void write_matrix(const std::filesystem::path& path, const RowMat& a);
RowMat read_matrix(const std::filesystem::path& path);

// "SOPT", u32 rows (height), u32 cols (width), u32 channels, f64 payload in
// channel-major order.
void write_tensor(const std::filesystem::path& path, const ImageTensor& t);
ImageTensor read_tensor(const std::filesystem::path& path);

// Binary PGM (P5, one channel) or PPM (P6, three channels), 8-bit, values
// mapped to [0, 1].
ImageTensor read_image(const std::filesystem::path& path);
// Writes P5 for one channel and P6 for three; values are clamped to [0, 1].
void write_image(const std::filesystem::path& path, const ImageTensor& img);

}  // namespace sop
