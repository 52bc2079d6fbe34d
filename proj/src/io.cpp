#include "sop/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cctype>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

namespace sop {

namespace {

static_assert(std::endian::native == std::endian::little, "binary formats assume little-endian");

void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t read_u32(std::istream& in, const std::filesystem::path& path) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 4)) throw IoError("truncated header in " + path.string());
  return v;
}

std::uint32_t checked_u32(Index n) {
  if (n < 0 || n > Index(std::numeric_limits<std::uint32_t>::max()))
    throw IoError("dimension does not fit in u32");
  return static_cast<std::uint32_t>(n);
}

void expect_magic(std::istream& in, const char* magic, const std::filesystem::path& path) {
  std::array<char, 4> buf{};
  if (!in.read(buf.data(), 4) || std::memcmp(buf.data(), magic, 4) != 0)
    throw IoError(path.string() + ": expected magic " + std::string(magic, 4));
}

void read_payload(std::istream& in, double* dst, Index count, const std::filesystem::path& path) {
  const auto bytes = static_cast<std::streamsize>(count * Index(sizeof(double)));
  if (!in.read(reinterpret_cast<char*>(dst), bytes)) throw IoError("truncated payload in " + path.string());
}

// Reads the next whitespace-separated PNM header token, skipping comments.
std::string pnm_token(std::istream& in) {
  std::string tok;
  int c = 0;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

}  // namespace

void write_matrix(const std::filesystem::path& path, const RowMat& a) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write("SOPM", 4);
  write_u32(out, checked_u32(a.rows()));
  write_u32(out, checked_u32(a.cols()));
  out.write(reinterpret_cast<const char*>(a.data()),
            static_cast<std::streamsize>(a.size() * Index(sizeof(double))));
  if (!out) throw IoError("write failed for " + path.string());
}

RowMat read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  expect_magic(in, "SOPM", path);
  const Index rows = read_u32(in, path);
  const Index cols = read_u32(in, path);
  RowMat a(rows, cols);
  read_payload(in, a.data(), a.size(), path);
  return a;
}

void write_tensor(const std::filesystem::path& path, const ImageTensor& t) {
  require_size(t.data.size(), t.shape.size(), "write_tensor");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write("SOPT", 4);
  write_u32(out, checked_u32(t.shape.height));
  write_u32(out, checked_u32(t.shape.width));
  write_u32(out, checked_u32(t.shape.channels));
  out.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * Index(sizeof(double))));
  if (!out) throw IoError("write failed for " + path.string());
}

ImageTensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  expect_magic(in, "SOPT", path);
  ImageTensor t;
  t.shape.height = read_u32(in, path);
  t.shape.width = read_u32(in, path);
  t.shape.channels = read_u32(in, path);
  t.data.resize(t.shape.size());
  read_payload(in, t.data.data(), t.data.size(), path);
  if ((t.data.array() < 0.0).any() || (t.data.array() > 1.0).any())
    throw IoError(path.string() + ": tensor values must lie in [0, 1]");
  return t;
}

ImageTensor read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string magic = pnm_token(in);
  Index channels = 0;
  if (magic == "P5") channels = 1;
  else if (magic == "P6") channels = 3;
  else throw IoError(path.string() + ": only binary PGM (P5) and PPM (P6) are supported");
  Index width = 0, height = 0;
  int maxval = 0;
  try {
    width = std::stol(pnm_token(in));
    height = std::stol(pnm_token(in));
    maxval = std::stoi(pnm_token(in));
  } catch (const std::exception&) {
    throw IoError(path.string() + ": malformed header");
  }
  if (width < 1 || height < 1 || maxval < 1 || maxval > 255)
    throw IoError(path.string() + ": unsupported dimensions or bit depth");
  std::vector<unsigned char> raw(static_cast<std::size_t>(width * height * channels));
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
    throw IoError("truncated pixel data in " + path.string());
  ImageTensor img;
  img.shape = {height, width, channels};
  img.data.resize(img.shape.size());
  for (Index i = 0; i < height; ++i)
    for (Index j = 0; j < width; ++j)
      for (Index c = 0; c < channels; ++c)
        img.at(c, i, j) = double(raw[static_cast<std::size_t>((i * width + j) * channels + c)]) / maxval;
  return img;
}

void write_image(const std::filesystem::path& path, const ImageTensor& img) {
  const Index ch = img.shape.channels;
  if (ch != 1 && ch != 3) throw IoError("images must have one or three channels");
  require_size(img.data.size(), img.shape.size(), "write_image");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << (ch == 1 ? "P5" : "P6") << '\n' << img.shape.width << ' ' << img.shape.height << "\n255\n";
  std::vector<unsigned char> raw(static_cast<std::size_t>(img.shape.size()));
  for (Index i = 0; i < img.shape.height; ++i)
    for (Index j = 0; j < img.shape.width; ++j)
      for (Index c = 0; c < ch; ++c) {
        const double v = std::clamp(img.at(c, i, j), 0.0, 1.0);
        raw[static_cast<std::size_t>((i * img.shape.width + j) * ch + c)] =
            static_cast<unsigned char>(std::lround(v * 255.0));
      }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace sop
