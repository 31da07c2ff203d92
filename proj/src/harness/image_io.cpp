// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include "ddt/harness/data.hpp"

namespace ddt::harness {
namespace {

// Reads the next header integer, skipping whitespace and '#' comments.
long read_header_int(const std::string& buf, std::size_t& pos, const std::string& path) {
  while (pos < buf.size()) {
    const char ch = buf[pos];
    if (ch == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(ch))) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < buf.size() && std::isdigit(static_cast<unsigned char>(buf[pos]))) ++pos;
  if (start == pos || pos - start > 9) throw std::runtime_error("read_pnm: malformed header in '" + path + "'");
  return std::stol(buf.substr(start, pos - start));
}

}  // namespace

Tensor<float> read_pnm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_pnm: cannot open '" + path + "'");
  const std::string buf(std::istreambuf_iterator<char>(f), {});
  if (buf.size() < 2 || buf[0] != 'P' || (buf[1] != '5' && buf[1] != '6')) {
    throw std::runtime_error("read_pnm: '" + path + "' is not a binary P5/P6 file");
  }
  const std::int64_t channels = buf[1] == '6' ? 3 : 1;
  std::size_t pos = 2;
  const long w = read_header_int(buf, pos, path);
  const long h = read_header_int(buf, pos, path);
  const long maxval = read_header_int(buf, pos, path);
  if (w < 1 || h < 1 || maxval < 1 || maxval > 65535) throw std::runtime_error("read_pnm: bad header in '" + path + "'");
  ++pos;  // single whitespace byte before the raster
  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  const std::size_t count = static_cast<std::size_t>(w) * h * channels;
  if (buf.size() < pos + count * bytes_per) throw std::runtime_error("read_pnm: '" + path + "' is truncated");
  Tensor<float> img(Shape{channels, h, w});
  const auto* raw = reinterpret_cast<const unsigned char*>(buf.data() + pos);
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned v = bytes_per == 2 ? (raw[2 * i] << 8 | raw[2 * i + 1]) : raw[i];
    // Interleaved raster to planar tensor.
    const std::size_t pix = i / channels, ch = i % channels;
    img[ch * static_cast<std::size_t>(w * h) + pix] = static_cast<float>(v) / static_cast<float>(maxval);
  }
  return img;
}

void write_pnm(const std::string& path, const Tensor<float>& img, int maxval) {
  if (img.rank() != 3 || (img.dim(0) != 1 && img.dim(0) != 3)) {
    throw std::invalid_argument("write_pnm: expected [1 or 3, H, W], got " + shape_str(img.shape()));
  }
  if (maxval < 1 || maxval > 65535) throw std::invalid_argument("write_pnm: maxval out of range");
  const std::int64_t c = img.dim(0), h = img.dim(1), w = img.dim(2);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_pnm: cannot open '" + path + "'");
  f << (c == 3 ? "P6" : "P5") << '\n' << w << ' ' << h << '\n' << maxval << '\n';
  std::string raster;
  raster.reserve(static_cast<std::size_t>(h * w * c * (maxval > 255 ? 2 : 1)));
  for (std::int64_t pix = 0; pix < h * w; ++pix) {
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const double v = std::clamp(static_cast<double>(img[ch * h * w + pix]), 0.0, 1.0);
      const auto q = static_cast<unsigned>(std::lround(v * maxval));
      if (maxval > 255) raster.push_back(static_cast<char>(q >> 8));
      raster.push_back(static_cast<char>(q & 0xff));
    }
  }
  f.write(raster.data(), static_cast<std::streamsize>(raster.size()));
  if (!f) throw std::runtime_error("write_pnm: write failed for '" + path + "'");
}

std::vector<std::string> list_images(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw std::runtime_error("'" + dir + "' is not a directory");
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".ppm" || ext == ".pgm" || ext == ".pnm")) out.push_back(e.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace ddt::harness
