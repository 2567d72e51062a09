#include "pixgbp/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "pixgbp/error.hpp"

namespace pixgbp {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.string().c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

GrayImage read_png(const std::filesystem::path& path) {
  FilePtr file = open_file(path, "rb");
  png_byte header[8];
  if (std::fread(header, 1, 8, file.get()) != 8 || png_sig_cmp(header, 0, 8) != 0) {
    throw IoError(path.string() + " is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialisation failed");
  }
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("failed to decode " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA || color == PNG_COLOR_TYPE_PALETTE) {
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  }
  if (png_get_bit_depth(png, info) == 16) png_set_swap(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int depth = png_get_bit_depth(png, info);
  const size_t stride = png_get_rowbytes(png, info);
  buffer.resize(stride * static_cast<size_t>(height));
  rows.resize(static_cast<size_t>(height));
  for (int y = 0; y < height; ++y) rows[static_cast<size_t>(y)] = buffer.data() + stride * static_cast<size_t>(y);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  GrayImage img(height, width);
  for (int y = 0; y < height; ++y) {
    const png_byte* row = rows[static_cast<size_t>(y)];
    for (int x = 0; x < width; ++x) {
      if (depth == 16) {
        const auto v = static_cast<uint16_t>(row[2 * x] | (row[2 * x + 1] << 8));
        img.at(x, y) = v / 65535.0;
      } else {
        img.at(x, y) = row[x] / 255.0;
      }
    }
  }
  return img;
}

GrayImage read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic;
  int width = 0, height = 0;
  double scale = 0.0;
  in >> magic >> width >> height >> scale;
  in.get();
  if (magic != "Pf" || width <= 0 || height <= 0 || scale == 0.0) {
    throw IoError(path.string() + " is not a grayscale PFM file");
  }
  if (scale > 0.0) throw IoError("big-endian PFM is not supported: " + path.string());
  std::vector<float> row(static_cast<size_t>(width));
  GrayImage img(height, width);
  for (int y = height - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!in) throw IoError("truncated PFM file " + path.string());
    for (int x = 0; x < width; ++x) img.at(x, y) = row[static_cast<size_t>(x)];
  }
  return img;
}

}  // namespace

GrayImage read_image(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".pfm") return read_pfm(path);
  return read_png(path);
}

void write_png(const GrayImage& img, const std::filesystem::path& path, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw IoError("PNG bit depth must be 8 or 16");
  FilePtr file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialisation failed");
  }
  const int width = img.width();
  const int bytes = bit_depth / 8;
  std::vector<png_byte> row(static_cast<size_t>(width * bytes));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed to encode " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(img.height()), bit_depth,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const double top = bit_depth == 16 ? 65535.0 : 255.0;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < width; ++x) {
      const auto v = static_cast<unsigned>(std::lround(std::clamp(img.at(x, y), 0.0, 1.0) * top));
      if (bit_depth == 16) {
        row[static_cast<size_t>(2 * x)] = static_cast<png_byte>(v >> 8);
        row[static_cast<size_t>(2 * x + 1)] = static_cast<png_byte>(v & 0xff);
      } else {
        row[static_cast<size_t>(x)] = static_cast<png_byte>(v);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_pfm(const GrayImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string());
  out << "Pf\n" << img.width() << ' ' << img.height() << "\n-1.0\n";
  std::vector<float> row(static_cast<size_t>(img.width()));
  for (int y = img.height() - 1; y >= 0; --y) {
    for (int x = 0; x < img.width(); ++x) row[static_cast<size_t>(x)] = static_cast<float>(img.at(x, y));
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace pixgbp
