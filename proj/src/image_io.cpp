#include "signscan/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

#include "signscan/errors.hpp"

namespace signscan {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

RgbImage read_png_file(std::FILE* fp, const std::string& path) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng init failed: " + path);
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng init failed: " + path);
  }
  std::vector<png_bytep> row_ptrs;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("undecodable PNG: " + path);
  }
  png_init_io(png, fp);
  png_read_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);

  // Normalize everything to 8-bit RGB.
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  RgbImage img(static_cast<int>(w), static_cast<int>(h));
  row_ptrs.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) row_ptrs[y] = img.data().data() + 3 * static_cast<std::size_t>(y) * w;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

RgbImage read_ppm_file(std::FILE* fp, const std::string& path) {
  auto fail = [&]() -> RgbImage { throw IoError("undecodable PPM: " + path); };
  auto next_token = [&]() -> long {
    // skips whitespace and '#' comments
    int c = std::fgetc(fp);
    while (c == '#' || std::isspace(c)) {
      if (c == '#') {
        while (c != '\n' && c != EOF) c = std::fgetc(fp);
      }
      c = std::fgetc(fp);
    }
    long v = 0;
    bool any = false;
    while (std::isdigit(c)) {
      v = v * 10 + (c - '0');
      any = true;
      c = std::fgetc(fp);
    }
    if (!any) return -1;
    return v;
  };

  char magic[2];
  if (std::fread(magic, 1, 2, fp) != 2 || magic[0] != 'P' || magic[1] != '6') return fail();
  const long w = next_token();
  const long h = next_token();
  const long maxval = next_token();
  if (w < 1 || h < 1 || maxval < 1 || maxval > 255) return fail();

  RgbImage img(static_cast<int>(w), static_cast<int>(h));
  const std::size_t n = img.data().size();
  if (std::fread(img.data().data(), 1, n, fp) != n) return fail();
  if (maxval != 255) {
    for (auto& v : img.data()) v = static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
  }
  return img;
}

}  // namespace

RgbImage read_image(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open: " + path);
  unsigned char magic[2] = {0, 0};
  if (std::fread(magic, 1, 2, fp.get()) != 2) throw IoError("cannot read: " + path);
  std::rewind(fp.get());
  if (magic[0] == 0x89 && magic[1] == 'P') return read_png_file(fp.get(), path);
  if (magic[0] == 'P' && magic[1] == '6') return read_ppm_file(fp.get(), path);
  throw IoError("unsupported image format: " + path);
}

namespace {

void write_png_impl(const std::string& path, int width, int height, int color_type,
                    const std::vector<png_bytep>& rows) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot open for write: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng init failed: " + path);
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng init failed: " + path);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG write failed: " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

void write_png(const std::string& path, const RgbImage& image) {
  std::vector<png_bytep> rows(image.height());
  auto& data = const_cast<RgbImage&>(image).data();
  for (int y = 0; y < image.height(); ++y) rows[y] = data.data() + 3 * static_cast<std::size_t>(y) * image.width();
  write_png_impl(path, image.width(), image.height(), PNG_COLOR_TYPE_RGB, rows);
}

void write_png(const std::string& path, const BinaryMask& mask) {
  std::vector<std::uint8_t> gray(mask.data().size());
  for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = mask.data()[i] ? 255 : 0;
  std::vector<png_bytep> rows(mask.height());
  for (int y = 0; y < mask.height(); ++y) rows[y] = gray.data() + static_cast<std::size_t>(y) * mask.width();
  write_png_impl(path, mask.width(), mask.height(), PNG_COLOR_TYPE_GRAY, rows);
}

BinaryMask read_mask(const std::string& path) {
  const RgbImage img = read_image(path);
  BinaryMask mask(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const int sum = img.at(x, y, 0) + img.at(x, y, 1) + img.at(x, y, 2);
      mask.set(x, y, sum > 3 * 127);
    }
  }
  return mask;
}

}  // namespace signscan
