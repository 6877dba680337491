#include <png.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>

#include "phdeval/errors.hpp"
#include "phdeval/mask.hpp"

namespace phdeval {

namespace {

struct ImageGuard {
  png_image* image;
  ~ImageGuard() { png_image_free(image); }
};

}  // namespace

GrayImage read_gray_png(const std::string& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw FileNotFound("no such file: " + path);
  }

  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  ImageGuard guard{&image};

  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw DecodeError(path + ": " + image.message);
  }
  if (image.width == 0 || image.height == 0) {
    throw ZeroDimension(path + ": image has a zero dimension");
  }

  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

  GrayImage out;
  out.shape = {static_cast<int>(image.width), static_cast<int>(image.height)};
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    throw DecodeError(path + ": " + image.message);
  }

  if (color) {
    out.pixels.resize(out.shape.size());
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
      out.pixels[i] = luma(buffer[3 * i], buffer[3 * i + 1], buffer[3 * i + 2]);
    }
  } else {
    out.pixels = std::move(buffer);
  }
  return out;
}

BinaryMask load_mask(const std::string& path, const BinarizationPolicy& policy) {
  GrayImage gray = read_gray_png(path);
  return binarize(gray.shape, gray.pixels, policy);
}

std::vector<std::uint8_t> encode_mask_png(const BinaryMask& mask) {
  std::vector<std::uint8_t> pixels(mask.size());
  auto bits = mask.bits();
  for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = bits[i] ? 255 : 0;

  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(mask.width());
  image.height = static_cast<png_uint_32>(mask.height());
  image.format = PNG_FORMAT_GRAY;
  ImageGuard guard{&image};

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
    throw IoError(std::string("PNG encode failed: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels.data(), 0, nullptr)) {
    throw IoError(std::string("PNG encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

void write_mask(const BinaryMask& mask, const std::string& path) {
  const auto bytes = encode_mask_png(mask);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path);
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("write failed: " + path);
}

}  // namespace phdeval
