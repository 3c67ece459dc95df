#include "stereo3d/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <vector>

namespace stereo3d {

ImagePatch read_png_rgb(const std::string& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw IoError("cannot read PNG: " + path + ": " + image.message);
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError("cannot decode PNG: " + path + ": " + image.message);
  }
  ImagePatch patch;
  patch.resize_to(static_cast<int>(image.width),
                  static_cast<int>(image.height));
  for (size_t i = 0; i < buffer.size(); ++i)
    patch.data[i] = static_cast<float>(buffer[i]) / 255.0f;
  return patch;
}

void write_png_rgb(const std::string& path, const ImagePatch& patch) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(patch.width);
  image.height = static_cast<png_uint_32>(patch.height);
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(patch.data.size());
  for (size_t i = 0; i < patch.data.size(); ++i) {
    const float v = std::clamp(patch.data[i], 0.0f, 1.0f);
    buffer[i] = static_cast<png_byte>(std::lround(v * 255.0f));
  }
  if (!png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0,
                               nullptr))
    throw IoError("cannot write PNG: " + path + ": " + image.message);
}

}  // namespace stereo3d
