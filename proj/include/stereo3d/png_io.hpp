#pragma once

#include <string>

#include "stereo3d/dense_align.hpp"

namespace stereo3d {

/// 8-bit RGB PNG -> intensities in [0, 1] (linear /255, no gamma handling).
/// The patch origin is left at (0, 0); callers place it.
ImagePatch read_png_rgb(const std::string& path);

void write_png_rgb(const std::string& path, const ImagePatch& patch);

}  // namespace stereo3d
