#pragma once

#include <filesystem>

#include "retigrade/image.hpp"

namespace retigrade {

/// Decodes a PNG or JPEG file into RGB order. Grayscale is replicated to three
/// channels and alpha is dropped. Anything other than 8-bit depth is rejected
/// with InvalidInput.
RawImage read_image(const std::filesystem::path& path);

/// Writes an 8-bit PNG (values are rounded and clamped to [0, 255]).
void write_png(const std::filesystem::path& path, const RawImage& img);

}  // namespace retigrade
