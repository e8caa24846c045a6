#pragma once

#include <string>

#include "omclic/image.hpp"

namespace omclic {

/// Reads an 8-bit PNG as grayscale or RGB. Palette/16-bit inputs are
/// expanded/stripped to 8-bit; an alpha channel is dropped.
ImageU8 read_png(const std::string& path);

void write_png(const std::string& path, const ImageU8& img);

}  // namespace omclic
