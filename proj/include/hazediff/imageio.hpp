#pragma once

#include <string>

#include "hazediff/raster.hpp"

namespace hazediff {

// 8-bit image I/O. Values map linearly 0..255 <-> [0,1].
// Format is picked from the file extension: .png, .ppm (P6), .pgm (P5).
PixelImage read_image(const std::string& path);
void write_image(const std::string& path, const PixelImage& img);

// FieldImage writes clamp to [0,1] first.
void write_image(const std::string& path, const FieldImage& img);

// Transmission maps round-trip as 8-bit PGM.
TransmissionMap read_tmap_pgm(const std::string& path);
void write_tmap_pgm(const std::string& path, const TransmissionMap& map);

}  // namespace hazediff
