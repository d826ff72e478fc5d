#pragma once

#include <string>
#include <vector>

#include "lamvs/cost_volume.hpp"
#include "lamvs/types.hpp"

namespace lamvs {

// PFM, grayscale: header "Pf", dims, scale -1.0 (little-endian), rows
// stored bottom-to-top, 32-bit floats.
void write_pfm(const std::string& path, const ImageF& image);
ImageF read_pfm(const std::string& path);

// Binary PGM (P5), 8-bit, values clamped from [0,1].
void write_pgm(const std::string& path, const ImageF& image);
ImageF read_pgm(const std::string& path);

// Binary PPM (P6) from three [0,1] channels.
void write_ppm(const std::string& path, const ImageF& r, const ImageF& g,
               const ImageF& b);

// PLY point cloud: x,y,z float32, r,g,b uint8; binary little-endian by
// default, ASCII behind the flag.
void write_ply(const std::string& path, const FusedCloud& cloud,
               bool ascii = false);
FusedCloud read_ply(const std::string& path);

// Raw little-endian volume dump: text header (dims + channel order), then
// float32 values and uint8 validity per channel.
void write_volume_dump(const std::string& path,
                       const std::vector<Volume>& channels,
                       const std::vector<int>& channel_order);

}  // namespace lamvs
