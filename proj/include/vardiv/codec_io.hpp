#pragma once

// Binary container formats (all little-endian, versioned).
//
// Token pyramid ("VARP"):
//   magic "VARP" | u32 version | u32 K | K x (u32 h, u32 w) | u32 dim |
//   u32 vocab (0 in identity mode) | u8 mode | u32 grids_present |
//   per grid: h_k*w_k  i32 token indices (vq)  or  h_k*w_k*dim f64 (identity)
//
// Codebook ("VARC"):
//   magic "VARC" | u32 version | u32 rows | u32 dim | u8 mode |
//   rows*dim f64, row-major (absent in identity mode)

#include <string>
#include <vector>

#include "vardiv/codec.hpp"

namespace vardiv {

std::vector<unsigned char> pyramid_encode(const TokenPyramid& pyr, const Codebook& cb);
TokenPyramid pyramid_decode(const std::vector<unsigned char>& bytes, const Codebook& cb);

void         write_pyramid(const std::string& path, const TokenPyramid& pyr, const Codebook& cb);
TokenPyramid read_pyramid(const std::string& path, const Codebook& cb);

std::vector<unsigned char> codebook_encode(const Codebook& cb);
Codebook codebook_decode(const std::vector<unsigned char>& bytes);

void     write_codebook(const std::string& path, const Codebook& cb);
Codebook read_codebook(const std::string& path);

} // namespace vardiv
