#pragma once

#include <filesystem>

#include "dircn/tensor.hpp"

namespace dircn::cli {

// |a - b| elementwise over [H, W] images.
Tensor error_map(const Tensor& a, const Tensor& b);

// 16-bit binary graymap; values are divided by `scale`, clipped to [0, 1]
// and quantized to 0..65535. A non-positive scale writes zeros.
void write_pgm16(const std::filesystem::path& path, const Tensor& image, double scale);

// Raw 16-bit samples of a file written by write_pgm16, as [H, W].
Tensor read_pgm16(const std::filesystem::path& path);

double max_value(const Tensor& t);

}  // namespace dircn::cli
