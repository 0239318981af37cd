#pragma once

#include <filesystem>
#include <vector>

#include "pqvit/signal.hpp"
#include "pqvit/tensor.hpp"

namespace pqvit {

struct ImageSpec {
    std::size_t height = 224;
    std::size_t width = 224;
    std::size_t channels = 1;
    double y_min = -2.2;       // p.u. mapped to the bottom row
    double y_max = 2.2;        // p.u. mapped to the top row
    double line_value = 0.0;   // black trace
    double bg_value = 1.0;     // white background

    void validate() const;
};

struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> pixels;  // row-major, row 0 at the top, values in [0,1]
    DisturbanceClass source_label = DisturbanceClass::Normal;

    double& at(std::size_t row, std::size_t col) { return pixels[row * width + col]; }
    double at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
};

// Plots the waveform as a binary trace: time maps linearly to columns,
// amplitude to rows (y_min at the bottom), consecutive samples joined by
// Bresenham segments. Out-of-range amplitudes clamp to the border rows.
Image rasterize(const Signal& signal, const ImageSpec& spec);

// Pixel row counted from the bottom for an amplitude; the mapping the
// rasterizer uses for every sample point.
std::size_t amplitude_to_row_from_bottom(double v, const ImageSpec& spec);

// [0,1] intensities to the model's [-1,1] input range, flattened H x W.
Tensor to_model_input(const Image& image);

// Binary PGM (P5), maxval 255, intensity = round(255 * v).
void write_pgm(const Image& image, const std::filesystem::path& path);
Image read_pgm(const std::filesystem::path& path);

}  // namespace pqvit
