#include "pqvit/raster.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace pqvit {

void ImageSpec::validate() const {
    if (height < 2 || width < 2)
        throw std::invalid_argument("ImageSpec: geometry too small");
    if (channels != 1)
        throw std::invalid_argument("ImageSpec: only grayscale (C=1) supported");
    if (!(y_min < y_max))
        throw std::invalid_argument("ImageSpec: y_min must be below y_max");
}

std::size_t amplitude_to_row_from_bottom(double v, const ImageSpec& spec) {
    const double span = spec.y_max - spec.y_min;
    const double r = std::floor(double(spec.height - 1) * (v - spec.y_min) / span);
    if (r < 0.0) return 0;
    if (r > double(spec.height - 1)) return spec.height - 1;
    return std::size_t(r);
}

namespace {

void draw_line(Image& img, double value, long x0, long y0, long x1, long y1) {
    // Classic integer Bresenham, all octants.
    const long dx = std::labs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const long dy = -std::labs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    long err = dx + dy;
    for (;;) {
        img.at(std::size_t(y0), std::size_t(x0)) = value;
        if (x0 == x1 && y0 == y1) break;
        const long e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

}  // namespace

Image rasterize(const Signal& signal, const ImageSpec& spec) {
    spec.validate();
    const std::size_t n = signal.samples.size();
    if (n < 2) throw std::invalid_argument("rasterize: need at least 2 samples");
    for (double v : signal.samples)
        if (!std::isfinite(v)) throw std::domain_error("rasterize: non-finite sample");

    Image img;
    img.height = spec.height;
    img.width = spec.width;
    img.source_label = signal.label;
    img.pixels.assign(spec.height * spec.width, spec.bg_value);

    auto col = [&](std::size_t k) {
        return long(std::llround(double(spec.width - 1) * double(k) / double(n - 1)));
    };
    auto row = [&](double v) {
        return long(spec.height - 1 - amplitude_to_row_from_bottom(v, spec));
    };

    long px = col(0), py = row(signal.samples[0]);
    img.at(std::size_t(py), std::size_t(px)) = spec.line_value;
    for (std::size_t k = 1; k < n; ++k) {
        const long x = col(k), y = row(signal.samples[k]);
        draw_line(img, spec.line_value, px, py, x, y);
        px = x;
        py = y;
    }
    return img;
}

Tensor to_model_input(const Image& image) {
    Tensor t({image.height, image.width});
    for (std::size_t i = 0; i < image.pixels.size(); ++i)
        t[i] = 2.0 * image.pixels[i] - 1.0;
    return t;
}

void write_pgm(const Image& image, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("write_pgm: cannot open " + path.string());
    f << "P5\n" << image.width << " " << image.height << "\n255\n";
    std::vector<std::uint8_t> bytes(image.pixels.size());
    for (std::size_t i = 0; i < bytes.size(); ++i)
        bytes[i] = std::uint8_t(std::lround(255.0 * image.pixels[i]));
    f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!f) throw std::runtime_error("write_pgm: write failed for " + path.string());
}

Image read_pgm(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_pgm: cannot open " + path.string());
    std::string magic;
    std::size_t w = 0, h = 0;
    int maxval = 0;
    f >> magic >> w >> h >> maxval;
    if (magic != "P5" || maxval != 255)
        throw std::runtime_error("read_pgm: unsupported format in " + path.string());
    f.get();  // single whitespace after header
    Image img;
    img.height = h;
    img.width = w;
    img.pixels.resize(w * h);
    std::vector<std::uint8_t> bytes(w * h);
    f.read(reinterpret_cast<char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!f) throw std::runtime_error("read_pgm: truncated " + path.string());
    for (std::size_t i = 0; i < bytes.size(); ++i) img.pixels[i] = bytes[i] / 255.0;
    return img;
}

}  // namespace pqvit
