#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <threadtrack/error.hpp>

namespace threadtrack {

struct Pixel {
    int u = 0;  ///< column, counted from the left edge
    int v = 0;  ///< row, counted from the top edge
    friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Dense per-pixel thread probability map. 8-bit values map linearly onto
/// [0, 1]; a pixel counts as "on" once its probability reaches 0.5.
class Mask {
public:
    Mask() = default;
    Mask(int width, int height, std::uint8_t fill = 0)
        : width_(width), height_(height),
          values_(static_cast<std::size_t>(width) * height, fill) {
        if (width <= 0 || height <= 0)
            throw DomainError("mask dimensions must be positive");
    }

    int width() const { return width_; }
    int height() const { return height_; }

    bool in_bounds(int u, int v) const {
        return u >= 0 && u < width_ && v >= 0 && v < height_;
    }

    std::uint8_t at(int u, int v) const {
        return values_[static_cast<std::size_t>(v) * width_ + u];
    }
    std::uint8_t& at(int u, int v) {
        return values_[static_cast<std::size_t>(v) * width_ + u];
    }

    double prob(int u, int v) const { return at(u, v) / 255.0; }
    bool on(int u, int v) const { return at(u, v) >= 128; }

    int count_on() const;

    const std::vector<std::uint8_t>& data() const { return values_; }
    std::vector<std::uint8_t>& data() { return values_; }

    friend bool operator==(const Mask&, const Mask&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> values_;
};

/// 8-connected component labelling of the on-pixels. Returns one label per
/// pixel (-1 for off-pixels, components numbered from 0 in scan order) and,
/// if requested, the pixel count of every component.
std::vector<std::int32_t> label_components(const Mask& mask,
                                           std::vector<int>* areas = nullptr);

/// Removes every 8-connected component smaller than min_area pixels.
Mask remove_small_components(const Mask& mask, int min_area);

/// Exact Euclidean distance transform that also records, for every pixel, the
/// coordinates of its nearest on-pixel.
struct FeatureTransform {
    int width = 0;
    int height = 0;
    bool empty = true;                  ///< true when the mask had no on-pixels
    std::vector<std::int32_t> nearest;  ///< packed v * width + u, -1 when empty

    Pixel nearest_pixel(double u, double v) const;

    /// Distance from an exact (sub-pixel) point to the nearest on-pixel centre.
    double distance(double u, double v) const;
};

FeatureTransform feature_transform(const Mask& mask);

/// Binary PGM (P5) with maxval 255; values map 1:1 onto mask probabilities.
void write_pgm(const Mask& mask, const std::filesystem::path& path);
Mask read_pgm(const std::filesystem::path& path);

struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;  ///< interleaved, row-major

    RgbImage() = default;
    RgbImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, fill) {}

    void set(int u, int v, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        auto i = (static_cast<std::size_t>(v) * width + u) * 3;
        rgb[i] = r;
        rgb[i + 1] = g;
        rgb[i + 2] = b;
    }
    bool in_bounds(int u, int v) const {
        return u >= 0 && u < width && v >= 0 && v < height;
    }
};

void write_ppm(const RgbImage& image, const std::filesystem::path& path);

}  // namespace threadtrack
