#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "morphsim/actuation.hpp"
#include "morphsim/mpm.hpp"

namespace morphsim {

struct ObservationConfig {
    double window_side = 0.5;
    /// Particles per pixel at which occupancy saturates.
    int saturation_count = 4;
    /// Multiplies mean velocity before clipping to [-1, 1].
    double velocity_scale = 1.0;
    /// Draw passive bodies, soil and obstacles into the lower occupancy band.
    bool include_scene = true;
};

/// 64 x 64 x 3 image around the robot. Channel 0 is occupancy: robot pixels
/// map to (0.5, 1], scene-only pixels to (0, 0.5]. Channels 1 and 2 hold the
/// scaled mean robot velocity. Layout is row-major with row 0 at the bottom
/// of the window: pixels[(row * 64 + col) * 3 + channel].
struct ObservationImage {
    static constexpr int size = 64;
    static constexpr int channels = 3;
    std::vector<float> pixels = std::vector<float>(size * size * channels, 0.0f);
    ActionWindow window;

    float at(int row, int col, int c) const { return pixels[(row * size + col) * channels + c]; }
    float& at(int row, int col, int c) { return pixels[(row * size + col) * channels + c]; }
    bool operator==(const ObservationImage&) const = default;
};

/// Mass-weighted mean of the robot particles; throws InvalidState without any.
inline Vec2 center_of_mass(const SimState& state) { return robot_center_of_mass(state); }

/// Pixel containing a world position, or (-1, -1) outside the window.
struct PixelIndex {
    int row = -1, col = -1;
    bool valid() const { return row >= 0; }
};
PixelIndex world_to_pixel(const ActionWindow& window, const Vec2& world, int size = ObservationImage::size);

/// Rasterize into the window centered on the robot COM.
ObservationImage rasterize(const SimState& state, const ObservationConfig& cfg,
                           std::span<const Box> obstacles = {});

/// Rasterize into an explicit window (empty state gives a zero image).
ObservationImage rasterize(const SimState& state, const ActionWindow& window,
                           const ObservationConfig& cfg, std::span<const Box> obstacles = {});

/// 64 x 64 occupancy bitmap of robot particles (1 where any robot particle
/// falls in the pixel), same layout as ObservationImage without channels.
using Bitmap = std::vector<std::uint8_t>;
Bitmap robot_bitmap(const SimState& state, const ActionWindow& window, int size = ObservationImage::size);

/// Intersection over union of two equal-sized bitmaps; 1 when both are empty.
double iou(const Bitmap& a, const Bitmap& b);

}  // namespace morphsim
