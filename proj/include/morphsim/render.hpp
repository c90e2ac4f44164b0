#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "morphsim/environments.hpp"
#include "morphsim/episode.hpp"
#include "morphsim/observation.hpp"

namespace morphsim {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb&) const = default;
};

/// 8-bit RGB raster, row 0 at the top.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;

    Image() = default;
    Image(int w, int h, Rgb fill = {});
    Rgb at(int x, int y) const;
    void set(int x, int y, Rgb c);
    bool operator==(const Image&) const = default;
};

struct FrameStyle {
    int size = 256;
    Rgb background{245, 245, 240};
    Rgb robot{214, 92, 52};
    Rgb passive{70, 120, 200};
    Rgb soil{150, 115, 70};
    Rgb obstacle{60, 60, 60};
    Rgb target{40, 170, 80};
    Rgb quiver{20, 20, 20};
    Rgb com{200, 0, 160};
    bool quivers = false;
    bool com_marker = true;
    bool target_outline = true;
    /// Draw a quiver for every k-th robot particle.
    int quiver_stride = 16;
    /// Pixels per unit of normalized action.
    double quiver_scale = 12.0;

    void validate() const;
    /// "default", "dark" or "debug" (quivers on).
    static FrameStyle preset(const std::string& name);
};

/// Linear world-to-pixel map over the active grid window:
///   col = floor((x - x0) / L * size), row = size - 1 - floor((y - y0) / L * size)
/// with (x0, y0) = grid_offset * dx and L = cells * dx.
struct PixelMap {
    Vec2 origin = Vec2::Zero();
    double side = 1.0;
    int size = 256;

    static PixelMap for_state(const SimState& state, const WorldConfig& world, int size);
    /// Pixel column (x) and row (y, from the top); may fall outside the image.
    Vec2i to_pixel(const Vec2& world) const;
    /// Continuous pixel coordinates, same convention.
    Vec2 to_pixel_f(const Vec2& world) const;
};

struct Segment {
    Vec2 from;  // pixel coordinates
    Vec2 to;
};

/// Quiver segments for `actions` (one per robot particle), every
/// style.quiver_stride-th particle, scaled by style.quiver_scale.
std::vector<Segment> quiver_segments(const SimState& state, std::span<const Vec2> actions, const PixelMap& map,
                                     const FrameStyle& style);

/// Draws scene obstacles, target, particles, then overlays. `actions` are the
/// per-robot-particle actions for the quiver overlay and may be empty.
Image render_frame(const SimState& state, const EnvSpec& spec, const FrameStyle& style,
                   std::span<const Vec2> actions = {});

/// The three observation channels side by side, each 64 x 64 scaled by
/// `scale`: occupancy in gray, vx and vy red for positive, blue for negative.
Image render_observation(const ObservationImage& obs, int scale = 4);

/// Replays the record and renders the state after every control step.
std::vector<Image> render_episode(const EpisodeRecord& record, const FrameStyle& style);

std::vector<std::uint8_t> encode_png(const Image& image);
void write_png(const std::string& path, const Image& image);
/// Animated GIF89a; all frames must share one size. `delay_cs` is the frame
/// delay in hundredths of a second.
std::vector<std::uint8_t> encode_gif(std::span<const Image> frames, int delay_cs = 5);
void write_gif(const std::string& path, std::span<const Image> frames, int delay_cs = 5);

}  // namespace morphsim
