#include "morphsim/observation.hpp"

#include <algorithm>
#include <cmath>

#include "morphsim/errors.hpp"

namespace morphsim {

PixelIndex world_to_pixel(const ActionWindow& window, const Vec2& world, int size) {
    const Vec2 uv = window.to_uv(world);
    const double fx = std::floor(uv.x() * size), fy = std::floor(uv.y() * size);
    if (!(fx >= 0 && fx < size && fy >= 0 && fy < size)) return {};
    return {static_cast<int>(fy), static_cast<int>(fx)};
}

ObservationImage rasterize(const SimState& state, const ObservationConfig& cfg,
                           std::span<const Box> obstacles) {
    return rasterize(state, ActionWindow{center_of_mass(state), cfg.window_side}, cfg, obstacles);
}

ObservationImage rasterize(const SimState& state, const ActionWindow& window,
                           const ObservationConfig& cfg, std::span<const Box> obstacles) {
    constexpr int n = ObservationImage::size;
    ObservationImage img;
    img.window = window;
    std::vector<int> robot(n * n, 0), scene(n * n, 0);
    std::vector<Vec2> vel(n * n, Vec2::Zero());
    for (std::size_t p = 0; p < state.particles.size(); ++p) {
        const auto& part = state.particles[p];
        const bool is_robot = p < state.robot_count;
        if (!is_robot && !cfg.include_scene) continue;
        const PixelIndex px = world_to_pixel(window, part.x);
        if (!px.valid()) continue;
        const int k = px.row * n + px.col;
        if (is_robot) {
            ++robot[k];
            vel[k] += part.v;
        } else {
            ++scene[k];
        }
    }
    const double sat = static_cast<double>(cfg.saturation_count);
    for (int row = 0; row < n; ++row) {
        for (int col = 0; col < n; ++col) {
            const int k = row * n + col;
            if (robot[k] > 0) {
                img.at(row, col, 0) = static_cast<float>(0.5 + 0.5 * std::min(1.0, robot[k] / sat));
                const Vec2 v = vel[k] / robot[k] * cfg.velocity_scale;
                img.at(row, col, 1) = static_cast<float>(std::clamp(v.x(), -1.0, 1.0));
                img.at(row, col, 2) = static_cast<float>(std::clamp(v.y(), -1.0, 1.0));
                continue;
            }
            if (!cfg.include_scene) continue;
            double occ = 0.5 * std::min(1.0, scene[k] / sat);
            if (occ < 0.5 && !obstacles.empty()) {
                const Vec2 center = window.lower() + Vec2(col + 0.5, row + 0.5) * (window.side / n);
                for (const Box& b : obstacles) {
                    if (b.contains(center)) {
                        occ = 0.5;
                        break;
                    }
                }
            }
            img.at(row, col, 0) = static_cast<float>(occ);
        }
    }
    return img;
}

Bitmap robot_bitmap(const SimState& state, const ActionWindow& window, int size) {
    Bitmap bm(static_cast<std::size_t>(size) * size, 0);
    for (std::size_t p = 0; p < state.robot_count; ++p) {
        const PixelIndex px = world_to_pixel(window, state.particles[p].x, size);
        if (px.valid()) bm[static_cast<std::size_t>(px.row) * size + px.col] = 1;
    }
    return bm;
}

double iou(const Bitmap& a, const Bitmap& b) {
    if (a.size() != b.size()) throw ConfigError("iou: bitmap sizes differ");
    std::size_t inter = 0, uni = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        inter += (a[k] && b[k]);
        uni += (a[k] || b[k]);
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace morphsim
