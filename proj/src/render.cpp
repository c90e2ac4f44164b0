#include "morphsim/render.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "morphsim/errors.hpp"

namespace morphsim {

namespace {

void fill_rect(Image& img, int x0, int y0, int w, int h, Rgb c) {
    const int x1 = std::min(img.width, x0 + w), y1 = std::min(img.height, y0 + h);
    for (int y = std::max(0, y0); y < y1; ++y)
        for (int x = std::max(0, x0); x < x1; ++x) img.set(x, y, c);
}

void draw_line(Image& img, Vec2 a, Vec2 b, Rgb c) {
    const double len = std::max(std::abs(b.x() - a.x()), std::abs(b.y() - a.y()));
    const int steps = std::max(1, static_cast<int>(std::ceil(len)));
    for (int k = 0; k <= steps; ++k) {
        const Vec2 p = a + (b - a) * (static_cast<double>(k) / steps);
        const int x = static_cast<int>(std::floor(p.x())), y = static_cast<int>(std::floor(p.y()));
        if (x >= 0 && y >= 0 && x < img.width && y < img.height) img.set(x, y, c);
    }
}

void draw_box(Image& img, const PixelMap& map, const Box& box, Rgb c) {
    const Vec2 lo = map.to_pixel_f(Vec2(box.lo.x(), box.hi.y()));
    const Vec2 hi = map.to_pixel_f(Vec2(box.hi.x(), box.lo.y()));
    const int x0 = static_cast<int>(std::floor(std::max(-1.0, lo.x())));
    const int y0 = static_cast<int>(std::floor(std::max(-1.0, lo.y())));
    const int x1 = static_cast<int>(std::ceil(std::min(img.width + 1.0, hi.x())));
    const int y1 = static_cast<int>(std::ceil(std::min(img.height + 1.0, hi.y())));
    fill_rect(img, x0, y0, x1 - x0, y1 - y0, c);
}

void draw_cross(Image& img, Vec2 p, int half, Rgb c) {
    draw_line(img, p - Vec2(half, 0), p + Vec2(half, 0), c);
    draw_line(img, p - Vec2(0, half), p + Vec2(0, half), c);
}

Rgb role_color(Role role, const FrameStyle& s) {
    switch (role) {
        case Role::robot: return s.robot;
        case Role::passive_object: return s.passive;
        case Role::soil: return s.soil;
    }
    return s.robot;
}

// Outline of the target bitmap placed in the robot's observation window.
void draw_target_outline(Image& img, const PixelMap& map, const Bitmap& target, const ActionWindow& window,
                         Rgb c) {
    const double px = window.side / 64;
    const Vec2 lo = window.lower();
    auto set_at = [&](int r, int col) { return r >= 0 && r < 64 && col >= 0 && col < 64 && target[r * 64 + col]; };
    for (int r = 0; r < 64; ++r)
        for (int col = 0; col < 64; ++col) {
            if (!set_at(r, col)) continue;
            const Vec2 cell_lo = lo + Vec2(col * px, r * px);
            const Vec2 cell_hi = cell_lo + Vec2(px, px);
            if (!set_at(r, col - 1))
                draw_line(img, map.to_pixel_f(cell_lo), map.to_pixel_f(Vec2(cell_lo.x(), cell_hi.y())), c);
            if (!set_at(r, col + 1))
                draw_line(img, map.to_pixel_f(Vec2(cell_hi.x(), cell_lo.y())), map.to_pixel_f(cell_hi), c);
            if (!set_at(r - 1, col))
                draw_line(img, map.to_pixel_f(cell_lo), map.to_pixel_f(Vec2(cell_hi.x(), cell_lo.y())), c);
            if (!set_at(r + 1, col))
                draw_line(img, map.to_pixel_f(Vec2(cell_lo.x(), cell_hi.y())), map.to_pixel_f(cell_hi), c);
        }
}

std::uint8_t channel_to_byte(float v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

Rgb signed_color(float v) {
    const std::uint8_t m = channel_to_byte(std::abs(v));
    const std::uint8_t rest = static_cast<std::uint8_t>(255 - m);
    return v >= 0 ? Rgb{255, rest, rest} : Rgb{rest, rest, 255};
}

// ---- GIF ----

struct BitWriter {
    std::vector<std::uint8_t> bytes;
    std::uint32_t acc = 0;
    int bits = 0;

    void put(int code, int width) {
        acc |= static_cast<std::uint32_t>(code) << bits;
        bits += width;
        while (bits >= 8) {
            bytes.push_back(static_cast<std::uint8_t>(acc & 0xff));
            acc >>= 8;
            bits -= 8;
        }
    }
    void flush() {
        if (bits > 0) bytes.push_back(static_cast<std::uint8_t>(acc & 0xff));
        acc = 0;
        bits = 0;
    }
};

// Variable-width LZW with 8-bit minimum code size, as used by GIF.
std::vector<std::uint8_t> lzw_encode(const std::vector<std::uint8_t>& indices) {
    constexpr int kMinCodeSize = 8;
    constexpr int kClear = 1 << kMinCodeSize, kEnd = kClear + 1, kMaxCodes = 4096;
    std::vector<std::uint16_t> child(static_cast<std::size_t>(kMaxCodes) * 256, 0);
    BitWriter out;
    int width = kMinCodeSize + 1, next = kEnd + 1;
    out.put(kClear, width);
    if (indices.empty()) {
        out.put(kEnd, width);
        out.flush();
        return out.bytes;
    }
    int prefix = indices[0];
    for (std::size_t k = 1; k < indices.size(); ++k) {
        const std::uint8_t c = indices[k];
        std::uint16_t& slot = child[static_cast<std::size_t>(prefix) * 256 + c];
        if (slot != 0) {
            prefix = slot;
            continue;
        }
        out.put(prefix, width);
        if (next < kMaxCodes) {
            slot = static_cast<std::uint16_t>(next);
            if (next == (1 << width) && width < 12) ++width;
            ++next;
        } else {
            out.put(kClear, width);
            std::fill(child.begin(), child.end(), 0);
            width = kMinCodeSize + 1;
            next = kEnd + 1;
        }
        prefix = c;
    }
    out.put(prefix, width);
    out.put(kEnd, width);
    out.flush();
    return out.bytes;
}

void put_u16(std::vector<std::uint8_t>& out, int v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
}

std::uint32_t pack(Rgb c) { return (static_cast<std::uint32_t>(c.r) << 16) | (c.g << 8) | c.b; }

// Exact palette when the frames use at most 256 colors, otherwise a fixed
// 6 x 7 x 6 cube.
struct Palette {
    std::vector<Rgb> colors;
    std::map<std::uint32_t, std::uint8_t> exact;
    bool cube = false;

    explicit Palette(std::span<const Image> frames) {
        std::map<std::uint32_t, int> seen;
        for (const Image& f : frames) {
            for (std::size_t k = 0; k < f.rgb.size(); k += 3) {
                seen.emplace(pack({f.rgb[k], f.rgb[k + 1], f.rgb[k + 2]}), 0);
                if (seen.size() > 256) break;
            }
            if (seen.size() > 256) break;
        }
        if (seen.size() <= 256) {
            for (const auto& [key, unused] : seen) {
                exact[key] = static_cast<std::uint8_t>(colors.size());
                colors.push_back({static_cast<std::uint8_t>(key >> 16), static_cast<std::uint8_t>((key >> 8) & 0xff),
                                  static_cast<std::uint8_t>(key & 0xff)});
            }
        } else {
            cube = true;
            for (int r = 0; r < 6; ++r)
                for (int g = 0; g < 7; ++g)
                    for (int b = 0; b < 6; ++b)
                        colors.push_back({static_cast<std::uint8_t>(r * 51), static_cast<std::uint8_t>(g * 255 / 6),
                                          static_cast<std::uint8_t>(b * 51)});
        }
        while (colors.size() < 2) colors.push_back({});
    }

    std::uint8_t index(Rgb c) const {
        if (!cube) return exact.at(pack(c));
        const int r = (c.r * 5 + 127) / 255, g = (c.g * 6 + 127) / 255, b = (c.b * 5 + 127) / 255;
        return static_cast<std::uint8_t>((r * 7 + g) * 6 + b);
    }

    int size_bits() const {
        int bits = 1;
        while ((1u << bits) < colors.size()) ++bits;
        return bits;
    }
};

}  // namespace

Image::Image(int w, int h, Rgb fill) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3) {
    if (w <= 0 || h <= 0) throw ConfigError("image size must be positive");
    for (std::size_t k = 0; k < rgb.size(); k += 3) {
        rgb[k] = fill.r;
        rgb[k + 1] = fill.g;
        rgb[k + 2] = fill.b;
    }
}

Rgb Image::at(int x, int y) const {
    const std::size_t k = (static_cast<std::size_t>(y) * width + x) * 3;
    return {rgb[k], rgb[k + 1], rgb[k + 2]};
}

void Image::set(int x, int y, Rgb c) {
    const std::size_t k = (static_cast<std::size_t>(y) * width + x) * 3;
    rgb[k] = c.r;
    rgb[k + 1] = c.g;
    rgb[k + 2] = c.b;
}

void FrameStyle::validate() const {
    if (size < 128) throw ConfigError("frame size must be >= 128");
    if (quiver_stride < 1) throw ConfigError("quiver stride must be >= 1");
}

FrameStyle FrameStyle::preset(const std::string& name) {
    FrameStyle s;
    if (name == "default") return s;
    if (name == "dark") {
        s.background = {18, 18, 24};
        s.robot = {255, 140, 80};
        s.passive = {110, 170, 255};
        s.soil = {190, 150, 100};
        s.obstacle = {120, 120, 130};
        s.target = {90, 230, 120};
        s.quiver = {240, 240, 240};
        s.com = {255, 80, 220};
        return s;
    }
    if (name == "debug") {
        s.size = 512;
        s.quivers = true;
        s.quiver_stride = 8;
        return s;
    }
    throw ConfigError("unknown style preset '" + name + "' (expected default, dark or debug)");
}

PixelMap PixelMap::for_state(const SimState& state, const WorldConfig& world, int size) {
    PixelMap m;
    m.origin = state.grid_offset.cast<double>() * world.dx();
    m.side = world.cells() * world.dx();
    m.size = size;
    return m;
}

Vec2 PixelMap::to_pixel_f(const Vec2& w) const {
    const Vec2 u = (w - origin) / side * static_cast<double>(size);
    return {u.x(), size - u.y()};
}

Vec2i PixelMap::to_pixel(const Vec2& w) const {
    const Vec2 u = (w - origin) / side * static_cast<double>(size);
    return {static_cast<int>(std::floor(u.x())), size - 1 - static_cast<int>(std::floor(u.y()))};
}

std::vector<Segment> quiver_segments(const SimState& state, std::span<const Vec2> actions, const PixelMap& map,
                                     const FrameStyle& style) {
    std::vector<Segment> out;
    if (actions.empty()) return out;
    if (actions.size() != state.robot_count) throw ConfigError("quivers need one action per robot particle");
    for (std::size_t p = 0; p < state.robot_count; p += static_cast<std::size_t>(style.quiver_stride)) {
        const Vec2 from = map.to_pixel_f(state.particles[p].x);
        // Pixel rows grow downward.
        const Vec2 d = style.quiver_scale * Vec2(actions[p].x(), -actions[p].y());
        out.push_back({from, from + d});
    }
    return out;
}

Image render_frame(const SimState& state, const EnvSpec& spec, const FrameStyle& style,
                   std::span<const Vec2> actions) {
    style.validate();
    const WorldConfig world = world_config(spec);
    const PixelMap map = PixelMap::for_state(state, world, style.size);
    Image img(style.size, style.size, style.background);
    for (const Box& b : world.obstacles) draw_box(img, map, b, style.obstacle);
    if (std::isfinite(world.ground_y)) {
        const Box ground{Vec2(map.origin.x() - 1.0, map.origin.y() - 1.0),
                         Vec2(map.origin.x() + map.side + 1.0, world.ground_y)};
        draw_box(img, map, ground, style.obstacle);
    }

    const int dot = std::max(1, style.size / 256);
    for (Role role : {Role::soil, Role::passive_object, Role::robot}) {
        const Rgb c = role_color(role, style);
        for (const auto& p : state.particles) {
            if (p.role != role) continue;
            const Vec2i px = map.to_pixel(p.x);
            fill_rect(img, px.x(), px.y(), dot, dot, c);
        }
    }

    if (style.target_outline) {
        for (const auto& o : spec.scene) {
            if (o.kind != SceneObject::Kind::target_marker) continue;
            draw_cross(img, map.to_pixel_f(o.geometry.center), std::max(3, style.size / 64), style.target);
        }
        if (spec.task == TaskKind::shape_match && state.robot_count > 0) {
            const ActionWindow window{robot_center_of_mass(state), spec.observation.window_side};
            draw_target_outline(img, map, target_bitmap(spec.target_shape), window, style.target);
        }
    }
    if (style.quivers)
        for (const Segment& s : quiver_segments(state, actions, map, style)) draw_line(img, s.from, s.to, style.quiver);
    if (style.com_marker && state.robot_count > 0)
        draw_cross(img, map.to_pixel_f(robot_center_of_mass(state)), std::max(2, style.size / 96), style.com);
    return img;
}

Image render_observation(const ObservationImage& obs, int scale) {
    if (scale < 1) throw ConfigError("observation scale must be >= 1");
    const int n = ObservationImage::size;
    const int gap = scale;
    Image img(3 * n * scale + 2 * gap, n * scale, Rgb{128, 128, 128});
    for (int c = 0; c < 3; ++c) {
        const int x0 = c * (n * scale + gap);
        for (int row = 0; row < n; ++row)
            for (int col = 0; col < n; ++col) {
                const float v = obs.at(row, col, c);
                Rgb color;
                if (c == 0) {
                    const std::uint8_t g = channel_to_byte(v);
                    color = {g, g, g};
                } else {
                    color = signed_color(v);
                }
                // Observation row 0 is the bottom of the window.
                fill_rect(img, x0 + col * scale, (n - 1 - row) * scale, scale, scale, color);
            }
    }
    return img;
}

std::vector<Image> render_episode(const EpisodeRecord& record, const FrameStyle& style) {
    style.validate();
    const EnvSpec spec = unflatten(record.header.config);
    if (hash_hex(spec_hash(spec)) != record.header.config_hash)
        throw StaleReplay("embedded config does not match the recorded config hash");
    Environment env(spec, record.header.seed);
    std::vector<Image> frames;
    frames.reserve(record.steps.size());
    for (const EpisodeStep& s : record.steps) {
        env.step(s.action);
        frames.push_back(render_frame(env.state(), spec, style, env.last_particle_actions()));
    }
    return frames;
}

std::vector<std::uint8_t> encode_png(const Image& image) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw Error("png: cannot create writer");
    png_infop info = png_create_info_struct(png);
    std::vector<std::uint8_t> out;
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("png: encoding failed");
    }
    png_set_write_fn(
        png, &out,
        [](png_structp p, png_bytep data, png_size_t len) {
            auto* v = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(p));
            v->insert(v->end(), data, data + len);
        },
        nullptr);
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < image.height; ++y) {
        png_write_row(png, const_cast<png_bytep>(image.rgb.data() + static_cast<std::size_t>(y) * image.width * 3));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

namespace {

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ConfigError("error writing " + path);
}

}  // namespace

void write_png(const std::string& path, const Image& image) { write_bytes(path, encode_png(image)); }

std::vector<std::uint8_t> encode_gif(std::span<const Image> frames, int delay_cs) {
    if (frames.empty()) throw ConfigError("gif needs at least one frame");
    const int w = frames[0].width, h = frames[0].height;
    for (const Image& f : frames)
        if (f.width != w || f.height != h) throw ConfigError("gif frames must share one size");
    if (w > 65535 || h > 65535) throw ConfigError("gif frame too large");

    const Palette palette(frames);
    const int bits = palette.size_bits();
    std::vector<std::uint8_t> out = {'G', 'I', 'F', '8', '9', 'a'};
    put_u16(out, w);
    put_u16(out, h);
    out.push_back(static_cast<std::uint8_t>(0x80 | ((bits - 1) << 4) | (bits - 1)));
    out.push_back(0);  // background index
    out.push_back(0);  // aspect
    for (int k = 0; k < (1 << bits); ++k) {
        const Rgb c = k < static_cast<int>(palette.colors.size()) ? palette.colors[k] : Rgb{};
        out.insert(out.end(), {c.r, c.g, c.b});
    }
    // Loop forever.
    const std::uint8_t netscape[] = {0x21, 0xff, 0x0b, 'N', 'E', 'T', 'S', 'C', 'A', 'P', 'E',
                                     '2', '.', '0', 0x03, 0x01, 0x00, 0x00, 0x00};
    out.insert(out.end(), std::begin(netscape), std::end(netscape));

    std::vector<std::uint8_t> indices(static_cast<std::size_t>(w) * h);
    for (const Image& f : frames) {
        out.insert(out.end(), {0x21, 0xf9, 0x04, 0x00});
        put_u16(out, delay_cs);
        out.insert(out.end(), {0x00, 0x00});
        out.push_back(0x2c);
        put_u16(out, 0);
        put_u16(out, 0);
        put_u16(out, w);
        put_u16(out, h);
        out.push_back(0);
        for (std::size_t k = 0; k < indices.size(); ++k)
            indices[k] = palette.index({f.rgb[3 * k], f.rgb[3 * k + 1], f.rgb[3 * k + 2]});
        out.push_back(8);
        const std::vector<std::uint8_t> data = lzw_encode(indices);
        for (std::size_t k = 0; k < data.size(); k += 255) {
            const std::size_t len = std::min<std::size_t>(255, data.size() - k);
            out.push_back(static_cast<std::uint8_t>(len));
            out.insert(out.end(), data.begin() + static_cast<std::ptrdiff_t>(k),
                       data.begin() + static_cast<std::ptrdiff_t>(k + len));
        }
        out.push_back(0);
    }
    out.push_back(0x3b);
    return out;
}

void write_gif(const std::string& path, std::span<const Image> frames, int delay_cs) {
    write_bytes(path, encode_gif(frames, delay_cs));
}

}  // namespace morphsim
