#include "morphsim/environments.hpp"

#include <stdexcept>

#include "morphsim/errors.hpp"

namespace morphsim {

namespace {

struct Glyph {
    const char* name;
    const char* rows[32];
};

// Row 0 is the top of the glyph.
const Glyph kGlyphs[] = {
    {"star",
     {
         "................................",
         "................................",
         "................................",
         "................................",
         "...............##...............",
         "...............##...............",
         "...............##...............",
         "..............####..............",
         "..............####..............",
         "..............####..............",
         ".............######.............",
         ".............######.............",
         "....########################....",
         "......####################......",
         ".......##################.......",
         "........################........",
         ".........##############.........",
         "...........##########...........",
         "...........##########...........",
         "..........############..........",
         "..........############..........",
         "..........############..........",
         ".........#####....#####.........",
         ".........####......####.........",
         ".........##..........##.........",
         ".........#............#.........",
         "................................",
         "................................",
         "................................",
         "................................",
         "................................",
         "................................",
     }},
    {"T",
     {
         "................................",
         "................................",
         "................................",
         "................................",
         "................................",
         "................................",
         "................................",
         "................................",
         "......####################......",
         "......####################......",
         "......####################......",
         "......####################......",
         "......####################......",
         ".............######.............",
         ".............######.............",
         ".............######.............",
         ".............######.............",
         ".............######.............",
         ".............######.............",
         ".............######.............",
         ".............######.............",
         ".............######.............",
         ".............######.............",
         ".............######.............",
         ".............######.............",
         ".............######.............",
         ".............######.............",
         ".............######.............",
         ".............######.............",
         ".............######.............",
         ".............######.............",
         "................................",
     }},
    {"L",
     {
         "................................",
         "................................",
         "................................",
         "...........######...............",
         "...........######...............",
         "...........######...............",
         "...........######...............",
         "...........######...............",
         "...........######...............",
         "...........######...............",
         "...........######...............",
         "...........######...............",
         "...........######...............",
         "...........######...............",
         "...........######...............",
         "...........######...............",
         "...........######...............",
         "...........######...............",
         "...........######...............",
         "...........######...............",
         "...........################.....",
         "...........################.....",
         "...........################.....",
         "...........################.....",
         "...........################.....",
         "................................",
         "................................",
         "................................",
         "................................",
         "................................",
         "................................",
         "................................",
     }},
};

}  // namespace

std::vector<std::string> target_names() {
    std::vector<std::string> names;
    for (const Glyph& g : kGlyphs) names.emplace_back(g.name);
    return names;
}

Bitmap target_bitmap(const std::string& name) {
    constexpr int n = ObservationImage::size;
    for (const Glyph& g : kGlyphs) {
        if (name != g.name) continue;
        Bitmap bm(n * n, 0);
        const int offset = (n - 32) / 2;
        for (int k = 0; k < 32; ++k) {
            const int row = offset + 31 - k;
            for (int c = 0; c < 32; ++c) bm[row * n + offset + c] = g.rows[k][c] == '#';
        }
        return bm;
    }
    throw ConfigError("unknown target shape '" + name + "'");
}

}  // namespace morphsim
