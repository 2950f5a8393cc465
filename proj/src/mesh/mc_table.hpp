#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace mitoforge::mc {

// Corner c sits at (c&1 ^ (c>>1&1), c>>1&1, c>>2&1): 0 (0,0,0) 1 (1,0,0) 2 (1,1,0) 3 (0,1,0), +4 for z = 1.
inline constexpr std::array<std::array<int, 3>, 8> kCorner{{
    {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1},
}};

inline constexpr std::array<std::array<int, 2>, 12> kEdgeCorners{{
    {0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6}, {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7},
}};

/// Surface pieces for one of the 256 inside/outside corner configurations.
struct Case {
    /// Closed loops of crossed edges, ordered counter-clockwise seen from outside the
    /// superlevel set (so fan triangles get outward normals).
    std::vector<std::vector<std::uint8_t>> loops;
    /// True when some cube face has all four edges crossed (diagonal corners inside).
    bool ambiguous_face = false;
};

/// 256 entries indexed by the bitmask of inside corners.
const std::array<Case, 256>& case_table();

}  // namespace mitoforge::mc
