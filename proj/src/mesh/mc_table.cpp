// The case table is generated rather than transcribed. On every cube face the crossed
// edges are paired by a rule that only looks at that face's four corners (ambiguous
// faces separate the inside corners), and each pairing is oriented by the face normal.
// Neighbouring cubes therefore produce the same segments with opposite directions,
// which is what makes the assembled surface closed and consistently oriented.

#include "mc_table.hpp"

#include <map>

namespace mitoforge::mc {

namespace {

struct Face {
    std::array<int, 4> corners;  // cyclic
    std::array<int, 3> normal;   // outward
};

constexpr std::array<Face, 6> kFaces{{
    {{0, 1, 2, 3}, {0, 0, -1}},
    {{4, 5, 6, 7}, {0, 0, 1}},
    {{0, 1, 5, 4}, {0, -1, 0}},
    {{3, 2, 6, 7}, {0, 1, 0}},
    {{0, 3, 7, 4}, {-1, 0, 0}},
    {{1, 2, 6, 5}, {1, 0, 0}},
}};

int edge_between(int a, int b) {
    for (int e = 0; e < 12; ++e) {
        const auto& ec = kEdgeCorners[e];
        if ((ec[0] == a && ec[1] == b) || (ec[0] == b && ec[1] == a)) return e;
    }
    return -1;
}

std::array<double, 3> edge_mid(int e) {
    const auto& a = kCorner[kEdgeCorners[e][0]];
    const auto& b = kCorner[kEdgeCorners[e][1]];
    return {0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])};
}

// Orients the segment (e0, e1) on face f so that n_f × u points along it, where u points
// from the segment towards the inside corners it bounds.
std::pair<int, int> orient(const Face& f, int e0, int e1, const std::vector<int>& inside_corners) {
    const auto m0 = edge_mid(e0), m1 = edge_mid(e1);
    std::array<double, 3> c{0, 0, 0};
    for (int k : inside_corners)
        for (int a = 0; a < 3; ++a) c[a] += kCorner[k][a] / double(inside_corners.size());
    std::array<double, 3> u, d;
    for (int a = 0; a < 3; ++a) {
        u[a] = c[a] - 0.5 * (m0[a] + m1[a]);
        d[a] = m1[a] - m0[a];
    }
    const auto& n = f.normal;
    const std::array<double, 3> nxu{n[1] * u[2] - n[2] * u[1], n[2] * u[0] - n[0] * u[2], n[0] * u[1] - n[1] * u[0]};
    const double s = nxu[0] * d[0] + nxu[1] * d[1] + nxu[2] * d[2];
    return s > 0 ? std::pair{e0, e1} : std::pair{e1, e0};
}

Case build_case(int config) {
    auto inside = [config](int c) { return (config >> c) & 1; };
    Case out;
    std::map<int, int> next;  // directed segment: edge -> following edge
    for (const auto& f : kFaces) {
        std::vector<int> in_corners;
        for (int c : f.corners)
            if (inside(c)) in_corners.push_back(c);
        if (in_corners.empty() || in_corners.size() == 4) continue;
        std::array<int, 4> fe;
        for (int i = 0; i < 4; ++i) fe[i] = edge_between(f.corners[i], f.corners[(i + 1) % 4]);
        if (in_corners.size() == 2 && inside(f.corners[0]) == inside(f.corners[2])) {
            out.ambiguous_face = true;
            // Cut off each inside corner separately. Corner i touches face edges i-1 and i.
            for (int i = 0; i < 4; ++i) {
                if (!inside(f.corners[i])) continue;
                const auto [a, b] = orient(f, fe[(i + 3) % 4], fe[i], {f.corners[i]});
                next[a] = b;
            }
            continue;
        }
        std::vector<int> crossed;
        for (int i = 0; i < 4; ++i)
            if (inside(f.corners[i]) != inside(f.corners[(i + 1) % 4])) crossed.push_back(fe[i]);
        const auto [a, b] = orient(f, crossed[0], crossed[1], in_corners);
        next[a] = b;
    }
    // Every crossed edge has exactly one outgoing and one incoming segment; trace cycles.
    std::map<int, bool> used;
    for (const auto& [start, _] : next) {
        if (used[start]) continue;
        std::vector<std::uint8_t> loop;
        int e = start;
        do {
            used[e] = true;
            loop.push_back(std::uint8_t(e));
            e = next.at(e);
        } while (e != start);
        out.loops.push_back(std::move(loop));
    }
    return out;
}

std::array<Case, 256> build_table() {
    std::array<Case, 256> t;
    for (int c = 0; c < 256; ++c) t[c] = build_case(c);
    return t;
}

}  // namespace

const std::array<Case, 256>& case_table() {
    static const std::array<Case, 256> table = build_table();
    return table;
}

}  // namespace mitoforge::mc
