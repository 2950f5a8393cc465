#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "mitoforge/error.hpp"
#include "mitoforge/mesh.hpp"

namespace mitoforge {

namespace {

std::uint64_t directed_key(std::uint32_t a, std::uint32_t b) { return (std::uint64_t(a) << 32) | b; }

struct P2 {
    double x, y;
};

double orient2d(const P2& a, const P2& b, const P2& c) { return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x); }

bool segments_cross(const P2& a, const P2& b, const P2& c, const P2& d) {
    const double d1 = orient2d(a, b, c), d2 = orient2d(a, b, d), d3 = orient2d(c, d, a), d4 = orient2d(c, d, b);
    return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

// Projects the loop onto the plane orthogonal to its Newell normal; the 2D polygon is
// counter-clockwise whenever the loop is counter-clockwise about that normal.
std::vector<P2> project_loop(const TriangleMesh& mesh, const std::vector<std::uint32_t>& loop) {
    Vec3 n{};
    for (std::size_t i = 0; i < loop.size(); ++i) {
        const Vec3& a = mesh.vertices[loop[i]];
        const Vec3& b = mesh.vertices[loop[(i + 1) % loop.size()]];
        n += Vec3{(a.y - b.y) * (a.z + b.z), (a.z - b.z) * (a.x + b.x), (a.x - b.x) * (a.y + b.y)};
    }
    const double len = norm(n);
    if (!(len > 0.0)) throw InputError("mesh", "degenerate boundary loop (zero projected area)");
    n *= 1.0 / len;
    const Vec3 helper = std::fabs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    Vec3 u = cross(helper, n);
    u *= 1.0 / norm(u);
    const Vec3 v = cross(n, u);
    std::vector<P2> out;
    out.reserve(loop.size());
    for (auto id : loop) out.push_back({dot(mesh.vertices[id], u), dot(mesh.vertices[id], v)});
    return out;
}

void ear_clip(const TriangleMesh& mesh, const std::vector<std::uint32_t>& loop, std::vector<Triangle>& out) {
    const auto pts = project_loop(mesh, loop);
    const std::size_t n = loop.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) continue;
            if (segments_cross(pts[i], pts[i + 1], pts[j], pts[(j + 1) % n]))
                throw InputError("mesh", "self-intersecting boundary loop");
        }

    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    while (idx.size() > 3) {
        const std::size_t m = idx.size();
        std::size_t best = m;
        double best_score = -INFINITY;
        for (std::size_t c = 0; c < m; ++c) {
            const auto& a = pts[idx[(c + m - 1) % m]];
            const auto& b = pts[idx[c]];
            const auto& d = pts[idx[(c + 1) % m]];
            const double turn = orient2d(a, b, d);
            if (turn <= 0.0) continue;
            bool contains = false;
            for (std::size_t q = 0; q < m && !contains; ++q) {
                if (q == c || q == (c + 1) % m || q == (c + m - 1) % m) continue;
                const auto& p = pts[idx[q]];
                contains = orient2d(a, b, p) >= 0 && orient2d(b, d, p) >= 0 && orient2d(d, a, p) >= 0;
            }
            if (contains) continue;
            // Prefer well-shaped ears: smallest angle of the candidate triangle, via normalized area.
            const double e1 = std::hypot(b.x - a.x, b.y - a.y), e2 = std::hypot(d.x - b.x, d.y - b.y),
                         e3 = std::hypot(a.x - d.x, a.y - d.y);
            const double score = turn / (e1 * e1 + e2 * e2 + e3 * e3);
            if (score > best_score) {
                best_score = score;
                best = c;
            }
        }
        if (best == m) best = 0;  // numerically flat remainder: clip anyway
        out.push_back({loop[idx[(best + m - 1) % m]], loop[idx[best]], loop[idx[(best + 1) % m]]});
        idx.erase(idx.begin() + std::ptrdiff_t(best));
    }
    out.push_back({loop[idx[0]], loop[idx[1]], loop[idx[2]]});
}

}  // namespace

TriangleMesh make_watertight(const TriangleMesh& mesh) {
    validate_mesh(mesh);
    std::unordered_set<std::uint64_t> directed;
    std::unordered_map<std::uint64_t, int> undirected;
    directed.reserve(mesh.triangles.size() * 3);
    for (const auto& t : mesh.triangles)
        for (int e = 0; e < 3; ++e) {
            const auto a = t[e], b = t[(e + 1) % 3];
            if (!directed.insert(directed_key(a, b)).second)
                throw InputError("mesh", "non-orientable or inconsistently oriented mesh");
            if (++undirected[directed_key(std::min(a, b), std::max(a, b))] > 2)
                throw InputError("mesh", "non-manifold edge shared by more than two triangles");
        }

    // Each boundary half-edge a->b needs a filling triangle that traverses b->a.
    std::unordered_map<std::uint32_t, std::uint32_t> fill_next;
    for (const auto& t : mesh.triangles)
        for (int e = 0; e < 3; ++e) {
            const auto a = t[e], b = t[(e + 1) % 3];
            if (directed.count(directed_key(b, a))) continue;
            if (!fill_next.emplace(b, a).second)
                throw InputError("mesh", "self-intersecting boundary loop (vertex on two boundary loops)");
        }
    if (fill_next.empty()) return mesh;

    // Deterministic loop order: start from the smallest unvisited vertex id.
    std::vector<std::uint32_t> starts;
    starts.reserve(fill_next.size());
    for (const auto& [v, _] : fill_next) starts.push_back(v);
    std::sort(starts.begin(), starts.end());

    TriangleMesh out = mesh;
    std::unordered_set<std::uint32_t> visited;
    for (auto s : starts) {
        if (visited.count(s)) continue;
        std::vector<std::uint32_t> loop;
        std::uint32_t v = s;
        do {
            if (!visited.insert(v).second) throw InputError("mesh", "boundary is not a set of simple loops");
            loop.push_back(v);
            const auto it = fill_next.find(v);
            if (it == fill_next.end()) throw InputError("mesh", "open boundary chain");
            v = it->second;
        } while (v != s);
        if (loop.size() < 3) throw InputError("mesh", "boundary loop with fewer than three vertices");
        ear_clip(mesh, loop, out.triangles);
    }
    return out;
}

}  // namespace mitoforge
