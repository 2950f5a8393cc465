#include <algorithm>
#include <cmath>

#include "mitoforge/error.hpp"
#include "mitoforge/mesh.hpp"

namespace mitoforge {

Aabb TriangleMesh::bounds() const noexcept {
    Aabb box;
    for (const auto& v : vertices) box.expand(v);
    return box;
}

void validate_mesh(const TriangleMesh& mesh) {
    for (const auto& v : mesh.vertices)
        if (!is_finite(v)) throw InputError("mesh", "non-finite vertex coordinate");
    const auto n = mesh.vertices.size();
    for (const auto& t : mesh.triangles) {
        if (t[0] >= n || t[1] >= n || t[2] >= n) throw InputError("mesh", "triangle index out of range");
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) throw InputError("mesh", "triangle repeats a vertex");
    }
}

EdgeAudit audit_edges(const TriangleMesh& mesh) {
    struct HalfEdge {
        std::uint64_t key;  // (min << 32) | max
        bool forward;       // traversed min -> max
    };
    std::vector<HalfEdge> edges;
    edges.reserve(mesh.triangles.size() * 3);
    for (const auto& t : mesh.triangles)
        for (int e = 0; e < 3; ++e) {
            const std::uint32_t a = t[e], b = t[(e + 1) % 3];
            const auto lo = std::min(a, b), hi = std::max(a, b);
            edges.push_back({(std::uint64_t(lo) << 32) | hi, a < b});
        }
    std::sort(edges.begin(), edges.end(), [](const HalfEdge& x, const HalfEdge& y) { return x.key < y.key; });

    EdgeAudit audit;
    for (std::size_t i = 0; i < edges.size();) {
        std::size_t j = i;
        int fwd = 0;
        while (j < edges.size() && edges[j].key == edges[i].key) fwd += edges[j++].forward;
        const std::size_t count = j - i;
        if (count == 1) ++audit.boundary_edges;
        else if (count > 2) ++audit.nonmanifold_edges;
        else if (fwd != 1) ++audit.misoriented_edges;
        i = j;
    }
    return audit;
}

double surface_area(const TriangleMesh& mesh) {
    double area = 0.0;
    for (const auto& t : mesh.triangles) {
        const auto& a = mesh.vertices[t[0]];
        area += 0.5 * norm(cross(mesh.vertices[t[1]] - a, mesh.vertices[t[2]] - a));
    }
    return area;
}

double mesh_volume(const TriangleMesh& mesh) {
    if (!is_watertight(mesh)) throw InputError("mesh", "volume requires a watertight mesh");
    // Reference point at the bbox centre keeps the per-tetrahedron terms small.
    const Vec3 ref = mesh.bounds().center();
    double six_v = 0.0;
    for (const auto& t : mesh.triangles) {
        const Vec3 a = mesh.vertices[t[0]] - ref, b = mesh.vertices[t[1]] - ref, c = mesh.vertices[t[2]] - ref;
        six_v += dot(a, cross(b, c));
    }
    return six_v / 6.0;
}

TriangleMesh flip_orientation(TriangleMesh mesh) {
    for (auto& t : mesh.triangles) std::swap(t[1], t[2]);
    return mesh;
}

TriangleMesh translate(TriangleMesh mesh, const Vec3& offset) {
    for (auto& v : mesh.vertices) v += offset;
    return mesh;
}

TriangleMesh scale(TriangleMesh mesh, double factor) {
    for (auto& v : mesh.vertices) v *= factor;
    return mesh;
}

NormalizedMesh normalize_unit_cube(const TriangleMesh& mesh) {
    validate_mesh(mesh);
    const Aabb box = mesh.bounds();
    if (box.empty()) throw InputError("mesh", "cannot normalize an empty mesh");
    const Vec3 ext = box.extent();
    const double longest = std::max({ext.x, ext.y, ext.z});
    if (!(longest > 0.0)) throw InputError("mesh", "cannot normalize a zero-extent bounding box");
    NormalizedMesh out;
    out.record.scale = 1.0 / longest;
    out.record.translation = box.center();
    out.mesh = mesh;
    for (auto& v : out.mesh.vertices) v = out.record.apply(v);
    return out;
}

TriangleMesh denormalize(const TriangleMesh& mesh, const NormalizationRecord& record) {
    if (!(record.scale > 0.0)) throw InputError("mesh", "normalization scale must be positive");
    TriangleMesh out = mesh;
    for (auto& v : out.vertices) v = record.invert(v);
    return out;
}

std::array<std::array<double, 3>, 3> rotation_matrix(double alpha, double beta, double gamma) {
    using M = std::array<std::array<double, 3>, 3>;
    const double ca = std::cos(alpha), sa = std::sin(alpha);
    const double cb = std::cos(beta), sb = std::sin(beta);
    const double cg = std::cos(gamma), sg = std::sin(gamma);
    const M rx{{{1, 0, 0}, {0, ca, -sa}, {0, sa, ca}}};
    const M ry{{{cb, 0, sb}, {0, 1, 0}, {-sb, 0, cb}}};
    const M rz{{{cg, -sg, 0}, {sg, cg, 0}, {0, 0, 1}}};
    auto mul = [](const M& a, const M& b) {
        M c{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
        return c;
    };
    return mul(rz, mul(ry, rx));
}

std::vector<Vec3> rotate(std::span<const Vec3> points, double alpha, double beta, double gamma, const Vec3& origin) {
    const auto r = rotation_matrix(alpha, beta, gamma);
    std::vector<Vec3> out;
    out.reserve(points.size());
    for (const auto& p : points) {
        const Vec3 q = p - origin;
        out.push_back(origin + Vec3{r[0][0] * q.x + r[0][1] * q.y + r[0][2] * q.z,
                                    r[1][0] * q.x + r[1][1] * q.y + r[1][2] * q.z,
                                    r[2][0] * q.x + r[2][1] * q.y + r[2][2] * q.z});
    }
    return out;
}

Vec3 centroid(std::span<const Vec3> points) {
    if (points.empty()) return {};
    Vec3 s{};
    for (const auto& p : points) s += p;
    return s * (1.0 / double(points.size()));
}

}  // namespace mitoforge
