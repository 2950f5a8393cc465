#include "mitoforge/mesh_query.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mitoforge/error.hpp"

namespace mitoforge {

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) noexcept {
    // Voronoi-region walk (Ericson, Real-Time Collision Detection 5.1.5).
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0 && d2 <= 0) return a;
    const Vec3 bp = p - b;
    const double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0 && d4 <= d3) return b;
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + ab * (d1 / (d1 - d3));
    const Vec3 cp = p - c;
    const double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0 && d5 <= d6) return c;
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + ac * (d2 / (d2 - d6));
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    const double denom = va + vb + vc;
    if (!(denom > 0)) {
        // Degenerate triangle: closest of the three edges.
        auto seg = [&](const Vec3& s, const Vec3& e) {
            const Vec3 se = e - s;
            const double l2 = dot(se, se);
            const double t = l2 > 0 ? std::clamp(dot(p - s, se) / l2, 0.0, 1.0) : 0.0;
            return s + se * t;
        };
        const Vec3 q[3] = {seg(a, b), seg(b, c), seg(c, a)};
        return *std::min_element(q, q + 3, [&](const Vec3& x, const Vec3& y) { return norm2(p - x) < norm2(p - y); });
    }
    const double v = vb / denom, w = vc / denom;
    return a + ab * v + ac * w;
}

MeshQuery::MeshQuery(TriangleMesh mesh) : mesh_(std::move(mesh)) {
    validate_mesh(mesh_);
    if (mesh_.triangles.empty()) throw InputError("mesh", "inside/outside query on an empty mesh");
    const auto audit = audit_edges(mesh_);
    if (!audit.watertight())
        throw InputError("mesh", "inside/outside query requires a watertight mesh (" +
                                     std::to_string(audit.boundary_edges) + " boundary, " +
                                     std::to_string(audit.nonmanifold_edges) + " non-manifold, " +
                                     std::to_string(audit.misoriented_edges) + " misoriented edges)");
    box_ = mesh_.bounds();
    const double diag = box_.diagonal();
    surface_eps_ = 1e-9 * diag;
    orient_eps_ = 1e-13 * diag * diag;
    for (int a = 0; a < 3; ++a) build_grid(a);
}

void MeshQuery::build_grid(int axis) {
    ColumnGrid& g = grids_[axis];
    g.u = (axis + 1) % 3;
    g.v = (axis + 2) % 3;
    const double eu = box_.hi[g.u] - box_.lo[g.u], ev = box_.hi[g.v] - box_.lo[g.v];
    const double target = std::sqrt(double(mesh_.triangles.size()) / 2.0);
    const double longer = std::max({eu, ev, 1e-300});
    g.nu = std::clamp<std::size_t>(std::size_t(std::ceil(target * eu / longer)), 1, 1024);
    g.nv = std::clamp<std::size_t>(std::size_t(std::ceil(target * ev / longer)), 1, 1024);
    g.u0 = box_.lo[g.u];
    g.v0 = box_.lo[g.v];
    g.du = eu > 0 ? eu / double(g.nu) : 1.0;
    g.dv = ev > 0 ? ev / double(g.nv) : 1.0;

    auto cell_range = [&](double lo, double hi, double o, double d, std::size_t n) {
        const auto c0 = std::clamp<std::ptrdiff_t>(std::ptrdiff_t(std::floor((lo - o) / d)), 0, std::ptrdiff_t(n) - 1);
        const auto c1 = std::clamp<std::ptrdiff_t>(std::ptrdiff_t(std::floor((hi - o) / d)), 0, std::ptrdiff_t(n) - 1);
        return std::pair<std::size_t, std::size_t>{std::size_t(c0), std::size_t(c1)};
    };
    std::vector<std::uint32_t> counts(g.nu * g.nv + 1, 0);
    auto visit = [&](auto&& fn) {
        for (std::uint32_t t = 0; t < mesh_.triangles.size(); ++t) {
            const auto& tri = mesh_.triangles[t];
            double ulo = INFINITY, uhi = -INFINITY, vlo = INFINITY, vhi = -INFINITY;
            for (auto id : tri) {
                const auto& p = mesh_.vertices[id];
                ulo = std::min(ulo, p[g.u]), uhi = std::max(uhi, p[g.u]);
                vlo = std::min(vlo, p[g.v]), vhi = std::max(vhi, p[g.v]);
            }
            const auto [iu0, iu1] = cell_range(ulo - surface_eps_, uhi + surface_eps_, g.u0, g.du, g.nu);
            const auto [iv0, iv1] = cell_range(vlo - surface_eps_, vhi + surface_eps_, g.v0, g.dv, g.nv);
            for (std::size_t iv = iv0; iv <= iv1; ++iv)
                for (std::size_t iu = iu0; iu <= iu1; ++iu) fn(iv * g.nu + iu, t);
        }
    };
    visit([&](std::size_t cell, std::uint32_t) { ++counts[cell + 1]; });
    for (std::size_t c = 1; c < counts.size(); ++c) counts[c] += counts[c - 1];
    g.start = counts;
    g.tris.resize(counts.back());
    visit([&](std::size_t cell, std::uint32_t t) { g.tris[counts[cell]++] = t; });
}

MeshQuery::Cast MeshQuery::cast(int axis, const Vec3& p) const {
    const ColumnGrid& g = grids_[axis];
    const double pu = p[g.u], pv = p[g.v], pa = p[axis];
    const auto iu = std::size_t(std::clamp<std::ptrdiff_t>(std::ptrdiff_t(std::floor((pu - g.u0) / g.du)), 0,
                                                          std::ptrdiff_t(g.nu) - 1));
    const auto iv = std::size_t(std::clamp<std::ptrdiff_t>(std::ptrdiff_t(std::floor((pv - g.v0) / g.dv)), 0,
                                                          std::ptrdiff_t(g.nv) - 1));
    const std::size_t cell = iv * g.nu + iu;
    bool degenerate = false;
    std::size_t crossings = 0;
    for (std::uint32_t s = g.start[cell]; s < g.start[cell + 1]; ++s) {
        const auto& tri = mesh_.triangles[g.tris[s]];
        const Vec3& A = mesh_.vertices[tri[0]];
        const Vec3& B = mesh_.vertices[tri[1]];
        const Vec3& C = mesh_.vertices[tri[2]];
        const double au = A[g.u] - pu, av = A[g.v] - pv;
        const double bu = B[g.u] - pu, bv = B[g.v] - pv;
        const double cu = C[g.u] - pu, cv = C[g.v] - pv;
        // Signed doubled areas of the sub-triangles opposite each vertex.
        double w0 = bu * cv - bv * cu;
        double w1 = cu * av - cv * au;
        double w2 = au * bv - av * bu;
        double area = w0 + w1 + w2;
        if (std::fabs(area) <= orient_eps_) {
            // Edge-on triangle: only relevant if p lies on it.
            if (point_triangle_distance(p, A, B, C) <= surface_eps_) return Cast::OnSurface;
            continue;
        }
        if (area < 0) w0 = -w0, w1 = -w1, w2 = -w2, area = -area;
        if (w0 < -orient_eps_ || w1 < -orient_eps_ || w2 < -orient_eps_) continue;
        const double hit = (w0 * A[axis] + w1 * B[axis] + w2 * C[axis]) / area;
        if (std::fabs(hit - pa) <= surface_eps_) return Cast::OnSurface;
        if (hit < pa) continue;
        const bool interior = w0 > orient_eps_ && w1 > orient_eps_ && w2 > orient_eps_;
        if (interior) ++crossings;
        else degenerate = true;
    }
    if (degenerate) return Cast::Degenerate;
    return (crossings & 1) ? Cast::Inside : Cast::Outside;
}

bool MeshQuery::contains(const Vec3& p) const {
    if (p.x < box_.lo.x - surface_eps_ || p.y < box_.lo.y - surface_eps_ || p.z < box_.lo.z - surface_eps_ ||
        p.x > box_.hi.x + surface_eps_ || p.y > box_.hi.y + surface_eps_ || p.z > box_.hi.z + surface_eps_)
        return false;
    for (int axis : {2, 0, 1}) {
        switch (cast(axis, p)) {
            case Cast::Inside: return true;
            case Cast::Outside: return false;
            case Cast::OnSurface: return true;
            case Cast::Degenerate: break;
        }
    }
    if (distance(p) <= surface_eps_) return true;
    return winding_number(p) >= 0.5;
}

double MeshQuery::winding_number(const Vec3& p) const {
    double total = 0.0;
    for (const auto& t : mesh_.triangles) {
        const Vec3 a = mesh_.vertices[t[0]] - p, b = mesh_.vertices[t[1]] - p, c = mesh_.vertices[t[2]] - p;
        const double la = norm(a), lb = norm(b), lc = norm(c);
        const double num = dot(a, cross(b, c));
        const double den = la * lb * lc + dot(a, b) * lc + dot(b, c) * la + dot(c, a) * lb;
        total += 2.0 * std::atan2(num, den);
    }
    return total / (4.0 * std::numbers::pi);
}

double MeshQuery::distance(const Vec3& p) const {
    double best = INFINITY;
    for (const auto& t : mesh_.triangles)
        best = std::min(best, point_triangle_distance(p, mesh_.vertices[t[0]], mesh_.vertices[t[1]], mesh_.vertices[t[2]]));
    return best;
}

bool point_in_mesh(const TriangleMesh& mesh, const Vec3& p) { return MeshQuery(mesh).contains(p); }

}  // namespace mitoforge
