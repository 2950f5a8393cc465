#include "mitoforge/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mitoforge/error.hpp"

namespace mitoforge {

namespace {
constexpr std::uint32_t kLeafSize = 8;
}

KdTree::KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()), order_(points.size()) {
    if (points.size() >= std::numeric_limits<std::uint32_t>::max())
        throw InputError("metrics", "too many points for the spatial index");
    std::iota(order_.begin(), order_.end(), 0u);
    if (!points_.empty()) build(0, std::uint32_t(points_.size()));
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
    const auto id = std::int32_t(nodes_.size());
    nodes_.push_back({begin, end, -1, -1, -1, 0.0});
    if (end - begin <= kLeafSize) return id;

    // split on the axis of largest extent
    Aabb box;
    for (auto k = begin; k < end; ++k) box.expand(points_[order_[k]]);
    const Vec3 ext = box.extent();
    int axis = 0;
    if (ext.y > ext[axis]) axis = 1;
    if (ext.z > ext[axis]) axis = 2;

    const auto mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
    const double split = points_[order_[mid]][axis];
    const auto left = build(begin, mid);
    const auto right = build(mid, end);
    auto& n = nodes_[std::size_t(id)];
    n.axis = axis;
    n.split = split;
    n.left = left;
    n.right = right;
    return id;
}

void KdTree::search(std::int32_t id, const Vec3& q, Hit& best, double& best2) const {
    const auto& n = nodes_[std::size_t(id)];
    if (n.axis < 0) {
        for (auto k = n.begin; k < n.end; ++k) {
            const auto idx = order_[k];
            const double d2 = norm2(points_[idx] - q);
            if (d2 < best2 || (d2 == best2 && idx < best.index)) {
                best2 = d2;
                best.index = idx;
            }
        }
        return;
    }
    const double diff = q[n.axis] - n.split;
    const auto near = diff < 0 ? n.left : n.right;
    const auto far = diff < 0 ? n.right : n.left;
    search(near, q, best, best2);
    if (diff * diff <= best2) search(far, q, best, best2);
}

KdTree::Hit KdTree::nearest(const Vec3& q) const {
    if (points_.empty()) throw InputError("metrics", "nearest-neighbour query on an empty point set");
    Hit best{std::numeric_limits<std::size_t>::max(), 0.0};
    double best2 = std::numeric_limits<double>::infinity();
    search(0, q, best, best2);
    best.distance = std::sqrt(best2);
    return best;
}

}  // namespace mitoforge
