#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mitoforge/vec3.hpp"

namespace mitoforge {

/// Static 3D kd-tree with exact nearest-neighbour queries.
class KdTree {
public:
    explicit KdTree(std::span<const Vec3> points);

    struct Hit {
        std::size_t index = 0;
        double distance = 0.0;
    };
    /// Throws InputError on an empty tree.
    Hit nearest(const Vec3& q) const;
    std::size_t size() const noexcept { return points_.size(); }

private:
    struct Node {
        std::uint32_t begin = 0, end = 0;  // range in order_ for leaves
        std::int32_t left = -1, right = -1;
        int axis = -1;                     // -1 for leaves
        double split = 0.0;
    };

    std::int32_t build(std::uint32_t begin, std::uint32_t end);
    void search(std::int32_t node, const Vec3& q, Hit& best, double& best2) const;

    std::vector<Vec3> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
};

}  // namespace mitoforge
