#include <algorithm>
#include <numeric>
#include <vector>

#include "mitoforge/error.hpp"
#include "mitoforge/volume.hpp"

namespace mitoforge {

namespace {

struct DisjointSet {
    std::vector<std::uint32_t> parent;

    explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0u); }

    std::uint32_t find(std::uint32_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::uint32_t a, std::uint32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        // Lower index becomes the root so roots are first-in-storage-order voxels.
        if (a < b) parent[b] = a;
        else parent[a] = b;
    }
};

struct Offset {
    int dx, dy, dz;
};

// Neighbours that precede the current voxel in storage order (z, then y, then x slowest-to-fastest).
std::vector<Offset> backward_neighbours(int connectivity) {
    std::vector<Offset> out;
    for (int dz = -1; dz <= 0; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dz == 0 && (dy > 0 || (dy == 0 && dx >= 0))) continue;
                const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
                if (connectivity == 6 && manhattan > 1) continue;
                if (connectivity == 18 && manhattan > 2) continue;
                out.push_back({dx, dy, dz});
            }
    return out;
}

}  // namespace

LabeledVolume connected_components(const VoxelVolume& binary, int connectivity) {
    if (connectivity != 6 && connectivity != 18 && connectivity != 26)
        throw ConfigError("volume", "connectivity must be 6, 18 or 26");
    if (!binary.is_binary()) throw InputError("volume", "connected components requires a binary volume");
    const auto& d = binary.dims();
    if (binary.size() >= 0xffffffffULL) throw InputError("volume", "volume too large for 32-bit labelling");

    DisjointSet sets(binary.size());
    const auto nbrs = backward_neighbours(connectivity);
    const auto& data = binary.data();
    for (std::size_t k = 0; k < d[2]; ++k)
        for (std::size_t j = 0; j < d[1]; ++j)
            for (std::size_t i = 0; i < d[0]; ++i) {
                const auto idx = binary.index(i, j, k);
                if (!data[idx]) continue;
                for (const auto& o : nbrs) {
                    const auto ni = std::ptrdiff_t(i) + o.dx, nj = std::ptrdiff_t(j) + o.dy,
                               nk = std::ptrdiff_t(k) + o.dz;
                    if (ni < 0 || nj < 0 || nk < 0 || ni >= std::ptrdiff_t(d[0]) || nj >= std::ptrdiff_t(d[1]))
                        continue;
                    const auto nidx = binary.index(std::size_t(ni), std::size_t(nj), std::size_t(nk));
                    if (data[nidx]) sets.unite(std::uint32_t(idx), std::uint32_t(nidx));
                }
            }

    // Gather per-root statistics in storage order.
    struct Comp {
        std::uint32_t root;
        InstanceIndex index;
    };
    std::vector<Comp> comps;
    std::vector<std::uint32_t> slot(binary.size(), 0xffffffffu);
    for (std::size_t k = 0; k < d[2]; ++k)
        for (std::size_t j = 0; j < d[1]; ++j)
            for (std::size_t i = 0; i < d[0]; ++i) {
                const auto idx = binary.index(i, j, k);
                if (!data[idx]) continue;
                const auto root = sets.find(std::uint32_t(idx));
                if (slot[root] == 0xffffffffu) {
                    slot[root] = std::uint32_t(comps.size());
                    comps.push_back({root, InstanceIndex{0, 0, {i, j, k}, {i, j, k}}});
                }
                auto& ix = comps[slot[root]].index;
                ++ix.voxel_count;
                const std::size_t p[3] = {i, j, k};
                for (int a = 0; a < 3; ++a) {
                    ix.bbox_min[a] = std::min(ix.bbox_min[a], p[a]);
                    ix.bbox_max[a] = std::max(ix.bbox_max[a], p[a]);
                }
            }

    // Descending size; stable keeps first-encountered order among equal sizes.
    std::stable_sort(comps.begin(), comps.end(),
                     [](const Comp& a, const Comp& b) { return a.index.voxel_count > b.index.voxel_count; });

    std::vector<std::uint32_t> label_of_slot(comps.size());
    LabeledVolume out{VoxelVolume(binary.dims(), binary.voxel_size(), binary.origin()), {}};
    out.instances.reserve(comps.size());
    for (std::size_t c = 0; c < comps.size(); ++c) {
        comps[c].index.instance_id = std::uint32_t(c + 1);
        label_of_slot[slot[comps[c].root]] = std::uint32_t(c + 1);
        out.instances.push_back(comps[c].index);
    }
    auto& labels = out.labels.data();
    for (std::size_t idx = 0; idx < data.size(); ++idx)
        if (data[idx]) labels[idx] = label_of_slot[slot[sets.find(std::uint32_t(idx))]];
    return out;
}

LabeledVolume filter_small_components(const LabeledVolume& labeled, std::size_t min_voxels) {
    std::vector<std::uint32_t> remap(labeled.instances.size() + 1, 0u);
    LabeledVolume out{VoxelVolume(labeled.labels.dims(), labeled.labels.voxel_size(), labeled.labels.origin()), {}};
    for (const auto& ix : labeled.instances) {
        if (ix.voxel_count < min_voxels) continue;
        auto kept = ix;
        kept.instance_id = std::uint32_t(out.instances.size() + 1);
        remap.at(ix.instance_id) = kept.instance_id;
        out.instances.push_back(kept);
    }
    const auto& src = labeled.labels.data();
    auto& dst = out.labels.data();
    for (std::size_t i = 0; i < src.size(); ++i)
        if (src[i]) dst[i] = remap.at(src[i]);
    return out;
}

}  // namespace mitoforge
