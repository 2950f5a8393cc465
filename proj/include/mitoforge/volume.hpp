#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "mitoforge/vec3.hpp"

namespace mitoforge {

using Dims = std::array<std::size_t, 3>;

/// Header describing a raw volume file on disk (the JSON sidecar).
struct VolumeHeader {
    Dims dims{0, 0, 0};
    double voxel_size_nm = 0.0;
    unsigned element_bits = 8;  // 8, 16 or 32
    Vec3 origin_nm{};

    /// Throws ConfigError if geometry or element width is invalid. Does not touch the disk.
    void validate() const;
    std::uint64_t voxel_count() const noexcept;
    std::uint64_t byte_size() const noexcept;
};

VolumeHeader read_volume_header(const std::filesystem::path& json_path);
void write_volume_header(const std::filesystem::path& json_path, const VolumeHeader& header);

/// Binary mask or instance labelling on an isotropic grid. Voxel (i, j, k) sits at
/// origin + (i, j, k) * voxel_size; x varies fastest in storage.
class VoxelVolume {
public:
    VoxelVolume() = default;
    VoxelVolume(Dims dims, double voxel_size_nm, Vec3 origin_nm = {});
    VoxelVolume(Dims dims, double voxel_size_nm, Vec3 origin_nm, std::vector<std::uint32_t> data);

    const Dims& dims() const noexcept { return dims_; }
    double voxel_size() const noexcept { return voxel_size_; }
    const Vec3& origin() const noexcept { return origin_; }
    std::size_t size() const noexcept { return data_.size(); }

    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const noexcept {
        return i + dims_[0] * (j + dims_[1] * k);
    }
    std::uint32_t at(std::size_t i, std::size_t j, std::size_t k) const noexcept { return data_[index(i, j, k)]; }
    std::uint32_t& at(std::size_t i, std::size_t j, std::size_t k) noexcept { return data_[index(i, j, k)]; }
    Vec3 position(std::size_t i, std::size_t j, std::size_t k) const noexcept {
        return origin_ + Vec3{double(i), double(j), double(k)} * voxel_size_;
    }

    const std::vector<std::uint32_t>& data() const noexcept { return data_; }
    std::vector<std::uint32_t>& data() noexcept { return data_; }

    bool is_binary() const noexcept;
    std::size_t count_nonzero() const noexcept;

    friend bool operator==(const VoxelVolume&, const VoxelVolume&) = default;

private:
    Dims dims_{0, 0, 0};
    double voxel_size_ = 1.0;
    Vec3 origin_{};
    std::vector<std::uint32_t> data_;
};

/// Catalog entry for one connected component. Bounding box is inclusive.
struct InstanceIndex {
    std::uint32_t instance_id = 0;
    std::size_t voxel_count = 0;
    std::array<std::size_t, 3> bbox_min{};
    std::array<std::size_t, 3> bbox_max{};
};

struct LabeledVolume {
    VoxelVolume labels;
    std::vector<InstanceIndex> instances;  // ordered by id, i.e. by descending size
};

VoxelVolume load_volume(const std::filesystem::path& raw_path, const VolumeHeader& header);
/// Header is taken from the sidecar at raw_path + ".json".
VoxelVolume load_volume(const std::filesystem::path& raw_path);
/// Writes the raw file plus its ".json" sidecar.
void save_volume(const std::filesystem::path& raw_path, const VoxelVolume& vol, unsigned element_bits = 32);

/// Block-majority downsampling of the foreground (nonzero) set; ties count as foreground.
VoxelVolume downsample(const VoxelVolume& vol, std::size_t factor);

/// Labels 1..K in descending voxel-count order (ties: first voxel in storage order wins).
LabeledVolume connected_components(const VoxelVolume& binary, int connectivity = 26);

/// Drops components below min_voxels and relabels the rest 1..K', preserving order.
LabeledVolume filter_small_components(const LabeledVolume& labeled, std::size_t min_voxels = 27);

/// Binary mask of one instance cropped to its bounding box plus `pad` background voxels per
/// side; the origin is shifted so every voxel keeps its physical position.
VoxelVolume extract_instance(const LabeledVolume& labeled, std::uint32_t id, std::size_t pad = 1);

}  // namespace mitoforge
