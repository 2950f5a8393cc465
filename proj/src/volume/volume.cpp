#include "mitoforge/volume.hpp"

#include <algorithm>
#include <cstring>
#include <limits>

#include <json.hpp>

#include "mitoforge/error.hpp"
#include "mitoforge/io_util.hpp"

namespace mitoforge {

namespace {

std::filesystem::path sidecar_of(const std::filesystem::path& raw) {
    auto p = raw;
    p += ".json";
    return p;
}

}  // namespace

void VolumeHeader::validate() const {
    for (auto d : dims)
        if (d < 1) throw InputError("volume", "volume dimensions must be >= 1");
    if (!(voxel_size_nm > 0.0) || !std::isfinite(voxel_size_nm))
        throw InputError("volume", "voxel size must be positive");
    if (element_bits != 8 && element_bits != 16 && element_bits != 32)
        throw InputError("volume", "element width must be 8, 16 or 32 bits");
    if (!is_finite(origin_nm)) throw InputError("volume", "origin must be finite");
    const auto max = std::numeric_limits<std::uint64_t>::max() / 4;
    if (dims[0] > max / dims[1] || dims[0] * dims[1] > max / dims[2])
        throw InputError("volume", "volume dimensions overflow");
}

std::uint64_t VolumeHeader::voxel_count() const noexcept {
    return std::uint64_t(dims[0]) * dims[1] * dims[2];
}

std::uint64_t VolumeHeader::byte_size() const noexcept { return voxel_count() * (element_bits / 8); }

VolumeHeader read_volume_header(const std::filesystem::path& json_path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io::read_text(json_path));
    } catch (const nlohmann::json::exception& e) {
        throw InputError("volume", "malformed volume header '" + json_path.string() + "': " + e.what());
    }
    VolumeHeader h;
    try {
        auto d = j.at("dims").get<std::vector<std::size_t>>();
        if (d.size() != 3) throw InputError("volume", "dims must have three entries");
        h.dims = {d[0], d[1], d[2]};
        h.voxel_size_nm = j.at("voxel_size_nm").get<double>();
        h.element_bits = j.value("element_bits", 8u);
        if (j.contains("origin_nm")) {
            auto o = j.at("origin_nm").get<std::vector<double>>();
            if (o.size() != 3) throw InputError("volume", "origin_nm must have three entries");
            h.origin_nm = {o[0], o[1], o[2]};
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError("volume", "invalid volume header '" + json_path.string() + "': " + e.what());
    }
    h.validate();
    return h;
}

void write_volume_header(const std::filesystem::path& json_path, const VolumeHeader& h) {
    nlohmann::json j{{"dims", {h.dims[0], h.dims[1], h.dims[2]}},
                     {"voxel_size_nm", h.voxel_size_nm},
                     {"element_bits", h.element_bits},
                     {"origin_nm", {h.origin_nm.x, h.origin_nm.y, h.origin_nm.z}}};
    io::write_text(json_path, j.dump(2) + "\n");
}

VoxelVolume::VoxelVolume(Dims dims, double voxel_size_nm, Vec3 origin_nm)
    : VoxelVolume(dims, voxel_size_nm, origin_nm, std::vector<std::uint32_t>(dims[0] * dims[1] * dims[2], 0u)) {}

VoxelVolume::VoxelVolume(Dims dims, double voxel_size_nm, Vec3 origin_nm, std::vector<std::uint32_t> data)
    : dims_(dims), voxel_size_(voxel_size_nm), origin_(origin_nm), data_(std::move(data)) {
    VolumeHeader{dims, voxel_size_nm, 32, origin_nm}.validate();
    if (data_.size() != dims[0] * dims[1] * dims[2])
        throw InputError("volume", "voxel data length does not match dimensions");
}

bool VoxelVolume::is_binary() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](std::uint32_t v) { return v <= 1; });
}

std::size_t VoxelVolume::count_nonzero() const noexcept {
    return static_cast<std::size_t>(std::count_if(data_.begin(), data_.end(), [](std::uint32_t v) { return v != 0; }));
}

VoxelVolume load_volume(const std::filesystem::path& raw_path, const VolumeHeader& header) {
    header.validate();
    std::error_code ec;
    const auto fsize = std::filesystem::file_size(raw_path, ec);
    if (ec) throw InputError("volume", "cannot read '" + raw_path.string() + "': " + ec.message());
    if (fsize != header.byte_size())
        throw InputError("volume", "size mismatch: '" + raw_path.string() + "' holds " + std::to_string(fsize) +
                                       " bytes, header declares " + std::to_string(header.byte_size()));
    const auto bytes = io::read_file(raw_path);
    if (bytes.size() != header.byte_size()) throw InputError("volume", "short read on '" + raw_path.string() + "'");

    std::vector<std::uint32_t> data(header.voxel_count());
    const std::size_t width = header.element_bits / 8;
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::uint32_t v = 0;
        std::memcpy(&v, bytes.data() + i * width, width);  // little-endian host
        data[i] = v;
    }
    return VoxelVolume(header.dims, header.voxel_size_nm, header.origin_nm, std::move(data));
}

VoxelVolume load_volume(const std::filesystem::path& raw_path) {
    return load_volume(raw_path, read_volume_header(sidecar_of(raw_path)));
}

void save_volume(const std::filesystem::path& raw_path, const VoxelVolume& vol, unsigned element_bits) {
    VolumeHeader h{vol.dims(), vol.voxel_size(), element_bits, vol.origin()};
    h.validate();
    const std::size_t width = element_bits / 8;
    const std::uint64_t limit = element_bits == 32 ? 0xffffffffULL : ((1ULL << element_bits) - 1);
    std::vector<std::uint8_t> bytes(vol.size() * width);
    for (std::size_t i = 0; i < vol.size(); ++i) {
        const std::uint32_t v = vol.data()[i];
        if (v > limit) throw InputError("volume", "value does not fit the requested element width");
        std::memcpy(bytes.data() + i * width, &v, width);
    }
    io::write_file(raw_path, bytes);
    write_volume_header(sidecar_of(raw_path), h);
}

VoxelVolume downsample(const VoxelVolume& vol, std::size_t factor) {
    if (factor < 1) throw ConfigError("volume", "downsample factor must be >= 1");
    if (factor == 1) return vol;
    const auto& d = vol.dims();
    const Dims out{(d[0] + factor - 1) / factor, (d[1] + factor - 1) / factor, (d[2] + factor - 1) / factor};
    // Output voxel (I,J,K) covers input voxels [I*f, min((I+1)*f, n)); its centre moves by (f-1)/2 voxels.
    const Vec3 shift = Vec3{1, 1, 1} * (0.5 * double(factor - 1) * vol.voxel_size());
    VoxelVolume res(out, vol.voxel_size() * double(factor), vol.origin() + shift);
    for (std::size_t K = 0; K < out[2]; ++K)
        for (std::size_t J = 0; J < out[1]; ++J)
            for (std::size_t I = 0; I < out[0]; ++I) {
                std::size_t fg = 0, total = 0;
                for (std::size_t k = K * factor; k < std::min((K + 1) * factor, d[2]); ++k)
                    for (std::size_t j = J * factor; j < std::min((J + 1) * factor, d[1]); ++j)
                        for (std::size_t i = I * factor; i < std::min((I + 1) * factor, d[0]); ++i) {
                            ++total;
                            fg += vol.at(i, j, k) != 0;
                        }
                res.at(I, J, K) = (2 * fg >= total) ? 1u : 0u;
            }
    return res;
}

VoxelVolume extract_instance(const LabeledVolume& labeled, std::uint32_t id, std::size_t pad) {
    const auto it = std::find_if(labeled.instances.begin(), labeled.instances.end(),
                                 [id](const InstanceIndex& ix) { return ix.instance_id == id; });
    if (it == labeled.instances.end()) throw InputError("volume", "unknown instance id " + std::to_string(id));
    const auto& src = labeled.labels;
    Dims out{};
    for (int a = 0; a < 3; ++a) out[a] = it->bbox_max[a] - it->bbox_min[a] + 1 + 2 * pad;
    const Vec3 origin = src.origin() + Vec3{double(it->bbox_min[0]) - double(pad), double(it->bbox_min[1]) - double(pad),
                                            double(it->bbox_min[2]) - double(pad)} *
                                           src.voxel_size();
    VoxelVolume res(out, src.voxel_size(), origin);
    for (std::size_t k = it->bbox_min[2]; k <= it->bbox_max[2]; ++k)
        for (std::size_t j = it->bbox_min[1]; j <= it->bbox_max[1]; ++j)
            for (std::size_t i = it->bbox_min[0]; i <= it->bbox_max[0]; ++i)
                if (src.at(i, j, k) == id)
                    res.at(i - it->bbox_min[0] + pad, j - it->bbox_min[1] + pad, k - it->bbox_min[2] + pad) = 1u;
    return res;
}

}  // namespace mitoforge
