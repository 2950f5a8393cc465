#include <cmath>
#include <cstdio>
#include <cstring>

#include "mitoforge/error.hpp"
#include "mitoforge/io_util.hpp"
#include "mitoforge/microscope.hpp"

namespace mitoforge {

namespace {

std::vector<std::uint8_t> pgm_header(std::size_t w, std::size_t h, unsigned maxval) {
    const std::string s = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n" + std::to_string(maxval) + "\n";
    return {s.begin(), s.end()};
}

}  // namespace

std::vector<std::uint8_t> encode_pgm16(const Image2D& image) {
    auto out = pgm_header(image.width, image.height, 65535);
    out.reserve(out.size() + image.data.size() * 2);
    for (double v : image.data) {
        const double c = std::clamp(std::round(v), 0.0, 65535.0);
        const auto u = static_cast<std::uint16_t>(c);
        out.push_back(std::uint8_t(u >> 8));  // PGM is big-endian
        out.push_back(std::uint8_t(u & 0xff));
    }
    return out;
}

std::vector<std::uint8_t> encode_pgm8_mask(const Image2D& mask) {
    auto out = pgm_header(mask.width, mask.height, 255);
    for (double v : mask.data) out.push_back(v != 0.0 ? 255 : 0);
    return out;
}

void write_pgm16(const std::filesystem::path& path, const Image2D& image) { io::write_file(path, encode_pgm16(image)); }

void write_pgm8_mask(const std::filesystem::path& path, const Image2D& mask) {
    io::write_file(path, encode_pgm8_mask(mask));
}

Image2D read_pgm(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    std::size_t pos = 0;
    auto fail = [&](const std::string& what) -> void {
        throw InputError("microscope", "PGM '" + path.string() + "': " + what);
    };
    auto token = [&]() {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        std::string t;
        while (pos < bytes.size() && !std::isspace(bytes[pos])) t.push_back(char(bytes[pos++]));
        return t;
    };
    if (token() != "P5") fail("not a binary PGM (P5)");
    std::size_t w = 0, h = 0;
    unsigned long maxval = 0;
    try {
        w = std::stoul(token());
        h = std::stoul(token());
        maxval = std::stoul(token());
    } catch (const std::exception&) {
        fail("malformed header");
    }
    if (w == 0 || h == 0 || maxval == 0 || maxval > 65535) fail("invalid dimensions or maxval");
    ++pos;  // single whitespace after maxval
    const std::size_t bpp = maxval > 255 ? 2 : 1;
    if (bytes.size() < pos || bytes.size() - pos != w * h * bpp) fail("pixel data size does not match header");
    Image2D img(w, h);
    for (std::size_t k = 0; k < w * h; ++k)
        img.data[k] = bpp == 2 ? double((unsigned(bytes[pos + 2 * k]) << 8) | bytes[pos + 2 * k + 1]) : double(bytes[pos + k]);
    return img;
}

void write_float_raw(const std::filesystem::path& path, const Image2D& image, double pixel_size_nm) {
    io::ByteWriter w;
    for (double v : image.data) w.f32(float(v));
    io::write_file(path, w.buffer());
    const nlohmann::json header{{"width", image.width},
                                {"height", image.height},
                                {"pixel_size_nm", pixel_size_nm},
                                {"dtype", "float32"},
                                {"byte_order", "little"},
                                {"layout", "row-major, x fastest"}};
    io::write_text(path.string() + ".json", header.dump(2) + "\n");
}

Image2D read_float_raw(const std::filesystem::path& path) {
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(io::read_text(path.string() + ".json"));
    } catch (const nlohmann::json::exception& e) {
        throw InputError("microscope", "raster header for '" + path.string() + "': " + e.what());
    }
    const auto w = header.value("width", std::size_t(0)), h = header.value("height", std::size_t(0));
    const auto bytes = io::read_file(path);
    if (w == 0 || h == 0 || bytes.size() != w * h * 4)
        throw InputError("microscope", "raster '" + path.string() + "' does not match its header");
    io::ByteReader r(bytes, path.string());
    Image2D img(w, h);
    for (auto& v : img.data) v = r.f32();
    return img;
}

std::vector<std::filesystem::path> write_stack(const std::filesystem::path& dir, const std::string& stem,
                                               const ImageStack& stack) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    nlohmann::json files = nlohmann::json::array();
    for (std::size_t k = 0; k < stack.slices.size(); ++k) {
        const auto name = stem + "_z" + std::to_string(k) + (stack.noisy ? ".pgm" : ".f32");
        const auto path = dir / name;
        if (stack.noisy) {
            write_pgm16(path, stack.slices[k]);
        } else {
            write_float_raw(path, stack.slices[k], stack.pixel_size_nm);
            written.push_back(path.string() + ".json");
        }
        written.push_back(path);
        files.push_back({{"file", name}, {"z_offset_nm", stack.z_offsets[k]}});
    }
    nlohmann::json manifest{{"width", stack.width},
                            {"height", stack.height},
                            {"pixel_size_nm", stack.pixel_size_nm},
                            {"z_offsets_nm", stack.z_offsets},
                            {"noisy", stack.noisy},
                            {"slices", files}};
    if (stack.seed) manifest["seed"] = *stack.seed;
    const auto mpath = dir / (stem + ".json");
    io::write_text(mpath, manifest.dump(2) + "\n");
    written.push_back(mpath);
    return written;
}

}  // namespace mitoforge
