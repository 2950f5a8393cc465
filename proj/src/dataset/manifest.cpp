#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "mitoforge/datasetgen.hpp"
#include "mitoforge/error.hpp"
#include "mitoforge/io_util.hpp"
#include "mitoforge/rng.hpp"

namespace mitoforge {

nlohmann::json to_json(const GenerationManifest& m) {
    nlohmann::json items = nlohmann::json::array();
    for (const auto& it : m.items) {
        nlohmann::json files = nlohmann::json::array();
        for (const auto& f : it.files) files.push_back({{"path", f.path}, {"crc32", f.crc32}, {"bytes", f.bytes}});
        nlohmann::json rec{{"index", it.index},   {"seed", it.seed},     {"shapes", it.shape_ids},
                           {"rotations", it.rotations}, {"files", files}, {"details", it.details}};
        if (!it.split.empty()) rec["split"] = it.split;
        items.push_back(std::move(rec));
    }
    nlohmann::json j{{"format", "mitoforge-dataset"},
                     {"version", 1},
                     {"kind", m.kind},
                     {"master_seed", m.master_seed},
                     {"preset", m.preset},
                     {"parameters", m.parameters},
                     {"shapes", m.shape_ids},
                     {"counts", {{"items", m.items.size()}, {"shapes", m.shape_ids.size()}, {"skipped", m.skipped.size()}}},
                     {"skipped", m.skipped},
                     {"items", items}};
    if (!m.shape_split.empty()) j["split"] = m.shape_split;
    return j;
}

GenerationManifest manifest_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "mitoforge-dataset") throw InputError("datasetgen", "not a dataset manifest");
        GenerationManifest m;
        m.kind = j.at("kind").get<std::string>();
        m.master_seed = j.at("master_seed").get<std::uint64_t>();
        m.preset = j.at("preset").get<std::string>();
        m.parameters = j.at("parameters");
        m.shape_ids = j.at("shapes").get<std::vector<std::string>>();
        m.skipped = j.at("skipped").get<std::vector<std::string>>();
        if (j.contains("split")) m.shape_split = j["split"].get<std::map<std::string, std::string>>();
        for (const auto& r : j.at("items")) {
            ManifestItem it;
            it.index = r.at("index").get<std::size_t>();
            it.seed = r.at("seed").get<std::uint64_t>();
            it.shape_ids = r.at("shapes").get<std::vector<std::string>>();
            it.rotations = r.at("rotations").get<std::vector<std::array<double, 3>>>();
            for (const auto& f : r.at("files"))
                it.files.push_back({f.at("path").get<std::string>(), f.at("crc32").get<std::string>(),
                                    f.at("bytes").get<std::uint64_t>()});
            it.split = r.value("split", std::string());
            it.details = r.value("details", nlohmann::json::object());
            m.items.push_back(std::move(it));
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("datasetgen", std::string("malformed manifest: ") + e.what());
    }
}

void write_manifest(const std::filesystem::path& root, const GenerationManifest& m) {
    io::write_text(root / kManifestName, to_json(m).dump(2) + "\n");
}

GenerationManifest read_manifest(const std::filesystem::path& root) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io::read_text(root / kManifestName));
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError("datasetgen", std::string("manifest is not valid JSON: ") + e.what());
    }
    return manifest_from_json(j);
}

std::vector<std::string> verify_manifest(const std::filesystem::path& root) {
    const auto m = read_manifest(root);
    std::vector<std::string> problems;
    std::set<std::string> listed;
    for (const auto& it : m.items)
        for (const auto& f : it.files) {
            listed.insert(f.path);
            const auto p = root / f.path;
            if (!std::filesystem::is_regular_file(p)) {
                problems.push_back("missing: " + f.path);
                continue;
            }
            if (std::filesystem::file_size(p) != f.bytes) problems.push_back("size mismatch: " + f.path);
            else if (io::file_crc32_hex(p) != f.crc32) problems.push_back("checksum mismatch: " + f.path);
        }
    for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        const auto rel = std::filesystem::relative(e.path(), root).generic_string();
        if (rel != kManifestName && !listed.count(rel)) problems.push_back("not listed: " + rel);
    }
    std::sort(problems.begin(), problems.end());
    return problems;
}

void SplitSpec::validate() const {
    double sum = 0.0;
    for (double f : fractions) {
        if (!(f > 0) || !std::isfinite(f)) throw ConfigError("datasetgen", "split fractions must be positive");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("datasetgen", "split fractions must sum to 1");
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const std::array<double, 3>& fractions) {
    std::array<std::size_t, 3> sizes{};
    std::array<double, 3> rem{};
    std::size_t used = 0;
    for (int k = 0; k < 3; ++k) {
        const double exact = fractions[k] * double(n);
        // tolerate representation error such as 0.7·10 = 7.000000000000001 or 6.999…
        const double fl = std::floor(exact + 1e-9);
        sizes[k] = std::size_t(fl);
        rem[k] = exact - fl;
        used += sizes[k];
    }
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
    for (std::size_t k = 0; used < n; ++k, ++used) ++sizes[order[k % 3]];
    return sizes;
}

GenerationManifest split(GenerationManifest manifest, const SplitSpec& spec) {
    spec.validate();
    auto ids = manifest.shape_ids;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.size() < kSplitNames.size())
        throw ConfigError("datasetgen", "cannot split " + std::to_string(ids.size()) + " shapes into 3 parts");
    auto rng = make_rng(spec.seed);
    std::shuffle(ids.begin(), ids.end(), rng);
    const auto sizes = split_sizes(ids.size(), spec.fractions);
    manifest.shape_split.clear();
    std::size_t pos = 0;
    for (int k = 0; k < 3; ++k)
        for (std::size_t c = 0; c < sizes[k]; ++c) manifest.shape_split[ids[pos++]] = kSplitNames[k];
    for (auto& it : manifest.items) {
        std::set<std::string> seen;
        for (const auto& s : it.shape_ids) seen.insert(manifest.shape_split.at(s));
        it.split = seen.size() == 1 ? *seen.begin() : (seen.empty() ? "" : "mixed");
    }
    return manifest;
}

}  // namespace mitoforge
