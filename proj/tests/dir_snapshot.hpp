#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "mitoforge/io_util.hpp"

namespace oracle {

/// Relative path -> file contents for every regular file under `root`.
inline std::map<std::string, std::string> snapshot(const std::filesystem::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root))
        if (e.is_regular_file())
            files[std::filesystem::relative(e.path(), root).generic_string()] = mitoforge::io::read_text(e.path());
    return files;
}

}  // namespace oracle
