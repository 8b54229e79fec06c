#pragma once

#include <filesystem>
#include <string>

namespace testpaths {

inline std::filesystem::path source_root() { return R2R_SOURCE_DIR; }
inline std::filesystem::path fixture(const std::string& rel) {
    return source_root() / "fixtures" / rel;
}
inline std::filesystem::path asset(const std::string& rel) {
    return source_root() / "assets" / rel;
}

// A per-test scratch directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::current_path() / "scratch" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testpaths
