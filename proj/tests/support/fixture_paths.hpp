#pragma once

#include <filesystem>

namespace veribtot::testing {

inline std::filesystem::path fixture_dir() { return VERIBTOT_FIXTURE_DIR; }
inline std::filesystem::path asset_dir() { return VERIBTOT_ASSET_DIR; }

}  // namespace veribtot::testing
