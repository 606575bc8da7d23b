#pragma once

#include <filesystem>

#include "privloc/crypto.hpp"
#include "privloc/params.hpp"

namespace privloc {

// Generates three independent lambda-bit keys and writes them to path
// atomically (temp file + rename, mode 0600). On failure nothing is left
// behind at path.
KeySet setup_keys(const SystemParams& params, const std::filesystem::path& path);

// Three hex lines. Rejected when group/other have any permission bits.
void save_keys(const KeySet& keys, const std::filesystem::path& path);
KeySet load_keys(const std::filesystem::path& path);

}  // namespace privloc
