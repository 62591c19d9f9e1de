#pragma once

#include <filesystem>

#include "seedens/ensemble.hpp"

namespace seedens {

// Model bundle directory: manifest.json plus one text parameter file per
// head (or the variational/multitask parameter file). Parameters are written
// as shortest-round-trip decimals, so load(save(m)) == m bit for bit and the
// layout is endianness-free. The manifest is the source of truth for n.
void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir);

ModelBundle load_bundle(const std::filesystem::path& dir);

}  // namespace seedens
