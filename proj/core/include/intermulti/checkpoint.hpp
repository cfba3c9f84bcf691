#pragma once

#include <filesystem>

#include "intermulti/model.hpp"

namespace intermulti {

// Self-describing checkpoint, little-endian throughout:
//   magic "IMCP" | version u32 | config length u32 | config JSON (UTF-8)
//   param count u32
//   per parameter: name length u32 | name | rank u32 | extents u32 x rank
//                  | values f64
// Loading rebuilds the model from the embedded config and then overwrites
// the parameter values; names and shapes must match exactly.
void save_checkpoint(const std::filesystem::path& path, const Model& model);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace intermulti
