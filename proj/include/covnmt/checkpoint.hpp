#pragma once

#include <filesystem>
#include <string>

#include "covnmt/params.hpp"

namespace covnmt {

// Binary layout: magic "CVNMT1", then one record per parameter in name order:
//   u32 name length, name bytes, u32 rank, rank x u32 extents,
//   product(extents) x IEEE-754 binary32 values.
// All integers and floats are little-endian.
template <typename T>
std::string serialize_checkpoint(const ModelParams<T>& params);

template <typename T>
ModelParams<T> deserialize_checkpoint(const std::string& bytes);

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ModelParams<T>& params);

template <typename T>
ModelParams<T> load_checkpoint(const std::filesystem::path& path);

}  // namespace covnmt
