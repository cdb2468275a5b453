#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dscn/model.hpp"

namespace dscn {

// Checkpoint layout (all integers little-endian):
//   magic "DSCN" | u16 version | u32 json_len | config JSON (UTF-8)
//   per tensor: u32 name_len | name | u32 rank | u32 dims[rank] | f32 data[]
//   u32 CRC32 of all preceding bytes
std::vector<uint8_t> serialize_checkpoint(const Model<float>& model);
Model<float> deserialize_checkpoint(const std::vector<uint8_t>& bytes);

void save_checkpoint(const Model<float>& model, const std::string& path);
Model<float> load_checkpoint(const std::string& path);

}  // namespace dscn
