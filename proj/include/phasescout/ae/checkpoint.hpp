#pragma once

#include "phasescout/ae/model.hpp"

#include <string>
#include <vector>

namespace phasescout::ae {

/// Binary layout, all integers little-endian:
///   "AEMODEL1" | u8 version (1)
///   u32 rank+1, u32 inputShape[rank+1]
///   u32 latentIndex
///   u32 layerCount, per layer: u8 kind, u8 spatialRank, u32 inChannels, u32 filters, u32 kernel, u32 poolSize
///   u32 shortcutCount, per shortcut: u32 from, u32 to
///   per conv layer: f64 weight (row-major, filters x inChannels*kh*kw), f64 bias
std::vector<unsigned char> serialize_model(const AEModel& model);
AEModel deserialize_model(const std::vector<unsigned char>& bytes);

void save_model(const AEModel& model, const std::string& path);
AEModel load_model(const std::string& path);

}  // namespace phasescout::ae
