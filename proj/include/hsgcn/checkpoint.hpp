#pragma once

#include "hsgcn/siamese.hpp"

#include <filesystem>
#include <string>

namespace hsgcn {

// One JSON header line (format tag, version, layer and FC shapes, tensor list)
// followed by every tensor as little-endian float64 in row-major order:
// gcn.<l>.theta with shape [K, f_in, f_out], then fc.weights, then fc.bias.
inline constexpr int kCheckpointVersion = 1;

std::string serialize_checkpoint(const SiameseModel& model);
SiameseModel deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const SiameseModel& model);
SiameseModel load_checkpoint(const std::filesystem::path& path);

}  // namespace hsgcn
