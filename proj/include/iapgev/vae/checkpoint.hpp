#pragma once

#include <filesystem>
#include <string>

#include "iapgev/vae/model.hpp"

namespace iapgev::vae {

inline constexpr std::uint32_t checkpoint_version = 1;

// Binary layout: 8-byte magic "IAPGVAE1", u32 version, hyperparameters,
// attribute count, truncation bounds, optional normalization constants, named
// parameter blocks (rows, cols, values) and batch-norm running statistics.
// Integers are little-endian u64 and reals little-endian IEEE-754 binary64.
std::string serialize(const VaeModel& model);
VaeModel deserialize(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const VaeModel& model);
// Throws VersionError for a foreign, truncated or mismatched checkpoint.
VaeModel load_checkpoint(const std::filesystem::path& path);

// 16 hex digits of FNV-1a over the serialized bytes; names a model in reports.
std::string fingerprint(const VaeModel& model);

}  // namespace iapgev::vae
