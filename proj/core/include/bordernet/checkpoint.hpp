#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bordernet/network.hpp"

namespace bordernet {

// Binary layout, all integers little-endian:
//   "BNET"  u32 version  u32 variant
//   u32 flags (bit0 front trainable, bit1 front L1-normalised, bit2 bank seed present)
//   u64 init seed  u64 bank seed
//   u32 tensor count, then per tensor:
//     u32 name length, name bytes, u32 rank, rank x u32 dims, f32 data
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class CheckpointErrorCode {
  OpenFailed,
  BadMagic,
  VersionMismatch,
  Truncated,
  DimensionOverflow,
  VariantMismatch,
  Malformed,
  WriteFailed,
};

class CheckpointError : public std::runtime_error {
 public:
  CheckpointError(CheckpointErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  CheckpointErrorCode code() const noexcept { return code_; }

 private:
  CheckpointErrorCode code_;
};

std::vector<unsigned char> serialize_checkpoint(const Network& net);
Network deserialize_checkpoint(const std::vector<unsigned char>& bytes,
                               std::optional<Variant> expected = std::nullopt);

void save_checkpoint(const Network& net, const std::filesystem::path& path);
/// If `expected` is set and the file holds another variant, throws VariantMismatch.
Network load_checkpoint(const std::filesystem::path& path, std::optional<Variant> expected = std::nullopt);

/// key = value lines describing the network, followed by `extra` entries in key order.
void write_sidecar(std::ostream& os, const Network& net, const std::map<std::string, std::string>& extra = {});

}  // namespace bordernet
