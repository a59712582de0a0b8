#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sam/numkernel/error.hpp"
#include "sam/samnet/samnet.hpp"

namespace sam {

inline constexpr char kCheckpointMagic[8] = {'S', 'A', 'M', 'C', 'K', 'P', 'T', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Checkpoint read/write failure; `kind` tells the causes apart.
class CheckpointError : public DataError {
 public:
  enum class Kind { io, bad_magic, version_mismatch, truncated, unknown_tensor, malformed };

  CheckpointError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// key=value lines echoing every SamConfig field.
std::string config_to_text(const SamConfig& config);
SamConfig config_from_text(std::string_view text);
/// Names of fields whose values differ.
std::vector<std::string> config_diff(const SamConfig& a, const SamConfig& b);

/// Layout, all integers little-endian:
///   "SAMCKPT1" | u32 version | u32 len, config text |
///   u32 count | count x (u32 len, name | u32 rank | u64 dims[rank] | f32 data)
std::string encode_checkpoint(const SamModel& model);
SamModel decode_checkpoint(std::string_view bytes);

void save_checkpoint(const SamModel& model, const std::string& path);
SamModel load_checkpoint(const std::string& path);

}  // namespace sam
