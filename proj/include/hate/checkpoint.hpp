#pragma once

#include <string>
#include <string_view>

#include "hate/training.hpp"

namespace hate {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Byte layout is documented in docs/file_formats.md. Encoding is a pure
// function of the checkpoint, so save -> load -> save is byte-identical.
std::string encode_checkpoint(const Checkpoint& ckpt);

// Throws InputError on corrupt or truncated data and CompatibilityError on
// an unsupported version.
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace hate
