#pragma once

#include <string>

#include "numcore/adam.hpp"
#include "numcore/params.hpp"

namespace numcore {

// Binary checkpoint, magic "DTXM". Little-endian throughout:
//   magic[4], u32 version, u32 flags, u32 entry_count,
//   entries: u32 name_len, name bytes, u32 rank, u32 extents[rank], f64 values.
// Entry names carry a section prefix: "p/" trainable parameters, "b/"
// buffers (running statistics), "am/"+"av/" Adam moments, "as/step".
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::uint32_t kCheckpointHasBuffers = 1u << 0;
inline constexpr std::uint32_t kCheckpointHasAdam = 1u << 1;

void save_checkpoint(const std::string& path, const ParamStore& params,
                     const AdamState* adam = nullptr);

// Loads into an already-constructed store: every entry in the file must
// match an existing registered tensor, shape included. Adam state is
// restored when present in the file and `adam` is non-null.
void load_checkpoint(const std::string& path, ParamStore& params,
                     AdamState* adam = nullptr);

struct CheckpointError : std::runtime_error {
  explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace numcore
