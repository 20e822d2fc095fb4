#pragma once

// Versioned binary checkpoint for a trained copy model. All integers are
// little-endian; doubles are IEEE-754 binary64 stored little-endian.
//
//   bytes 0..7   magic "XSEMCKPT"
//   u32          format version (currently 1)
//   u64          length L of the config record
//   L bytes      config record, UTF-8 JSON:
//                  {"source_vocab", "target_vocab", "embed_dim",
//                   "hidden_dim", "layers", "ffnn_dim", "mu", "seed",
//                   "source_tokens": [...], "target_tokens": [...]}
//   u32          tensor count T
//   T times      u32 name length, name bytes, u64 rows, u64 cols,
//                rows * cols doubles in row-major order
//
// Tensors appear in the fixed order of ModelParams::tensors(); a reader
// rejects names or shapes that disagree with the config.

#include <iosfwd>
#include <string>

#include "xsem/kernel/model.h"
#include "xsem/kernel/vocab.h"

namespace xsem::kernel {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  Vocabs vocabs;
};

void WriteCheckpoint(std::ostream& out, const ModelParams& params,
                     const Vocabs& vocabs);
// Throws xsem::Error (input) on a malformed or mismatched container.
Checkpoint ReadCheckpoint(std::istream& in);

void SaveCheckpoint(const std::string& path, const ModelParams& params,
                    const Vocabs& vocabs);
Checkpoint LoadCheckpoint(const std::string& path);

}  // namespace xsem::kernel
