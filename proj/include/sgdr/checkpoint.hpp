#pragma once

#include <string>
#include <vector>

#include "sgdr/modules.hpp"

namespace sgdr {

// Optimizer and progress state carried across a resume.
struct TrainerState {
    int next_epoch = 0;
    std::uint64_t adam_gen_t = 0;
    std::uint64_t adam_disc_t = 0;
    // indexed by registry slot; empty tensors mean "no state yet"
    std::vector<Tensor<float>> adam_gen_m, adam_gen_v;
    std::vector<Tensor<float>> adam_disc_m, adam_disc_v;
};

// Checkpoint archive: canonical parameter names mapped to little-endian
// float32 tensors plus a manifest of shared-name aliases.
//
//   bytes 0..7  magic "SGDRCKPT"
//   u32         version (1)
//   u64         header length in bytes
//   json        {"tensors":[{name,shape,offset}...],
//                "aliases":{alias: canonical}, "meta":{...}}
//   payload     raw float32 data at the stated offsets
void save_checkpoint(const std::string& path, const ParamRegistry<float>& params,
                     const TrainerState* state = nullptr,
                     const std::string& extra_meta_json = "");

// Loads parameters by canonical name into an existing registry (shapes must
// match). When `state` is non-null the optimizer state is restored as well.
void load_checkpoint(const std::string& path, ParamRegistry<float>& params,
                     TrainerState* state = nullptr);

// Meta block of a checkpoint (JSON text) without loading tensors.
std::string read_checkpoint_meta(const std::string& path);

}  // namespace sgdr
