#pragma once

// Binary checkpoint container.
//
// Layout (little-endian):
//   "MEJEMCKP" magic, u32 version
//   str config_json, str config_hash
//   u64 n_layer_sizes, u64 layer_sizes[], u64 seed
//   per parameter tensor (ModelParams::parameters() order): u64 count, f64 values[]
//   u64 d, f64 norm_mean[d], f64 norm_std[d]
//   i64 step, i32 epoch, u64 n_buffers, per buffer: u64 count, f64 values[]
//   u64 capacity, u64 dim, u64 count, f64 buffer_entries[]
//   u64 n_rng, per stream: str state
// where str is u64 length + bytes. Float payloads are stored bit-exactly.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mejem/data.hpp"
#include "mejem/model.hpp"
#include "mejem/sam.hpp"
#include "mejem/sgld.hpp"

namespace mejem {

struct Checkpoint {
  std::string config_json;
  std::string config_hash;
  ModelParams params;
  Normalizer normalizer;
  OptimizerState optimizer;
  std::optional<ReplayBuffer> buffer;
  // Serialized generator states for exact resume.
  std::vector<std::string> rng_states;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

std::string rng_state(const Rng& rng);
void restore_rng(Rng& rng, const std::string& state);

}  // namespace mejem
