#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "gardner/net.hpp"

namespace gardner {

// Self-describing network snapshot. Binary little-endian layout:
//   magic "GRDNCKP1", u32 version
//   u32 actions, u32 channels, u32 hidden, f32 dropout
//   u64 train_steps, u8 color, u32 iteration, u64 seed, f64 epsilon
//   u16 len + bytes (phase), u16 len + bytes (opponent)
//   u64 trainable count, u64 running count
//   f32 trainable[...] then f32 running[...] in declaration order
struct CheckpointMeta {
  std::uint32_t actions = 0;
  std::uint32_t channels = 0;
  std::uint32_t hidden = 0;
  float dropout = 0.0f;
  std::uint64_t train_steps = 0;
  Color color = Color::White;
  std::uint32_t iteration = 0;
  std::uint64_t seed = 0;
  double epsilon = 0.0;
  std::string phase;     // "init", "train", "pretrain"
  std::string opponent;  // "random", a checkpoint path, or empty

  friend bool operator==(const CheckpointMeta&, const CheckpointMeta&) = default;
};

struct Checkpoint {
  CheckpointMeta meta;
  Network<float> net;

  Checkpoint() : net(1, 1, 1, 0.0) {}
  Checkpoint(CheckpointMeta m, Network<float> n) : meta(std::move(m)), net(std::move(n)) {}
};

CheckpointMeta meta_for(const Network<float>& net);

void save_checkpoint(const Checkpoint&, const std::filesystem::path&);

// Throws std::runtime_error on unreadable or corrupt files.
Checkpoint load_checkpoint(const std::filesystem::path&);

// Loads and validates the shape constants against the expected configuration.
Checkpoint load_checkpoint_checked(const std::filesystem::path&, int expected_actions,
                                   int expected_channels, int expected_hidden);

}  // namespace gardner
