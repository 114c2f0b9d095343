#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "polsar/dataset.hpp"
#include "polsar/dncnn/network.hpp"

namespace polsar::nn {

/// Trained network together with the normalization it was trained under.
struct NetworkModel {
  Network<float> net;
  NormStats norm;
};

// "PSM1" checkpoint: magic, version, NetConfig, NormStats, then a manifest of named
// tensors (name, rank, dims) each followed by its little-endian f32 data.
// Loading audits every tensor shape against the stored NetConfig.
std::vector<std::byte> encode_checkpoint(const NetworkModel& model);
NetworkModel decode_checkpoint(std::span<const std::byte> bytes);
void save_checkpoint(const NetworkModel& model, const std::filesystem::path& path);
NetworkModel load_checkpoint(const std::filesystem::path& path);

}  // namespace polsar::nn
