#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fame/embedding_space.hpp"
#include "fame/manifold.hpp"

namespace fame::manifold {

inline constexpr int kCheckpointSchemaVersion = 1;

struct ModelCheckpoint {
  int schema_version = kCheckpointSchemaVersion;
  ManifoldModel model;
  TrainConfig train_config;
  embedding::TopicModel topics;
  std::vector<EpochLoss> trace;
  std::string rng_state;
  double weight_min = 0.0;
  double weight_max = 0.0;
};

/// Container layout: 8-byte magic "FAMECKPT", u32 schema version, u64 header
/// length, a JSON header (configs, tensor directory), then the tensors as
/// little-endian IEEE-754 doubles in directory order.
std::string serialize_checkpoint(const ModelCheckpoint& ckpt);
ModelCheckpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const ModelCheckpoint& ckpt);
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

/// CSV: epoch,total,spine,inspire,vanguard
void write_loss_trace(std::ostream& out, const std::vector<EpochLoss>& trace);

}  // namespace fame::manifold
