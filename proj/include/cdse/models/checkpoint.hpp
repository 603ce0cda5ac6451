#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "cdse/models/model.hpp"

namespace cdse::models {

// On-disk layout: "CDSECKPT", u32 version, u64 header length, UTF-8 JSON
// header, then the raw little-endian tensor blobs at the offsets listed in
// the header.
struct Checkpoint {
  ModelSpec spec;
  std::uint64_t seed = 0;
  std::int64_t step = 0;
  nlohmann::json meta = nlohmann::json::object();
  std::map<std::string, torch::Tensor> tensors;  // parameters and buffers
};

Checkpoint snapshot(const Model& model, std::int64_t step, nlohmann::json meta = nlohmann::json::object());
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
void save_checkpoint(const std::filesystem::path& path, const Model& model, std::int64_t step,
                     nlohmann::json meta = nlohmann::json::object());
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies the checkpoint tensors into `model`; kCheckpointMismatch when the
// spec or any tensor name / shape differs.
void restore(Model& model, const Checkpoint& ckpt);
Model load_model(const std::filesystem::path& path);

}  // namespace cdse::models
