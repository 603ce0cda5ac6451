#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace cdse::models {

enum class Family { kUnet1d, kGatedStack, kUnet2d, kCasnet, kDisc1d, kDisc2d };

std::string_view to_string(Family family);
Family family_from_string(std::string_view name);

enum class Domain { kTime, kTf };

struct ModelSpec {
  Family family = Family::kUnet2d;
  // U-nets: total layer count (encoder + decoder). Gated stack: unused (the
  // block count comes from the dilation schedule). Discriminators: number of
  // strided feature layers K.
  int depth = 8;
  int base_channels = 16;
  // Encoder kernel for 1-D families, dilated kernel for the gated stack.
  // The 2-D families use the 4x4 stride-2 convention and ignore this.
  int kernel_size = 15;
  // Gated stack: one cycle of dilations, repeated `dilation_cycles` times.
  std::vector<int> dilation_schedule;
  int dilation_cycles = 1;
  // unet1d only: the fixed training length it accepts.
  std::int64_t fixed_length = 16000;
  int max_channel_multiplier = 8;
  // casnet only: the chained U-nets.
  std::vector<ModelSpec> stages;

  void validate() const;
  Domain domain() const;
  bool is_generator() const;
  // Gated stack only: 1 + sum over blocks of (kernel - 1) * dilation.
  std::int64_t receptive_field() const;
  int block_count() const;

  bool operator==(const ModelSpec&) const = default;

  static ModelSpec unet1d(int depth = 10, int base_channels = 16);
  static ModelSpec gated_stack(std::vector<int> dilations = {1, 2, 4, 8, 16, 32, 64, 128, 256, 512}, int cycles = 2,
                               int base_channels = 16);
  static ModelSpec unet2d(int depth = 8, int base_channels = 16);
  static ModelSpec casnet(int stage_depth = 8, int base_channels = 16);
  static ModelSpec disc1d(int depth = 5, int base_channels = 16);
  static ModelSpec disc2d(int depth = 4, int base_channels = 16);
};

void to_json(nlohmann::json& j, const ModelSpec& spec);
void from_json(const nlohmann::json& j, ModelSpec& spec);

}  // namespace cdse::models
