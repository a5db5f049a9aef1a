#pragma once
// Versioned checkpoint container: model config + normalization stats +
// named float32 parameters, with optional trainer state (step, Adam
// moments, best validation loss) so interrupted runs resume bit-exactly.

#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

#include "zsmstm/config.hpp"
#include "zsmstm/data.hpp"
#include "zsmstm/model.hpp"

namespace zsmstm {

struct Checkpoint {
  ModelConfig config;
  NormalizationStats stats;
  ParamStore<float> params;

  bool has_trainer = false;
  TrainConfig train_config;
  uint64_t step = 0;
  bool has_best = false;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<Eigen::MatrixXf> adam_m, adam_v;  // aligned with params order
};

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// order-sensitive hash over names, shapes and raw float32 bits; unchanged
// hash = untouched weights
uint64_t params_hash(const ParamStore<float>& params);

}  // namespace zsmstm
