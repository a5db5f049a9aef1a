#pragma once
// Inference: style embedding extraction (no parameter updates), a named
// style bank with binary + CSV serialization, and style-conditioned pose
// generation from a content sample.

#include <filesystem>
#include <string>
#include <vector>

#include "zsmstm/data.hpp"
#include "zsmstm/model.hpp"

namespace zsmstm {

// Mean style embedding over the given normalized samples (accumulated in
// double, returned in float).  Read-only: the parameter store is untouched.
Eigen::VectorXf extract_style(const ModelConfig& mc, const ParamStore<float>& params,
                              const std::vector<Sample>& normalized);

// Single-sample embeddings, for probing what the two encoders separate:
// style_embedding is the 1 x d_style row as a vector, content_embedding is
// the content rows mean-pooled over words (length d_model + d_text).
Eigen::VectorXf style_embedding(const ModelConfig& mc, const ParamStore<float>& params,
                                const Sample& normalized);
Eigen::VectorXf content_embedding(const ModelConfig& mc, const ParamStore<float>& params,
                                  const Sample& normalized);

struct StyleEntry {
  std::string speaker_id;
  Eigen::VectorXf style;   // d_style
  uint64_t sample_count = 0;
};

struct StyleBank {
  std::vector<StyleEntry> entries;

  const StyleEntry* find(const std::string& speaker_id) const;
  const StyleEntry& at(const std::string& speaker_id) const;  // throws when absent
};

StyleBank build_style_bank(
    const ModelConfig& mc, const ParamStore<float>& params,
    const std::vector<std::pair<std::string, std::vector<Sample>>>& normalized_by_speaker);

// binary round-trip is bit-exact
void save_style_bank(const StyleBank& bank, const std::filesystem::path& path);
StyleBank load_style_bank(const std::filesystem::path& path);
// human-readable listing, %.9g components
void write_style_bank_csv(const StyleBank& bank, const std::filesystem::path& path);

// Generate pose for the content of `content_norm` (a normalized sample)
// under the given style vector.  Decoding is step-wise on the model's own
// outputs; the result is denormalized back to coordinate units.
Eigen::MatrixXf transfer(const ModelConfig& mc, const ParamStore<float>& params,
                         const Sample& content_norm, const Eigen::VectorXf& style,
                         const NormalizationStats& stats);

}  // namespace zsmstm
