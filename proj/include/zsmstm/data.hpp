#pragma once
// Dataset plumbing: interval samples (per-word text vectors + mel chunks,
// a pose track, and the word/frame alignment), manifests, normalization,
// splits, and batching.

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "zsmstm/errors.hpp"

namespace zsmstm {

struct Span {
  int begin = 0;  // inclusive frame
  int end = 0;    // exclusive frame
};

struct WordFeature {
  Eigen::MatrixXf text_vec;  // 1 x d_text
  Eigen::MatrixXf mel;       // mel_frames x n_mels
};

struct Sample {
  std::string speaker_id;
  std::vector<WordFeature> words;
  Eigen::MatrixXf pose;          // frames x 2*joints, (x0,y0,x1,y1,...) normalized image coords
  std::vector<Span> alignment;   // one span per word, partitioning [0, frames)
  double fps = 15.0;

  int word_count() const { return int(words.size()); }
  int frame_count() const { return int(pose.rows()); }
};

// Throws unless alignment is a gapless in-order partition of [0, frames)
// with one span per word.
void validate_alignment(const Sample& s);

// frame index -> word index lookup built from the alignment
std::vector<int> frame_to_word(const std::vector<Span>& alignment, int frames);

enum class SplitKind { train, valid, test };

const char* split_name(SplitKind k);
SplitKind split_from_name(const std::string& name);

struct IntervalEntry {
  std::string speaker_id;
  SplitKind split = SplitKind::train;
  std::string rel_path;
};

struct DatasetManifest {
  std::filesystem::path root;  // directory interval paths are relative to
  int d_text = 0;
  int n_mels = 0;
  int joints = 0;
  int frames = 0;
  double fps = 15.0;
  std::vector<IntervalEntry> entries;

  std::filesystem::path resolve(const IntervalEntry& e) const { return root / e.rel_path; }
};

// Parses a manifest file.  The dataset root defaults to the manifest's
// directory; the ZSMSTM_DATA_ROOT environment variable overrides it.
DatasetManifest load_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& m, const std::filesystem::path& path);

// Interval files carry their own dimensions, so they parse standalone.
// Binary (.zmi) and CSV (.csv) forms hold identical content; binary
// round-trips bit-exactly, CSV via %.9g which is lossless for float32.
Sample parse_interval(const std::filesystem::path& path);
// Same, then cross-checks dimensions against the manifest.
Sample parse_interval(const std::filesystem::path& path, const DatasetManifest& m);
void write_interval_binary(const Sample& s, const std::filesystem::path& path);
void write_interval_csv(const Sample& s, const std::filesystem::path& path);

// Pose-only track (transfer output; metrics/export input).
void write_pose_csv(const Eigen::MatrixXf& pose, double fps, const std::filesystem::path& path);
Eigen::MatrixXf read_pose_csv(const std::filesystem::path& path, double* fps_out = nullptr);

// ---- normalization -----------------------------------------------------------

struct StreamStats {
  Eigen::VectorXd mean;            // per feature
  Eigen::VectorXd stddev;          // population std; 0 kept as recorded
  std::vector<uint8_t> degenerate; // 1 where stddev was exactly 0

  int dim() const { return int(mean.size()); }
};

struct NormalizationStats {
  StreamStats pose, mel, text;
};

// Per-feature mean/std over the given (training) samples, accumulated in
// double.  Normalized features get mean 0 and std 0.5; zero-variance
// features are flagged and passed through centred but unscaled.
NormalizationStats fit_normalization(const std::vector<Sample>& train);

Sample normalize(const Sample& s, const NormalizationStats& st);
Sample denormalize(const Sample& s, const NormalizationStats& st);
Eigen::MatrixXf normalize_pose(const Eigen::MatrixXf& pose, const StreamStats& st);
Eigen::MatrixXf denormalize_pose(const Eigen::MatrixXf& pose, const StreamStats& st);

// Canonical double-precision transform over feature rows; the float Sample
// paths are casts of this.  denormalize_rows(normalize_rows(x)) recovers x
// to ~1e-15 relative.
Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& rows, const StreamStats& st);
Eigen::MatrixXd denormalize_rows(const Eigen::MatrixXd& rows, const StreamStats& st);

// ---- splits and batching ------------------------------------------------------

// Reference speaker partition for the gesture dataset the model targets.
extern const std::vector<std::string> kDefaultSeenSpeakers;    // 16 train/val/test speakers
extern const std::vector<std::string> kDefaultUnseenSpeakers;  // 6 held-out speakers

struct SpeakerSplit {
  std::vector<size_t> train;       // indices into manifest.entries
  std::vector<size_t> valid;
  std::vector<size_t> seen_test;
  std::vector<size_t> unseen_test;
};

// Routes manifest entries into the four buckets.  Seen/unseen must be
// disjoint; every manifest speaker must appear in exactly one list; unseen
// speakers contribute only test entries.
SpeakerSplit split_speakers(const DatasetManifest& m,
                            const std::vector<std::string>& seen,
                            const std::vector<std::string>& unseen);

// One epoch worth of shuffled batches over n samples; every index appears
// exactly once; the final batch may be short.  Deterministic in seed.
std::vector<std::vector<size_t>> make_batches(size_t n, int batch_size, uint64_t seed);

}  // namespace zsmstm
