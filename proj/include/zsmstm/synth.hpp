#pragma once
// Synthetic speaker corpus: procedurally generated "speakers" with
// distinct gesture styles (amplitude, frequency, posture, smoothness,
// voice pitch band) delivering shared content scripts.  Everything is a
// pure function of the seed so datasets regenerate bit-for-bit.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "zsmstm/data.hpp"

namespace zsmstm {

struct SpeakerStyleParams {
  double amplitude_scale = 1.0;       // gesture size multiplier
  double base_frequency = 1.0;        // Hz of the underlying oscillation
  Eigen::VectorXd posture_offset;     // 2J rest pose (base skeleton + jitter)
  double smoothness = 1.0;            // one-pole low-pass coefficient, 1 = no filtering
  int voice_pitch_band = 0;           // mel bin the speaker's energy centres on
};

struct ContentScript {
  std::vector<int> classes;    // per-word content class id
  std::vector<int> durations;  // per-word frame counts, summing to frames
};

struct SynthConfig {
  int joints = 10;
  int frames = 64;
  int d_text = 768;
  int n_mels = 128;
  double fps = 15.0;
  int content_classes = 8;
  int words_min = 2;
  int words_max = 4;
  int min_word_frames = 8;       // shortest span a script may assign
  int mel_frames_per_pose = 2;   // mel rows per pose frame
  double text_noise = 0.01;      // gaussian jitter around the class embedding
  double mel_noise = 0.01;
  bool style_leak_text = false;  // leak a speaker vector into text (ablation knob)
  double style_leak_scale = 0.1;
  double amp_min = 0.5, amp_max = 2.0;
  double freq_min = 0.5, freq_max = 1.5;
  double smooth_min = 0.4, smooth_max = 1.0;
  double posture_jitter = 0.03;

  void validate() const;
};

// Style parameters drawn uniformly from the configured ranges.  The pitch
// band keeps a margin of max(1, n_mels/8) bins from the mel edges.
SpeakerStyleParams gen_speaker(const SynthConfig& cfg, uint64_t seed);

// words_min..words_max words, random frame partition with min_word_frames.
ContentScript gen_script(const SynthConfig& cfg, uint64_t seed);

// Renders one interval: pose = posture + amplitude * low-pass(per-class
// oscillation), mel = pitch-band bump modulated per class, text = class
// embedding + noise.  Pose amplitude is exactly linear in amplitude_scale.
Sample gen_sample(const SynthConfig& cfg, const SpeakerStyleParams& style,
                  const ContentScript& script, uint64_t seed, const std::string& speaker_id);

struct SynthDatasetSpec {
  SynthConfig cfg;
  int n_seen = 4;
  int n_unseen = 2;
  int samples_per_speaker = 20;
  double train_frac = 0.7;   // remaining seen samples split between valid and test
  double valid_frac = 0.15;
  uint64_t seed = 1;
  bool binary = true;        // interval file format
};

// Generates speakers and intervals under out_dir and writes manifest.txt.
// Seen speakers are split train/valid/test per the fractions; unseen
// speakers contribute test intervals only.  Returns the loaded manifest.
DatasetManifest gen_dataset(const SynthDatasetSpec& spec, const std::filesystem::path& out_dir);

// Same, but with explicit named speakers (controlled style separation for
// experiments).  Unseen speakers go entirely to test.
DatasetManifest write_dataset(const SynthDatasetSpec& spec,
                              const std::vector<std::pair<std::string, SpeakerStyleParams>>& seen,
                              const std::vector<std::pair<std::string, SpeakerStyleParams>>& unseen,
                              const std::filesystem::path& out_dir);

}  // namespace zsmstm
