#include "zsmstm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "zsmstm/io_util.hpp"
#include "zsmstm/rng.hpp"

namespace zsmstm {

namespace {

constexpr double kTau = 6.283185307179586;

// seed-stream tags so independent draws never collide
constexpr uint64_t kTagSpeaker = 0x73706b72;  // 'spkr'
constexpr uint64_t kTagScript = 0x73637074;   // 'scpt'
constexpr uint64_t kTagSample = 0x736d706c;   // 'smpl'
constexpr uint64_t kTagClassPose = 0x636c7073;
constexpr uint64_t kTagClassText = 0x636c7478;
constexpr uint64_t kTagLeak = 0x6c65616b;

// Rest pose for the default 10-joint upper body (normalized image coords,
// y grows downward): nose, neck, r-shoulder, r-elbow, r-wrist, l-shoulder,
// l-elbow, l-wrist, r-eye, l-eye.
const double kSkeleton10[10][2] = {
    {0.50, 0.18}, {0.50, 0.32}, {0.38, 0.33}, {0.33, 0.48}, {0.35, 0.62},
    {0.62, 0.33}, {0.67, 0.48}, {0.65, 0.62}, {0.47, 0.15}, {0.53, 0.15}};
// how far each joint is allowed to swing; arms do the talking
const double kMotion10[10] = {0.008, 0.005, 0.015, 0.05, 0.10, 0.015, 0.05, 0.10, 0.008, 0.008};

void base_skeleton(int joints, Eigen::VectorXd& rest, Eigen::VectorXd& motion) {
  rest.resize(2 * joints);
  motion.resize(2 * joints);
  if (joints == 10) {
    for (int j = 0; j < 10; ++j) {
      rest[2 * j] = kSkeleton10[j][0];
      rest[2 * j + 1] = kSkeleton10[j][1];
      motion[2 * j] = motion[2 * j + 1] = kMotion10[j];
    }
    return;
  }
  // non-default joint counts (tiny test rigs): fan the joints out and give
  // everything the same mid-size swing
  for (int j = 0; j < joints; ++j) {
    double u = joints == 1 ? 0.5 : double(j) / double(joints - 1);
    rest[2 * j] = 0.30 + 0.40 * u;
    rest[2 * j + 1] = 0.20 + 0.45 * u;
    motion[2 * j] = motion[2 * j + 1] = 0.06;
  }
}

// per-class direction over the 2J pose features, fixed across the corpus
Eigen::VectorXd class_pose_pattern(int cls, int dim) {
  Rng rng(mix_seed(kTagClassPose, uint64_t(cls)));
  Eigen::VectorXd u(dim);
  for (int i = 0; i < dim; ++i) u[i] = rng.uniform(-1.0, 1.0);
  return u;
}

Eigen::VectorXd class_text_embedding(int cls, int dim) {
  Rng rng(mix_seed(kTagClassText, uint64_t(cls)));
  Eigen::VectorXd e(dim);
  for (int i = 0; i < dim; ++i) e[i] = rng.gaussian();
  return e;
}

double class_freq_mult(int cls) { return 1.0 + 0.5 * double(cls % 3); }
double class_phase(int cls, int n_classes) { return kTau * double(cls) / double(n_classes); }

}  // namespace

void SynthConfig::validate() const {
  check(joints > 0 && frames > 1 && d_text > 0 && n_mels > 0 && fps > 0,
        Err::bad_config, "synth dimensions must be positive");
  check(content_classes > 0, Err::bad_config, "need at least one content class");
  check(words_min >= 1 && words_max >= words_min, Err::bad_config, "bad word count range");
  check(min_word_frames >= 1, Err::bad_config, "min_word_frames must be positive");
  check(words_min * min_word_frames <= frames, Err::bad_config,
        "frames too short for words_min * min_word_frames");
  check(mel_frames_per_pose >= 1, Err::bad_config, "mel_frames_per_pose must be positive");
  check(amp_min > 0 && amp_max >= amp_min, Err::bad_config, "bad amplitude range");
  check(freq_min > 0 && freq_max >= freq_min, Err::bad_config, "bad frequency range");
  check(smooth_min > 0 && smooth_max <= 1.0 && smooth_max >= smooth_min, Err::bad_config,
        "smoothness must lie in (0, 1]");
}

SpeakerStyleParams gen_speaker(const SynthConfig& cfg, uint64_t seed) {
  cfg.validate();
  Rng rng(mix_seed(kTagSpeaker, seed));
  SpeakerStyleParams p;
  p.amplitude_scale = rng.uniform(cfg.amp_min, cfg.amp_max);
  p.base_frequency = rng.uniform(cfg.freq_min, cfg.freq_max);
  p.smoothness = rng.uniform(cfg.smooth_min, cfg.smooth_max);
  int margin = std::max(1, cfg.n_mels / 8);
  check(cfg.n_mels - 1 - margin >= margin, Err::bad_config, "n_mels too small for a pitch band");
  p.voice_pitch_band = rng.uniform_int(margin, cfg.n_mels - 1 - margin);
  Eigen::VectorXd rest, motion;
  base_skeleton(cfg.joints, rest, motion);
  p.posture_offset = rest;
  for (int i = 0; i < p.posture_offset.size(); ++i)
    p.posture_offset[i] += rng.uniform(-cfg.posture_jitter, cfg.posture_jitter);
  return p;
}

ContentScript gen_script(const SynthConfig& cfg, uint64_t seed) {
  cfg.validate();
  Rng rng(mix_seed(kTagScript, seed));
  int max_words = std::min(cfg.words_max, cfg.frames / cfg.min_word_frames);
  int w_lo = std::min(cfg.words_min, max_words);
  int W = rng.uniform_int(w_lo, max_words);
  ContentScript s;
  s.classes.resize(size_t(W));
  s.durations.assign(size_t(W), cfg.min_word_frames);
  for (auto& c : s.classes) c = rng.uniform_int(0, cfg.content_classes - 1);
  int spare = cfg.frames - W * cfg.min_word_frames;
  for (int i = 0; i < spare; ++i) s.durations[size_t(rng.uniform_int(0, W - 1))] += 1;
  return s;
}

Sample gen_sample(const SynthConfig& cfg, const SpeakerStyleParams& style,
                  const ContentScript& script, uint64_t seed, const std::string& speaker_id) {
  cfg.validate();
  check(!script.classes.empty() && script.classes.size() == script.durations.size(),
        Err::bad_config, "script classes/durations mismatch");
  int total = 0;
  for (int d : script.durations) {
    check(d >= 1, Err::bad_config, "script span must be at least one frame");
    total += d;
  }
  check(total == cfg.frames, Err::bad_config,
        "script covers " + std::to_string(total) + " frames, dataset uses " +
            std::to_string(cfg.frames));
  check(style.posture_offset.size() == 2 * cfg.joints, Err::dimension_mismatch,
        "posture_offset width does not match joint count");

  Rng rng(mix_seed(kTagSample, seed));
  const int W = int(script.classes.size());
  const int dim = 2 * cfg.joints;

  Sample out;
  out.speaker_id = speaker_id;
  out.fps = cfg.fps;
  out.alignment.resize(size_t(W));
  {
    int at = 0;
    for (int w = 0; w < W; ++w) {
      out.alignment[size_t(w)].begin = at;
      at += script.durations[size_t(w)];
      out.alignment[size_t(w)].end = at;
    }
  }
  std::vector<int> frame_class(size_t(cfg.frames));
  for (int w = 0; w < W; ++w)
    for (int t = out.alignment[size_t(w)].begin; t < out.alignment[size_t(w)].end; ++t)
      frame_class[size_t(t)] = script.classes[size_t(w)];

  Eigen::VectorXd rest, motion;
  base_skeleton(cfg.joints, rest, motion);

  // ---- pose track: per-class oscillation, low-passed, exactly linear in amplitude
  double sample_phase = rng.uniform(0.0, kTau);
  std::vector<Eigen::VectorXd> patterns(size_t(cfg.content_classes));
  for (int c = 0; c < cfg.content_classes; ++c) patterns[size_t(c)] = class_pose_pattern(c, dim);

  Eigen::MatrixXd osc(cfg.frames, dim);
  for (int t = 0; t < cfg.frames; ++t) {
    int c = frame_class[size_t(t)];
    double angle = kTau * style.base_frequency * class_freq_mult(c) * double(t) / cfg.fps +
                   class_phase(c, cfg.content_classes) + sample_phase;
    double sv = std::sin(angle);
    for (int k = 0; k < dim; ++k) osc(t, k) = motion[k] * patterns[size_t(c)][k] * sv;
  }
  // one-pole low-pass down each feature; s == 1 keeps the signal untouched
  double s = style.smoothness;
  for (int k = 0; k < dim; ++k)
    for (int t = 1; t < cfg.frames; ++t) osc(t, k) = s * osc(t, k) + (1.0 - s) * osc(t - 1, k);

  out.pose.resize(cfg.frames, dim);
  for (int t = 0; t < cfg.frames; ++t)
    for (int k = 0; k < dim; ++k)
      out.pose(t, k) = float(style.posture_offset[k] + style.amplitude_scale * osc(t, k));

  // ---- per-word mel chunks and text vectors
  Eigen::VectorXd leak;
  if (cfg.style_leak_text) {
    Rng lr(mix_seed(kTagLeak, fnv1a64(speaker_id.data(), speaker_id.size())));
    leak.resize(cfg.d_text);
    for (int i = 0; i < cfg.d_text; ++i) leak[i] = lr.gaussian();
  }
  const double sigma_f = double(cfg.n_mels) / 16.0;
  const int shift_step = std::max(1, cfg.n_mels / 64);
  out.words.resize(size_t(W));
  for (int w = 0; w < W; ++w) {
    int c = script.classes[size_t(w)];
    int rows = script.durations[size_t(w)] * cfg.mel_frames_per_pose;
    double center = style.voice_pitch_band +
                    shift_step * (double(c) - double(cfg.content_classes - 1) / 2.0);
    center = std::clamp(center, 0.0, double(cfg.n_mels - 1));
    Eigen::MatrixXf mel(rows, cfg.n_mels);
    for (int r = 0; r < rows; ++r) {
      double env = 0.55 + 0.45 * std::sin(kTau * 2.0 * class_freq_mult(c) * (r + 0.5) / rows +
                                          class_phase(c, cfg.content_classes));
      for (int f = 0; f < cfg.n_mels; ++f) {
        double d = (f - center) / sigma_f;
        double v = 0.05 + 0.9 * std::exp(-0.5 * d * d) * env + cfg.mel_noise * rng.gaussian();
        mel(r, f) = float(v);
      }
    }
    out.words[size_t(w)].mel = std::move(mel);

    Eigen::VectorXd e = class_text_embedding(c, cfg.d_text);
    Eigen::MatrixXf tv(1, cfg.d_text);
    for (int i = 0; i < cfg.d_text; ++i) {
      double v = e[i] + cfg.text_noise * rng.gaussian();
      if (cfg.style_leak_text) v += cfg.style_leak_scale * leak[i];
      tv(0, i) = float(v);
    }
    out.words[size_t(w)].text_vec = std::move(tv);
  }
  validate_alignment(out);
  return out;
}

namespace {

std::filesystem::path interval_filename(int index, bool binary) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "interval_%04d.%s", index, binary ? "zmi" : "csv");
  return buf;
}

}  // namespace

DatasetManifest write_dataset(const SynthDatasetSpec& spec,
                              const std::vector<std::pair<std::string, SpeakerStyleParams>>& seen,
                              const std::vector<std::pair<std::string, SpeakerStyleParams>>& unseen,
                              const std::filesystem::path& out_dir) {
  spec.cfg.validate();
  check(!seen.empty(), Err::bad_config, "need at least one seen speaker");
  check(spec.samples_per_speaker >= 1, Err::bad_config, "samples_per_speaker must be positive");
  check(spec.train_frac > 0 && spec.valid_frac >= 0 && spec.train_frac + spec.valid_frac <= 1.0,
        Err::bad_config, "bad split fractions");

  const int n = spec.samples_per_speaker;
  int n_train = std::max(1, int(std::lround(spec.train_frac * n)));
  int n_valid = int(std::lround(spec.valid_frac * n));
  if (n_train + n_valid > n) n_valid = n - n_train;

  DatasetManifest m;
  m.root = out_dir;
  m.d_text = spec.cfg.d_text;
  m.n_mels = spec.cfg.n_mels;
  m.joints = spec.cfg.joints;
  m.frames = spec.cfg.frames;
  m.fps = spec.cfg.fps;

  auto emit_speaker = [&](const std::string& id, const SpeakerStyleParams& params, bool is_seen) {
    uint64_t spk_hash = fnv1a64(id.data(), id.size());
    for (int i = 0; i < n; ++i) {
      ContentScript script = gen_script(spec.cfg, mix_seed(spec.seed, spk_hash, uint64_t(2 * i)));
      Sample s = gen_sample(spec.cfg, params, script,
                            mix_seed(spec.seed, spk_hash, uint64_t(2 * i + 1)), id);
      IntervalEntry e;
      e.speaker_id = id;
      if (!is_seen) e.split = SplitKind::test;
      else if (i < n_train) e.split = SplitKind::train;
      else if (i < n_train + n_valid) e.split = SplitKind::valid;
      else e.split = SplitKind::test;
      e.rel_path = (std::filesystem::path(id) / interval_filename(i, spec.binary)).generic_string();
      std::filesystem::path full = out_dir / e.rel_path;
      if (spec.binary) write_interval_binary(s, full);
      else write_interval_csv(s, full);
      m.entries.push_back(std::move(e));
    }
  };

  for (const auto& [id, params] : seen) emit_speaker(id, params, true);
  for (const auto& [id, params] : unseen) emit_speaker(id, params, false);
  write_manifest(m, out_dir / "manifest.txt");
  return m;
}

DatasetManifest gen_dataset(const SynthDatasetSpec& spec, const std::filesystem::path& out_dir) {
  check(spec.n_seen >= 1 && spec.n_unseen >= 0, Err::bad_config, "bad speaker counts");
  std::vector<std::pair<std::string, SpeakerStyleParams>> seen, unseen;
  char buf[32];
  for (int i = 0; i < spec.n_seen; ++i) {
    std::snprintf(buf, sizeof buf, "synth_s%02d", i);
    seen.emplace_back(buf, gen_speaker(spec.cfg, mix_seed(spec.seed, uint64_t(1000 + i))));
  }
  for (int i = 0; i < spec.n_unseen; ++i) {
    std::snprintf(buf, sizeof buf, "synth_u%02d", i);
    unseen.emplace_back(buf, gen_speaker(spec.cfg, mix_seed(spec.seed, uint64_t(5000 + i))));
  }
  return write_dataset(spec, seen, unseen, out_dir);
}

}  // namespace zsmstm
