#pragma once
// Model and trainer hyperparameters.  Defaults reproduce the reference
// configuration; tests shrink them for speed.

#include <cmath>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "zsmstm/errors.hpp"

namespace zsmstm {

struct ModelConfig {
  int d_model = 768;        // speech embedding / LSTM hidden / decoder width
  int d_text = 768;         // text embedding width (BERT-sized by default)
  int n_mels = 128;         // mel bins per spectrogram frame
  int patch_size = 16;      // square mel patch edge
  int patch_stride = 10;    // patch stride, both axes
  int speech_layers = 12;   // transformer layers in the speech patch encoder
  int speech_heads = 12;
  int content_att_heads = 4;
  int style_att_heads = 4;
  int pose_lstm_layers = 3;
  int decoder_layers = 1;
  int decoder_heads = 2;
  int joints = 10;          // upper-body 2D joints per frame
  int frames = 64;          // pose frames per interval
  int mel_max_frames = 256; // longest per-word mel we size positions for
  int ffn_mult = 4;         // transformer feed-forward width multiplier

  int d_att() const { return d_model + d_text; }          // content row width
  int d_style() const { return d_att() + d_model; }        // style vector width
  int pose_dim() const { return 2 * joints; }
  int patch_dim() const { return patch_size * patch_size; }

  int freq_steps() const { return (n_mels - patch_size) / patch_stride + 1; }
  int time_steps(int mel_frames) const {
    return (mel_frames - patch_size) / patch_stride + 1;
  }
  int patches(int mel_frames) const { return freq_steps() * time_steps(mel_frames); }
  int max_patches() const { return patches(mel_max_frames); }

  void validate() const {
    check(d_model > 0 && d_text > 0 && n_mels > 0 && joints > 0 && frames > 1,
          Err::bad_config, "model dimensions must be positive (frames > 1)");
    check(patch_size > 0 && patch_stride > 0, Err::bad_config, "patch geometry must be positive");
    check(patch_size <= n_mels, Err::bad_config, "patch_size exceeds n_mels");
    check(patch_size <= mel_max_frames, Err::bad_config, "patch_size exceeds mel_max_frames");
    check(speech_layers > 0 && decoder_layers > 0 && pose_lstm_layers > 0,
          Err::bad_config, "layer counts must be positive");
    check(speech_heads > 0 && d_model % speech_heads == 0,
          Err::bad_config, "d_model must divide by speech_heads");
    check(decoder_heads > 0 && d_model % decoder_heads == 0,
          Err::bad_config, "d_model must divide by decoder_heads");
    check(content_att_heads > 0 && d_att() % content_att_heads == 0,
          Err::bad_config, "d_model+d_text must divide by content_att_heads");
    check(style_att_heads > 0 && d_att() % style_att_heads == 0,
          Err::bad_config, "d_model+d_text must divide by style_att_heads");
    check(ffn_mult > 0, Err::bad_config, "ffn_mult must be positive");
  }

  nlohmann::json to_json() const {
    return {
        {"d_model", d_model}, {"d_text", d_text}, {"n_mels", n_mels},
        {"patch_size", patch_size}, {"patch_stride", patch_stride},
        {"speech_layers", speech_layers}, {"speech_heads", speech_heads},
        {"content_att_heads", content_att_heads}, {"style_att_heads", style_att_heads},
        {"pose_lstm_layers", pose_lstm_layers}, {"decoder_layers", decoder_layers},
        {"decoder_heads", decoder_heads}, {"joints", joints}, {"frames", frames},
        {"mel_max_frames", mel_max_frames}, {"ffn_mult", ffn_mult}};
  }

  static ModelConfig from_json(const nlohmann::json& j) {
    ModelConfig c;
    auto get = [&](const char* k, int& out) {
      if (j.contains(k)) {
        check(j[k].is_number_integer(), Err::bad_config, std::string("field ") + k + " must be an integer");
        out = j[k].get<int>();
      }
    };
    get("d_model", c.d_model); get("d_text", c.d_text); get("n_mels", c.n_mels);
    get("patch_size", c.patch_size); get("patch_stride", c.patch_stride);
    get("speech_layers", c.speech_layers); get("speech_heads", c.speech_heads);
    get("content_att_heads", c.content_att_heads); get("style_att_heads", c.style_att_heads);
    get("pose_lstm_layers", c.pose_lstm_layers); get("decoder_layers", c.decoder_layers);
    get("decoder_heads", c.decoder_heads); get("joints", c.joints); get("frames", c.frames);
    get("mel_max_frames", c.mel_max_frames); get("ffn_mult", c.ffn_mult);
    c.validate();
    return c;
  }
};

struct TrainConfig {
  double beta1 = 0.95;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double initial_lr = 1e-5;     // peak rate reached at the end of warmup
  int warmup_steps = 20000;
  int epochs = 200;
  int batch_size = 24;
  double lambda_step = 0.01;    // adversarial weight ramp per step
  double lambda_max = 1.0;
  double epsilon_norm = 1e-8;   // denominator guard in style-error normalization
  uint64_t seed = 0;
  bool adversarial = true;      // off: skip the discriminator phase, lambda pinned to 0
  int checkpoint_every = 1;     // epochs between "last" checkpoint refreshes

  void validate() const {
    check(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1, Err::bad_config, "betas must lie in [0,1)");
    check(adam_eps > 0 && epsilon_norm > 0, Err::bad_config, "epsilons must be positive");
    check(initial_lr > 0, Err::bad_config, "initial_lr must be positive");
    check(warmup_steps > 0, Err::bad_config, "warmup_steps must be positive");
    check(epochs > 0 && batch_size > 0, Err::bad_config, "epochs and batch_size must be positive");
    check(lambda_step >= 0 && lambda_max >= 0, Err::bad_config, "lambda schedule must be non-negative");
    check(checkpoint_every > 0, Err::bad_config, "checkpoint_every must be positive");
  }

  nlohmann::json to_json() const {
    return {
        {"beta1", beta1}, {"beta2", beta2}, {"adam_eps", adam_eps},
        {"initial_lr", initial_lr}, {"warmup_steps", warmup_steps},
        {"epochs", epochs}, {"batch_size", batch_size},
        {"lambda_step", lambda_step}, {"lambda_max", lambda_max},
        {"epsilon_norm", epsilon_norm}, {"seed", seed},
        {"adversarial", adversarial}, {"checkpoint_every", checkpoint_every}};
  }

  static TrainConfig from_json(const nlohmann::json& j) {
    TrainConfig c;
    auto getd = [&](const char* k, double& out) { if (j.contains(k)) out = j[k].get<double>(); };
    auto geti = [&](const char* k, int& out) { if (j.contains(k)) out = j[k].get<int>(); };
    getd("beta1", c.beta1); getd("beta2", c.beta2); getd("adam_eps", c.adam_eps);
    getd("initial_lr", c.initial_lr); geti("warmup_steps", c.warmup_steps);
    geti("epochs", c.epochs); geti("batch_size", c.batch_size);
    getd("lambda_step", c.lambda_step); getd("lambda_max", c.lambda_max);
    getd("epsilon_norm", c.epsilon_norm);
    if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
    if (j.contains("adversarial")) c.adversarial = j["adversarial"].get<bool>();
    geti("checkpoint_every", c.checkpoint_every);
    c.validate();
    return c;
  }
};

}  // namespace zsmstm
