#include "zsmstm/model.hpp"

namespace zsmstm {

std::vector<ParamSpec> param_specs(const ModelConfig& cfg) {
  cfg.validate();
  std::vector<ParamSpec> out;
  auto add = [&](const std::string& name, Eigen::Index r, Eigen::Index c, Init k) {
    out.push_back({name, r, c, k});
  };
  const Eigen::Index D = cfg.d_model;
  const Eigen::Index F = Eigen::Index(cfg.ffn_mult) * D;

  auto attention = [&](const std::string& prefix, Eigen::Index width) {
    for (const char* part : {"q", "k", "v", "o"}) {
      add(prefix + "/" + part + "/w", width, width, Init::linear);
      add(prefix + "/" + part + "/b", 1, width, Init::zeros);
    }
  };
  auto lnorm = [&](const std::string& prefix, Eigen::Index width) {
    add(prefix + "/g", 1, width, Init::ones);
    add(prefix + "/b", 1, width, Init::zeros);
  };
  auto ffn = [&](const std::string& prefix) {
    add(prefix + "/ff1/w", D, F, Init::linear);
    add(prefix + "/ff1/b", 1, F, Init::zeros);
    add(prefix + "/ff2/w", F, D, Init::linear);
    add(prefix + "/ff2/b", 1, D, Init::zeros);
  };

  // the two speech towers share a layout, not weights
  for (const char* enc : {"content_speech", "style_speech"}) {
    std::string e = enc;
    add(e + "/proj/w", cfg.patch_dim(), D, Init::linear);
    add(e + "/proj/b", 1, D, Init::zeros);
    add(e + "/cls", 1, D, Init::normal02);
    add(e + "/pos", cfg.max_patches() + 1, D, Init::normal02);
    for (int l = 0; l < cfg.speech_layers; ++l) {
      std::string base = e + "/l" + std::to_string(l);
      attention(base + "/att", D);
      lnorm(base + "/ln1", D);
      ffn(base);
      lnorm(base + "/ln2", D);
    }
  }

  attention("content_att", cfg.d_att());
  lnorm("content_att/ln", cfg.d_att());
  attention("style_att", cfg.d_att());
  lnorm("style_att/ln", cfg.d_att());

  for (int l = 0; l < cfg.pose_lstm_layers; ++l) {
    std::string base = "pose_lstm/l" + std::to_string(l);
    Eigen::Index in = l == 0 ? cfg.pose_dim() : D;
    add(base + "/wx", in, 4 * D, Init::linear);
    add(base + "/wh", D, 4 * D, Init::orthogonal_gates);
    add(base + "/b", 1, 4 * D, Init::zeros);
  }

  add("gen/cond/w", cfg.d_att() + cfg.d_style(), D, Init::linear);
  add("gen/cond/b", 1, D, Init::zeros);
  add("gen/pose_emb/w", cfg.pose_dim(), D, Init::linear);
  add("gen/pose_emb/b", 1, D, Init::zeros);
  add("gen/start", 1, D, Init::normal02);
  add("gen/pos", cfg.frames, D, Init::normal02);
  for (int l = 0; l < cfg.decoder_layers; ++l) {
    std::string base = "gen/l" + std::to_string(l);
    attention(base + "/self", D);
    lnorm(base + "/ln1", D);
    attention(base + "/cross", D);
    lnorm(base + "/ln2", D);
    ffn(base);
    lnorm(base + "/ln3", D);
  }
  add("gen/out/w", D, cfg.pose_dim(), Init::linear);
  add("gen/out/b", 1, cfg.pose_dim(), Init::zeros);

  add("dis/l1/w", cfg.d_att(), D, Init::linear);
  add("dis/l1/b", 1, D, Init::zeros);
  add("dis/l2/w", D, D, Init::linear);
  add("dis/l2/b", 1, D, Init::zeros);
  add("dis/l3/w", D, cfg.d_style(), Init::linear);
  add("dis/l3/b", 1, cfg.d_style(), Init::zeros);
  return out;
}

}  // namespace zsmstm
