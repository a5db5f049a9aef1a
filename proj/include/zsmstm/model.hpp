#pragma once
// The gesture-synthesis network: a patch-transformer speech encoder feeding
// a text+speech content encoder, a multimodal style encoder (text+speech
// attention pooled, pose LSTM), a transformer decoder that generates pose
// conditioned on content + style, and an MLP discriminator that tries to
// recover the style embedding from the content sequence.  All forwards are
// graph builders so one implementation serves training, inference and
// finite-difference checking.

#include <cstdio>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "zsmstm/config.hpp"
#include "zsmstm/data.hpp"
#include "zsmstm/graph.hpp"
#include "zsmstm/io_util.hpp"
#include "zsmstm/rng.hpp"

namespace zsmstm {

// ---- parameter registry -------------------------------------------------------

enum class Init {
  linear,            // uniform +-1/sqrt(fan_in), fan_in = rows
  zeros,
  ones,
  normal02,          // N(0, 0.02): embeddings, cls/start tokens, positions
  orthogonal_gates,  // H x 4H recurrent kernel, each H x H gate block orthogonal
};

struct ParamSpec {
  std::string name;
  Eigen::Index rows = 0, cols = 0;
  Init init = Init::linear;
};

// Complete parameter list for a config, in a fixed, stable order.
std::vector<ParamSpec> param_specs(const ModelConfig& cfg);

template <typename S>
class ParamStore {
 public:
  size_t add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    check(!index_.count(name), Err::bad_config, "duplicate parameter '" + name + "'");
    index_[name] = names_.size();
    names_.push_back(name);
    tensors_.emplace_back(Mat<S>::Zero(rows, cols));
    return names_.size() - 1;
  }

  size_t count() const { return names_.size(); }
  const std::string& name(size_t i) const { return names_.at(i); }
  Mat<S>& tensor(size_t i) { return tensors_.at(i); }
  const Mat<S>& tensor(size_t i) const { return tensors_.at(i); }

  bool has(const std::string& name) const { return index_.count(name) > 0; }
  size_t index_of(const std::string& name) const {
    auto it = index_.find(name);
    check(it != index_.end(), Err::bad_config, "unknown parameter '" + name + "'");
    return it->second;
  }
  Mat<S>& at(const std::string& name) { return tensors_[index_of(name)]; }
  const Mat<S>& at(const std::string& name) const { return tensors_[index_of(name)]; }

  size_t total_scalars() const {
    size_t n = 0;
    for (const auto& t : tensors_) n += size_t(t.size());
    return n;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Mat<S>> tensors_;
  std::unordered_map<std::string, size_t> index_;
};

// discriminator parameters form their own optimization group
inline bool is_discriminator_param(const std::string& name) {
  return name.rfind("dis/", 0) == 0;
}

// generator (decoder) parameters; everything else non-dis is an encoder
inline bool is_generator_param(const std::string& name) {
  return name.rfind("gen/", 0) == 0;
}

namespace detail {

// draws are made in double so float and double stores see the same stream
template <typename S>
void fill_init(Mat<S>& t, Init kind, Rng& rng) {
  switch (kind) {
    case Init::zeros:
      t.setZero();
      break;
    case Init::ones:
      t.setOnes();
      break;
    case Init::linear: {
      double bound = 1.0 / std::sqrt(double(t.rows()));
      for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = S(rng.uniform(-bound, bound));
      break;
    }
    case Init::normal02:
      for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = S(rng.gaussian() * 0.02);
      break;
    case Init::orthogonal_gates: {
      const Eigen::Index H = t.rows();
      check(t.cols() % H == 0, Err::bad_config, "gate kernel cols must be a multiple of rows");
      for (Eigen::Index blk = 0; blk < t.cols() / H; ++blk) {
        Eigen::MatrixXd gauss(H, H);
        for (Eigen::Index i = 0; i < gauss.size(); ++i) gauss(i) = rng.gaussian();
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
        Eigen::MatrixXd q = qr.householderQ();
        Eigen::MatrixXd r = qr.matrixQR().template triangularView<Eigen::Upper>();
        for (Eigen::Index c = 0; c < H; ++c)
          if (r(c, c) < 0) q.col(c) = -q.col(c);  // fix the sign ambiguity
        t.block(0, blk * H, H, H) = q.cast<S>();
      }
      break;
    }
  }
}

}  // namespace detail

template <typename S>
ParamStore<S> init_params(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  ParamStore<S> store;
  auto specs = param_specs(cfg);
  for (const auto& sp : specs) store.add(sp.name, sp.rows, sp.cols);
  for (size_t i = 0; i < specs.size(); ++i) {
    // per-tensor stream: insensitive to registration order changes elsewhere
    Rng rng(mix_seed(seed, fnv1a64(specs[i].name.data(), specs[i].name.size())));
    detail::fill_init(store.tensor(i), specs[i].init, rng);
  }
  return store;
}

// ---- model-side view of a data sample -------------------------------------------

template <typename S>
struct SampleData {
  Mat<S> text;                // W x d_text
  std::vector<Mat<S>> mels;   // per word, T_w x n_mels
  Mat<S> pose;                // T x 2J
  std::vector<Span> spans;
  std::vector<int> frame_word;  // T, span lookup

  static SampleData<S> from_sample(const Sample& s) {
    validate_alignment(s);
    SampleData<S> d;
    const int W = s.word_count();
    d.text.resize(W, s.words[0].text_vec.cols());
    for (int w = 0; w < W; ++w) d.text.row(w) = s.words[size_t(w)].text_vec.row(0).template cast<S>();
    d.mels.reserve(size_t(W));
    for (const auto& w : s.words) d.mels.push_back(w.mel.template cast<S>());
    d.pose = s.pose.template cast<S>();
    d.spans = s.alignment;
    d.frame_word = frame_to_word(s.alignment, s.frame_count());
    return d;
  }
};

// mel [T_w x n_mels] -> patches [P x patch*patch]; patches run time-major
// (all frequency offsets of one time offset, then the next), each patch
// flattened row-major as (time rows) x (freq cols)
template <typename S>
Mat<S> patchify(const Mat<S>& mel, int patch, int stride) {
  check(int(mel.cols()) >= patch, Err::dimension_mismatch, "mel has fewer bins than patch_size");
  check(int(mel.rows()) >= patch, Err::too_short,
        "mel segment shorter than patch_size (" + std::to_string(mel.rows()) + " < " +
            std::to_string(patch) + " frames)");
  const int f_steps = (int(mel.cols()) - patch) / stride + 1;
  const int t_steps = (int(mel.rows()) - patch) / stride + 1;
  Mat<S> out(f_steps * t_steps, patch * patch);
  for (int ti = 0; ti < t_steps; ++ti)
    for (int fi = 0; fi < f_steps; ++fi) {
      const int p = ti * f_steps + fi;
      for (int dt = 0; dt < patch; ++dt)
        for (int df = 0; df < patch; ++df)
          out(p, dt * patch + df) = mel(ti * stride + dt, fi * stride + df);
    }
  return out;
}

// ---- parameter binding -----------------------------------------------------------

// Lazily binds store tensors into a graph as aliasing leaves.  The
// trainable predicate decides which group receives gradients this phase;
// everything else participates in the forward value only.
template <typename S>
class BoundParams {
 public:
  BoundParams(Graph<S>& g, const ParamStore<S>& store,
              std::function<bool(const std::string&)> trainable)
      : g_(g), store_(store), trainable_(std::move(trainable)), cache_(store.count()) {}

  Val operator()(const std::string& name) {
    size_t idx = store_.index_of(name);
    if (!cache_[idx].valid())
      cache_[idx] = g_.leaf_ref(&store_.tensor(idx), trainable_ && trainable_(name));
    return cache_[idx];
  }

  bool is_bound(size_t idx) const { return cache_[idx].valid(); }

  // gradient for parameter idx after backward(); zeros when the parameter
  // was never bound or received nothing
  Mat<S> grad_of(size_t idx) const {
    if (!cache_[idx].valid()) {
      const auto& t = store_.tensor(idx);
      return Mat<S>::Zero(t.rows(), t.cols());
    }
    return g_.grad(cache_[idx]);
  }

  const ParamStore<S>& store() const { return store_; }

 private:
  Graph<S>& g_;
  const ParamStore<S>& store_;
  std::function<bool(const std::string&)> trainable_;
  std::vector<Val> cache_;
};

// ---- forward passes ---------------------------------------------------------------

template <typename S>
class Forward {
 public:
  static constexpr S kLnEps = S(1e-5);

  Forward(const ModelConfig& cfg, Graph<S>& g, BoundParams<S>& p) : cfg_(cfg), g_(g), p_(p) {}

  // multi-head attention: queries from q_src, keys/values from kv_src,
  // optional additive mask on the score matrix
  Val mha(const std::string& prefix, Val q_src, Val kv_src, int heads, const Mat<S>* mask) {
    const Eigen::Index d = g_.value(q_src).cols();
    check(d % heads == 0, Err::bad_config, "attention width not divisible by head count");
    const Eigen::Index dh = d / heads;
    Val q = g_.linear(q_src, p_(prefix + "/q/w"), p_(prefix + "/q/b"));
    Val k = g_.linear(kv_src, p_(prefix + "/k/w"), p_(prefix + "/k/b"));
    Val v = g_.linear(kv_src, p_(prefix + "/v/w"), p_(prefix + "/v/b"));
    const S scale = S(1) / S(std::sqrt(double(dh)));
    Val ctx;
    for (int h = 0; h < heads; ++h) {
      Val qh = g_.slice_cols(q, h * dh, dh);
      Val kh = g_.slice_cols(k, h * dh, dh);
      Val vh = g_.slice_cols(v, h * dh, dh);
      Val att = g_.softmax_rows(g_.matmul_nt(qh, kh, scale), mask);
      Val ch = g_.matmul(att, vh);
      ctx = h == 0 ? ch : g_.concat_cols(ctx, ch);
    }
    return g_.linear(ctx, p_(prefix + "/o/w"), p_(prefix + "/o/b"));
  }

  // self-attention + feed-forward, post-norm residuals (speech encoder and
  // decoder style)
  Val encoder_block(const std::string& prefix, Val x, int heads) {
    Val a = g_.layer_norm(g_.add(x, mha(prefix + "/att", x, x, heads, nullptr)),
                          p_(prefix + "/ln1/g"), p_(prefix + "/ln1/b"), kLnEps);
    Val f = g_.linear(g_.gelu(g_.linear(a, p_(prefix + "/ff1/w"), p_(prefix + "/ff1/b"))),
                      p_(prefix + "/ff2/w"), p_(prefix + "/ff2/b"));
    return g_.layer_norm(g_.add(a, f), p_(prefix + "/ln2/g"), p_(prefix + "/ln2/b"), kLnEps);
  }

  // one word's mel segment -> 1 x d_model CLS embedding.  enc selects the
  // content or style speech tower.
  Val speech_encode(const std::string& enc, const Mat<S>& mel) {
    Mat<S> patches = patchify(mel, cfg_.patch_size, cfg_.patch_stride);
    const Eigen::Index P = patches.rows();
    check(P <= cfg_.max_patches(), Err::dimension_mismatch,
          "mel segment yields " + std::to_string(P) + " patches, positions sized for " +
              std::to_string(cfg_.max_patches()));
    Val z = g_.linear(g_.leaf(std::move(patches)), p_(enc + "/proj/w"), p_(enc + "/proj/b"));
    Val tok = g_.stack_rows({p_(enc + "/cls"), z});
    tok = g_.add(tok, g_.slice_rows(p_(enc + "/pos"), 0, P + 1));
    for (int l = 0; l < cfg_.speech_layers; ++l)
      tok = encoder_block(enc + "/l" + std::to_string(l), tok, cfg_.speech_heads);
    return g_.slice_rows(tok, 0, 1);
  }

  // W x (d_model + d_text) content rows: per-word speech embedding next to
  // the word's text vector, mixed by one residual self-attention layer
  Val encode_content(const SampleData<S>& s) {
    Val text = g_.leaf(s.text);
    std::vector<Val> rows;
    rows.reserve(s.mels.size());
    for (size_t w = 0; w < s.mels.size(); ++w) {
      Val sv = speech_encode("content_speech", s.mels[w]);
      rows.push_back(g_.concat_cols(sv, g_.slice_rows(text, Eigen::Index(w), 1)));
    }
    Val x = g_.stack_rows(rows);
    Val a = g_.add(x, mha("content_att", x, x, cfg_.content_att_heads, nullptr));
    return g_.layer_norm(a, p_("content_att/ln/g"), p_("content_att/ln/b"), kLnEps);
  }

  // 1 x (d_att + d_model) style vector: pooled text+speech attention rows
  // concatenated with the last hidden state of a pose LSTM
  Val encode_style(const SampleData<S>& s) {
    Val text = g_.leaf(s.text);
    std::vector<Val> rows;
    rows.reserve(s.mels.size());
    for (size_t w = 0; w < s.mels.size(); ++w) {
      Val sv = speech_encode("style_speech", s.mels[w]);
      rows.push_back(g_.concat_cols(g_.slice_rows(text, Eigen::Index(w), 1), sv));
    }
    Val x = g_.stack_rows(rows);
    Val a = g_.add(x, mha("style_att", x, x, cfg_.style_att_heads, nullptr));
    a = g_.layer_norm(a, p_("style_att/ln/g"), p_("style_att/ln/b"), kLnEps);
    Val pooled = g_.mean_rows(a);
    Val pose_h = pose_lstm(s.pose);
    return g_.concat_cols(pooled, pose_h);
  }

  // stacked LSTM over pose frames; returns the top layer's last hidden state
  Val pose_lstm(const Mat<S>& pose) {
    check(int(pose.rows()) >= 1, Err::too_short, "empty pose track");
    const Eigen::Index H = cfg_.d_model;
    Val pose_leaf = g_.leaf(pose);
    std::vector<Val> h(size_t(cfg_.pose_lstm_layers)), c(size_t(cfg_.pose_lstm_layers));
    Val zero = g_.leaf(Mat<S>::Zero(1, H));
    for (auto& v : h) v = zero;
    for (auto& v : c) v = zero;
    for (Eigen::Index t = 0; t < pose.rows(); ++t) {
      Val x = g_.slice_rows(pose_leaf, t, 1);
      for (int l = 0; l < cfg_.pose_lstm_layers; ++l) {
        const std::string base = "pose_lstm/l" + std::to_string(l);
        Val gates = g_.lstm_gates(x, h[size_t(l)], p_(base + "/wx"), p_(base + "/wh"),
                                  p_(base + "/b"));
        Val i = g_.sigmoid(g_.slice_cols(gates, 0, H));
        Val f = g_.sigmoid(g_.slice_cols(gates, H, H));
        Val gg = g_.tanh_(g_.slice_cols(gates, 2 * H, H));
        Val o = g_.sigmoid(g_.slice_cols(gates, 3 * H, H));
        c[size_t(l)] = g_.add(g_.mul(f, c[size_t(l)]), g_.mul(i, gg));
        h[size_t(l)] = g_.mul(o, g_.tanh_(c[size_t(l)]));
        x = h[size_t(l)];
      }
    }
    return h.back();
  }

  // frame-rate conditioning sequence: style joins every content row, the
  // pair is projected to the decoder width at word rate, and each word's
  // row is then repeated across its frame span (projecting before the
  // upsample keeps all frames of a word bitwise identical)
  Val prepare_memory(Val content, Val style, const std::vector<int>& frame_word) {
    check(int(frame_word.size()) == cfg_.frames, Err::dimension_mismatch,
          "frame/word lookup must cover every frame");
    const Eigen::Index W = g_.value(content).rows();
    Val srep = g_.gather_rows(style, std::vector<int>(size_t(W), 0));
    Val cond = g_.concat_cols(content, srep);
    Val proj = g_.linear(cond, p_("gen/cond/w"), p_("gen/cond/b"));
    return g_.gather_rows(proj, frame_word);
  }

  // teacher-forced decode: embeds the target shifted right one frame behind
  // a learned start token, causal self-attention, cross-attention into the
  // conditioning memory, linear head to pose coordinates
  Val decode_with_memory(Val memory, const Mat<S>& target) {
    const Eigen::Index T = cfg_.frames;
    check(target.rows() == T && target.cols() == cfg_.pose_dim(), Err::dimension_mismatch,
          "decoder target must be frames x 2*joints");
    check(g_.value(memory).rows() == T, Err::dimension_mismatch, "memory must be frame-rate");
    Val temb = g_.linear(g_.leaf(target), p_("gen/pose_emb/w"), p_("gen/pose_emb/b"));
    Val shifted = g_.stack_rows({p_("gen/start"), g_.slice_rows(temb, 0, T - 1)});
    Val x = g_.add(shifted, p_("gen/pos"));
    const Mat<S>& mask = causal_mask();
    for (int l = 0; l < cfg_.decoder_layers; ++l) {
      const std::string base = "gen/l" + std::to_string(l);
      Val a = g_.layer_norm(g_.add(x, mha(base + "/self", x, x, cfg_.decoder_heads, &mask)),
                            p_(base + "/ln1/g"), p_(base + "/ln1/b"), kLnEps);
      Val b = g_.layer_norm(g_.add(a, mha(base + "/cross", a, memory, cfg_.decoder_heads, nullptr)),
                            p_(base + "/ln2/g"), p_(base + "/ln2/b"), kLnEps);
      Val f = g_.linear(g_.gelu(g_.linear(b, p_(base + "/ff1/w"), p_(base + "/ff1/b"))),
                        p_(base + "/ff2/w"), p_(base + "/ff2/b"));
      x = g_.layer_norm(g_.add(b, f), p_(base + "/ln3/g"), p_(base + "/ln3/b"), kLnEps);
    }
    return g_.linear(x, p_("gen/out/w"), p_("gen/out/b"));
  }

  // inference-time decode: feed the model its own outputs frame by frame.
  // Row t of a teacher-forced pass only sees target rows < t (causal mask),
  // so rerunning the same builder on the partially filled track reproduces
  // step-wise generation exactly with a single decoder implementation.
  Mat<S> decode_autoregressive(Val memory) {
    const Eigen::Index T = cfg_.frames;
    Mat<S> out = Mat<S>::Zero(T, cfg_.pose_dim());
    for (Eigen::Index t = 0; t < T; ++t) {
      Val pred = decode_with_memory(memory, out);
      out.row(t) = g_.value(pred).row(t);
    }
    return out;
  }

  // style recovery head the fader game trains against: mean-pooled content
  // rows through a 2-hidden-layer MLP up to the style width
  Val discriminate(Val content) {
    Val pooled = g_.mean_rows(content);
    Val h1 = g_.gelu(g_.linear(pooled, p_("dis/l1/w"), p_("dis/l1/b")));
    Val h2 = g_.gelu(g_.linear(h1, p_("dis/l2/w"), p_("dis/l2/b")));
    return g_.linear(h2, p_("dis/l3/w"), p_("dis/l3/b"));
  }

 private:
  const Mat<S>& causal_mask() {
    if (mask_.rows() != cfg_.frames) {
      const S ninf = -std::numeric_limits<S>::infinity();
      mask_ = Mat<S>::Zero(cfg_.frames, cfg_.frames);
      for (Eigen::Index r = 0; r < cfg_.frames; ++r)
        for (Eigen::Index c = r + 1; c < cfg_.frames; ++c) mask_(r, c) = ninf;
    }
    return mask_;
  }

  const ModelConfig& cfg_;
  Graph<S>& g_;
  BoundParams<S>& p_;
  Mat<S> mask_;
};

}  // namespace zsmstm
