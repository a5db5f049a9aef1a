// Training oracles: hand-computed losses and schedules, optimizer algebra,
// finite-difference gradient verification, phase isolation, adversarial
// bounds, overfitting on a toy set, and bit-exact fit/resume.
#include <doctest.h>

#include <cmath>
#include <fstream>

#include "zsmstm/data.hpp"
#include "zsmstm/train.hpp"
#include "test_util.hpp"

using namespace zsmstm;
using zsmstm::testutil::TempDir;

namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.d_model = 16;
  c.d_text = 8;
  c.n_mels = 8;
  c.patch_size = 8;
  c.patch_stride = 4;
  c.speech_layers = 1;
  c.speech_heads = 2;
  c.content_att_heads = 4;
  c.style_att_heads = 4;
  c.pose_lstm_layers = 3;
  c.decoder_layers = 1;
  c.decoder_heads = 2;
  c.joints = 3;
  c.frames = 9;
  c.mel_max_frames = 8;
  c.ffn_mult = 2;
  return c;
}

// hand-rolled two-word sample compatible with tiny_config()
Sample toy_interval(const ModelConfig& mc, uint64_t seed) {
  Rng rng(seed);
  Sample s;
  s.speaker_id = "toy";
  s.fps = 15.0;
  s.pose = Eigen::MatrixXf::NullaryExpr(mc.frames, mc.pose_dim(),
                                        [&] { return float(0.4 * rng.gaussian()); });
  s.alignment = {{0, 4}, {4, mc.frames}};
  for (const Span& sp : s.alignment) {
    WordFeature w;
    w.text_vec =
        Eigen::MatrixXf::NullaryExpr(1, mc.d_text, [&] { return float(rng.gaussian()); });
    int mel_rows = 2 * (sp.end - sp.begin);
    w.mel = Eigen::MatrixXf::NullaryExpr(mel_rows, mc.n_mels,
                                         [&] { return float(rng.gaussian()); });
    s.words.push_back(std::move(w));
  }
  return s;
}

std::vector<SampleData<float>> toy_batch(const ModelConfig& mc, uint64_t seed, int n) {
  std::vector<SampleData<float>> out;
  for (int i = 0; i < n; ++i)
    out.push_back(SampleData<float>::from_sample(toy_interval(mc, seed + uint64_t(i))));
  return out;
}

size_t count_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

}  // namespace

TEST_CASE("loss formulas match hand-computed values") {
  Eigen::MatrixXf pred(2, 2), target(2, 2);
  pred << 3, 4, 0, 0;
  target.setZero();
  CHECK(loss_reconstruction(pred, target) == doctest::Approx(5.0).epsilon(1e-9));
  std::vector<Eigen::MatrixXf> bp = {pred, target}, bt = {target, target};
  CHECK(loss_reconstruction(bp, bt) == doctest::Approx(2.5).epsilon(1e-9));

  Eigen::VectorXf a(2), b(2);
  a << 3, 4;
  b.setZero();
  CHECK(loss_discriminator(a, b) == doctest::Approx(5.0).epsilon(1e-9));
  std::vector<Eigen::VectorXf> va = {a, a}, vb = {b, a};
  CHECK(loss_discriminator(va, vb) == doctest::Approx(2.5).epsilon(1e-9));

  Eigen::VectorXd errs(3);
  errs << 2, 4, 8;
  Eigen::VectorXd en = normalize_style_error(errs, 1e-8);
  CHECK(en(0) == doctest::Approx(0.25).epsilon(1e-8));
  CHECK(en(1) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(en(2) == doctest::Approx(1.0).epsilon(1e-8));
  // mean of (1-0.25)^2, (1-0.5)^2, (1-1)^2
  CHECK(loss_adversarial(errs, 1e-8) == doctest::Approx(0.8125 / 3.0).epsilon(1e-7));
  CHECK(loss_total(1.5, 0.25, 0.4) == doctest::Approx(1.6).epsilon(1e-12));
}

TEST_CASE("adversarial loss is bounded in [0,1] for any error batch") {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    int n = 1 + int(rng.uniform_int(0, 7));
    Eigen::VectorXd errs =
        Eigen::VectorXd::NullaryExpr(n, [&] { return std::abs(rng.gaussian()) * 10.0; });
    double l = loss_adversarial(errs, 1e-8);
    CHECK(l >= 0.0);
    CHECK(l <= 1.0);
  }
  // all-zero errors: normalized by eps alone, loss pinned at 1
  Eigen::VectorXd zeros = Eigen::VectorXd::Zero(4);
  CHECK(loss_adversarial(zeros, 1e-8) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("schedules follow the ramp and warmup formulas") {
  TrainConfig tc;
  tc.lambda_step = 0.01;
  tc.lambda_max = 1.0;
  CHECK(lambda_at(0, tc) == 0.0);
  CHECK(lambda_at(50, tc) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(lambda_at(100, tc) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lambda_at(2500, tc) == 1.0);  // capped
  TrainConfig off = tc;
  off.adversarial = false;
  CHECK(lambda_at(500, off) == 0.0);

  TrainConfig lr;
  lr.initial_lr = 2e-3;
  lr.warmup_steps = 100;
  CHECK(lr_at(50, lr) == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(lr_at(100, lr) == doctest::Approx(2e-3).epsilon(1e-12));
  CHECK(lr_at(400, lr) == doctest::Approx(1e-3).epsilon(1e-12));   // sqrt(100/400) = 1/2
  CHECK(lr_at(1, lr) == doctest::Approx(2e-5).epsilon(1e-12));
  CHECK_THROWS_AS(lr_at(0, lr), Error);
}

TEST_CASE("one optimizer update reproduces the closed-form step") {
  // single 1x1 parameter, loss = 2 * theta, so grad = 2 exactly
  ParamStore<float> store;
  store.add("w", 1, 1);
  store.tensor(0)(0, 0) = 1.0f;
  TrainConfig tc;
  tc.beta1 = 0.9;
  tc.beta2 = 0.99;
  tc.adam_eps = 1e-8;

  Adam<float> adam;
  adam.init(store);
  Graph<float> g;
  BoundParams<float> bp(g, store, [](const std::string&) { return true; });
  Val loss = g.affine(bp("w"), 2.0f, 0.0f);
  g.backward(loss);

  adam.update(store, bp, [](const std::string&) { return true; }, 0.1, 1, tc);
  // mhat = g, vhat = g^2 -> theta -= lr * g / (|g| + eps) ~= 1 - 0.1
  CHECK(store.tensor(0)(0, 0) == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(adam.m[0](0, 0) == doctest::Approx(0.2).epsilon(1e-6));    // (1-b1)*g
  CHECK(adam.v[0](0, 0) == doctest::Approx(0.04).epsilon(1e-6));   // (1-b2)*g^2
}

TEST_CASE("analytic gradients match finite differences on every loss path") {
  GradcheckReport rep = gradcheck(tiny_config(), 1234);
  CAPTURE(rep.max_rel_rec);
  CAPTURE(rep.max_rel_dis);
  CAPTURE(rep.max_rel_adv);
  CHECK(rep.max_rel_rec <= 1e-4);
  CHECK(rep.max_rel_dis <= 1e-4);
  CHECK(rep.max_rel_adv <= 1e-4);
  CHECK(rep.frozen_absmax == 0.0);
  CHECK(rep.elements_checked > 10000);
  MESSAGE("gradcheck: ", rep.elements_checked, " elements in ", rep.seconds, "s, worst rel ",
          rep.worst());
}

TEST_CASE("training steps ramp lambda, bound the adversarial term and freeze the right groups") {
  ModelConfig mc = tiny_config();
  TrainConfig tc;
  tc.seed = 5;
  tc.initial_lr = 1e-3;
  tc.warmup_steps = 50;
  tc.lambda_step = 0.25;
  tc.lambda_max = 1.0;
  tc.batch_size = 2;

  ParamStore<float> params = init_params<float>(mc, tc.seed);
  Trainer<float> tr(mc, tc, params);
  auto data = toy_batch(mc, 900, 2);
  std::vector<const SampleData<float>*> batch = {&data[0], &data[1]};

  for (int stepi = 0; stepi < 6; ++stepi) {
    StepDebug dbg;
    StepScalars s = tr.train_step(batch, &dbg);
    CHECK(s.step == uint64_t(stepi));
    CHECK(s.lambda == doctest::Approx(std::min(0.25 * stepi, 1.0)).epsilon(1e-12));
    CHECK(s.lr == doctest::Approx(lr_at(uint64_t(stepi) + 1, tc)).epsilon(1e-12));
    CHECK(s.loss_adv >= 0.0);
    CHECK(s.loss_adv <= 1.0);
    CHECK(s.loss_total == doctest::Approx(s.loss_rec + s.lambda * s.loss_adv).epsilon(1e-6));
    CHECK(std::isfinite(s.loss_dis));

    // phase 1 only touches the discriminator; phase 2 never touches it
    double p1_other = 0, p1_dis = 0, p2_dis = 0, p2_other = 0;
    for (size_t i = 0; i < params.count(); ++i) {
      bool dis = is_discriminator_param(params.name(i));
      p1_other += dis ? 0 : dbg.phase1_grad_absmax[i];
      p1_dis += dis ? dbg.phase1_grad_absmax[i] : 0;
      p2_dis += dis ? dbg.phase2_grad_absmax[i] : 0;
      p2_other += dis ? 0 : dbg.phase2_grad_absmax[i];
    }
    CHECK(p1_other == 0.0);  // frozen exactly, not merely small
    CHECK(p2_dis == 0.0);
    CHECK(p1_dis > 0.0);
    CHECK(p2_other > 0.0);
  }
  CHECK(tr.step == 6);
}

TEST_CASE("without the adversarial game the step reduces to reconstruction") {
  ModelConfig mc = tiny_config();
  TrainConfig tc;
  tc.adversarial = false;
  tc.batch_size = 1;
  ParamStore<float> params = init_params<float>(mc, 3);
  Trainer<float> tr(mc, tc, params);
  auto data = toy_batch(mc, 901, 1);
  StepDebug dbg;
  StepScalars s = tr.train_step({&data[0]}, &dbg);
  CHECK(s.lambda == 0.0);
  CHECK(s.loss_dis == 0.0);
  CHECK(s.loss_adv == 0.0);
  CHECK(s.loss_total == s.loss_rec);
  CHECK(dbg.phase1_grad_absmax.empty());  // phase 1 never ran
}

TEST_CASE("a few hundred plain steps overfit a toy batch") {
  ModelConfig mc = tiny_config();
  TrainConfig tc;
  tc.adversarial = false;
  tc.initial_lr = 2e-3;
  tc.warmup_steps = 60;
  tc.seed = 11;
  ParamStore<float> params = init_params<float>(mc, tc.seed);
  Trainer<float> tr(mc, tc, params);
  auto data = toy_batch(mc, 902, 2);
  std::vector<const SampleData<float>*> batch = {&data[0], &data[1]};

  double first = 0, last = 0;
  for (int i = 0; i < 200; ++i) {
    StepScalars s = tr.train_step(batch);
    if (i == 0) first = s.loss_rec;
    last = s.loss_rec;
  }
  CHECK(last < 0.5 * first);
  MESSAGE("overfit: rec ", first, " -> ", last);
}

TEST_CASE("fit writes logs and checkpoints, and resume is bit-exact") {
  ModelConfig mc = tiny_config();
  TrainConfig tc;
  tc.seed = 21;
  tc.epochs = 4;
  tc.batch_size = 2;
  tc.initial_lr = 5e-4;
  tc.warmup_steps = 10;
  tc.lambda_step = 0.1;

  std::vector<Sample> raw;
  for (int i = 0; i < 4; ++i) raw.push_back(toy_interval(mc, 300 + uint64_t(i)));
  NormalizationStats stats = fit_normalization(raw);
  std::vector<Sample> train, valid;
  for (int i = 0; i < 3; ++i) train.push_back(normalize(raw[size_t(i)], stats));
  valid.push_back(normalize(raw[3], stats));

  TempDir a("fit_a"), b("fit_b"), c("fit_c");

  FitOptions oa;
  oa.out_dir = a.path;
  FitResult ra = fit(mc, tc, stats, train, valid, oa);
  CHECK(ra.steps == 8);  // ceil(3/2) = 2 steps/epoch * 4 epochs
  CHECK(std::filesystem::exists(ra.best_checkpoint));
  CHECK(std::filesystem::exists(ra.last_checkpoint));
  CHECK(count_lines(ra.metrics_csv) == 9);     // header + one row per step
  CHECK(count_lines(ra.validation_csv) == 5);  // header + one row per epoch

  // identical run -> identical weights
  FitOptions ob;
  ob.out_dir = b.path;
  FitResult rb = fit(mc, tc, stats, train, valid, ob);
  Checkpoint la = load_checkpoint(ra.last_checkpoint);
  Checkpoint lb = load_checkpoint(rb.last_checkpoint);
  CHECK(params_hash(la.params) == params_hash(lb.params));
  CHECK(la.step == 8);

  // 2 epochs, then resume for 2 more: same bytes as the straight 4-epoch run
  TrainConfig half = tc;
  half.epochs = 2;
  FitOptions oc;
  oc.out_dir = c.path;
  FitResult rc_half = fit(mc, half, stats, train, valid, oc);
  CHECK(rc_half.steps == 4);
  Checkpoint mid = load_checkpoint(rc_half.last_checkpoint);
  CHECK(mid.has_trainer);
  FitOptions od;
  od.out_dir = c.path;
  od.resume = &mid;
  FitResult rc = fit(mc, tc, stats, train, valid, od);
  CHECK(rc.steps == 8);
  Checkpoint lc = load_checkpoint(rc.last_checkpoint);
  CHECK(params_hash(lc.params) == params_hash(la.params));
  CHECK(lc.adam_m.size() == la.adam_m.size());
  bool moments_equal = true;
  for (size_t i = 0; i < la.adam_m.size(); ++i)
    moments_equal = moments_equal && la.adam_m[i] == lc.adam_m[i] && la.adam_v[i] == lc.adam_v[i];
  CHECK(moments_equal);
  CHECK(count_lines(c.path / "metrics.csv") == 9);  // appended, no duplicate header
}

TEST_CASE("validation loss is a plain mean over the split") {
  ModelConfig mc = tiny_config();
  ParamStore<float> params = init_params<float>(mc, 31);
  auto data = toy_batch(mc, 903, 3);
  double v3 = validation_loss(mc, params, data);
  std::vector<SampleData<float>> one = {data[0]};
  std::vector<SampleData<float>> two = {data[1], data[2]};
  double v1 = validation_loss(mc, params, one);
  double v2 = validation_loss(mc, params, two);
  CHECK(v3 == doctest::Approx((v1 + 2 * v2) / 3.0).epsilon(1e-9));
}
