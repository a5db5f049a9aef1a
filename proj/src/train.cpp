#include "zsmstm/train.hpp"

#include <chrono>
#include <fstream>
#include <iostream>

#include "zsmstm/data.hpp"
#include "zsmstm/io_util.hpp"
#include "zsmstm/rng.hpp"

namespace zsmstm {

double loss_reconstruction(const Eigen::MatrixXf& pred, const Eigen::MatrixXf& target) {
  check(pred.rows() == target.rows() && pred.cols() == target.cols(), Err::dimension_mismatch,
        "reconstruction loss: shape mismatch");
  return (pred - target).norm();
}

double loss_reconstruction(const std::vector<Eigen::MatrixXf>& pred,
                           const std::vector<Eigen::MatrixXf>& target) {
  check(pred.size() == target.size() && !pred.empty(), Err::empty_input,
        "reconstruction loss: empty or mismatched batch");
  double acc = 0;
  for (size_t i = 0; i < pred.size(); ++i) acc += loss_reconstruction(pred[i], target[i]);
  return acc / double(pred.size());
}

double loss_discriminator(const Eigen::VectorXf& style_true, const Eigen::VectorXf& style_pred) {
  check(style_true.size() == style_pred.size(), Err::dimension_mismatch,
        "discriminator loss: style size mismatch");
  return (style_true - style_pred).norm();
}

double loss_discriminator(const std::vector<Eigen::VectorXf>& style_true,
                          const std::vector<Eigen::VectorXf>& style_pred) {
  check(style_true.size() == style_pred.size() && !style_true.empty(), Err::empty_input,
        "discriminator loss: empty or mismatched batch");
  double acc = 0;
  for (size_t i = 0; i < style_true.size(); ++i)
    acc += loss_discriminator(style_true[i], style_pred[i]);
  return acc / double(style_true.size());
}

Eigen::VectorXd normalize_style_error(const Eigen::VectorXd& errors, double eps) {
  check(errors.size() > 0, Err::empty_input, "normalize_style_error: empty batch");
  double mx = errors.maxCoeff();
  return errors / (mx + eps);
}

double loss_adversarial(const Eigen::VectorXd& errors, double eps) {
  Eigen::VectorXd en = normalize_style_error(errors, eps);
  return (1.0 - en.array()).square().mean();
}

// ---- fit ------------------------------------------------------------------------

namespace {

std::vector<SampleData<float>> to_sample_data(const std::vector<Sample>& split) {
  std::vector<SampleData<float>> out;
  out.reserve(split.size());
  for (const auto& s : split) out.push_back(SampleData<float>::from_sample(s));
  return out;
}

}  // namespace

FitResult fit(const ModelConfig& mc, const TrainConfig& tc, const NormalizationStats& stats,
              const std::vector<Sample>& train_norm, const std::vector<Sample>& valid_norm,
              const FitOptions& opt) {
  mc.validate();
  tc.validate();
  check(!train_norm.empty(), Err::empty_dataset, "fit: empty training split");
  check(!valid_norm.empty(), Err::empty_dataset, "fit: empty validation split");

  std::vector<SampleData<float>> train = to_sample_data(train_norm);
  std::vector<SampleData<float>> valid = to_sample_data(valid_norm);

  ParamStore<float> params;
  if (opt.resume) {
    check(opt.resume->has_trainer, Err::bad_config, "resume checkpoint lacks optimizer state");
    params = opt.resume->params;
    // shapes must match what this config would build
    ParamStore<float> fresh = init_params<float>(mc, tc.seed);
    check(fresh.count() == params.count(), Err::bad_config, "resume: parameter set mismatch");
    for (size_t i = 0; i < params.count(); ++i)
      check(fresh.name(i) == params.name(i) &&
                fresh.tensor(i).rows() == params.tensor(i).rows() &&
                fresh.tensor(i).cols() == params.tensor(i).cols(),
            Err::bad_config, "resume: parameter " + params.name(i) + " mismatch");
  } else {
    params = init_params<float>(mc, tc.seed);
  }

  Trainer<float> trainer(mc, tc, params);
  if (opt.resume) {
    trainer.step = opt.resume->step;
    trainer.adam.m = opt.resume->adam_m;
    trainer.adam.v = opt.resume->adam_v;
    check(trainer.adam.m.size() == params.count() && trainer.adam.v.size() == params.count(),
          Err::bad_config, "resume: optimizer state misaligned");
  }

  std::filesystem::create_directories(opt.out_dir);
  FitResult res;
  res.metrics_csv = opt.out_dir / "metrics.csv";
  res.validation_csv = opt.out_dir / "validation.csv";
  res.best_checkpoint = opt.out_dir / "best.ckpt";
  res.last_checkpoint = opt.out_dir / "last.ckpt";

  const bool resuming = opt.resume != nullptr;
  auto csv_mode = resuming ? (std::ios::out | std::ios::app) : std::ios::out;
  std::ofstream met(res.metrics_csv, csv_mode);
  std::ofstream val(res.validation_csv, csv_mode);
  check(met.good() && val.good(), Err::io_error, "fit: cannot open log files");
  if (!resuming) {
    met << "step,lambda,lr,loss_dis,loss_rec,loss_adv,loss_total\n";
    val << "epoch,step,val_loss_rec\n";
  }

  const uint64_t steps_per_epoch =
      (uint64_t(train.size()) + uint64_t(tc.batch_size) - 1) / uint64_t(tc.batch_size);
  const uint64_t total_steps = steps_per_epoch * uint64_t(tc.epochs);
  check(trainer.step <= total_steps, Err::bad_config, "resume: checkpoint is past the epoch budget");
  res.best_val = opt.resume && opt.resume->has_best ? opt.resume->best_val
                                                    : std::numeric_limits<double>::infinity();

  auto snapshot = [&](const std::filesystem::path& path) {
    Checkpoint ck;
    ck.config = mc;
    ck.stats = stats;
    ck.params = params;
    ck.has_trainer = true;
    ck.train_config = tc;
    ck.step = trainer.step;
    ck.has_best = std::isfinite(res.best_val);
    ck.best_val = res.best_val;
    ck.adam_m = trainer.adam.m;
    ck.adam_v = trainer.adam.v;
    save_checkpoint(ck, path);
  };

  uint64_t epoch = trainer.step / steps_per_epoch;
  uint64_t skip = trainer.step % steps_per_epoch;  // mid-epoch resume
  while (trainer.step < total_steps) {
    std::vector<std::vector<size_t>> batches =
        make_batches(train.size(), tc.batch_size, mix_seed(tc.seed, epoch));
    for (uint64_t b = skip; b < batches.size() && trainer.step < total_steps; ++b) {
      std::vector<const SampleData<float>*> batch;
      batch.reserve(batches[b].size());
      for (size_t idx : batches[b]) batch.push_back(&train[idx]);
      StepScalars s = trainer.train_step(batch);
      met << s.step << ',' << fmt_g9(float(s.lambda)) << ',' << fmt_g9(float(s.lr)) << ','
          << fmt_g9(float(s.loss_dis)) << ',' << fmt_g9(float(s.loss_rec)) << ','
          << fmt_g9(float(s.loss_adv)) << ',' << fmt_g9(float(s.loss_total)) << '\n';
      if (!opt.quiet && (s.step % 50 == 0 || trainer.step == total_steps))
        std::cerr << "step " << s.step << " rec=" << s.loss_rec << " dis=" << s.loss_dis
                  << " adv=" << s.loss_adv << " lambda=" << s.lambda << "\n";
    }
    skip = 0;
    double v = validation_loss(mc, params, valid);
    val << epoch << ',' << trainer.step << ',' << fmt_g9(float(v)) << '\n';
    if (v < res.best_val) {
      res.best_val = v;
      snapshot(res.best_checkpoint);
    }
    ++epoch;
    if (epoch % uint64_t(tc.checkpoint_every) == 0 || trainer.step >= total_steps)
      snapshot(res.last_checkpoint);
  }
  if (!std::filesystem::exists(res.last_checkpoint)) snapshot(res.last_checkpoint);
  if (!std::filesystem::exists(res.best_checkpoint)) snapshot(res.best_checkpoint);
  met.flush();
  val.flush();
  check(met.good() && val.good(), Err::io_error, "fit: failed writing log files");
  res.steps = trainer.step;
  return res;
}

// ---- gradcheck ------------------------------------------------------------------

namespace {

// deterministic toy batch in float64
std::vector<SampleData<double>> gradcheck_batch(const ModelConfig& mc, uint64_t seed, int batch) {
  std::vector<SampleData<double>> out;
  for (int b = 0; b < batch; ++b) {
    Rng rng(mix_seed(seed, 0x67636261u, uint64_t(b)));
    SampleData<double> s;
    const int W = 3;
    const int T = mc.frames;
    s.text = Mat<double>::NullaryExpr(W, mc.d_text, [&] { return rng.gaussian(); });
    s.pose = Mat<double>::NullaryExpr(T, 2 * mc.joints, [&] { return 0.5 * rng.gaussian(); });
    int mel_rows = mc.mel_max_frames;
    s.mels.resize(size_t(W));
    for (auto& m : s.mels)
      m = Mat<double>::NullaryExpr(mel_rows, mc.n_mels, [&] { return rng.gaussian(); });
    // word spans tile the frame axis
    s.spans = {{0, T / 3}, {T / 3, 2 * T / 3}, {2 * T / 3, T}};
    s.frame_word.resize(size_t(T));
    for (int t = 0; t < T; ++t)
      s.frame_word[size_t(t)] = t < T / 3 ? 0 : (t < 2 * T / 3 ? 1 : 2);
    out.push_back(std::move(s));
  }
  return out;
}

enum class Path { rec, dis, adv };

bool path_trains(Path p, const std::string& name) {
  switch (p) {
    case Path::rec: return !is_discriminator_param(name);
    case Path::dis: return is_discriminator_param(name);
    case Path::adv: return !is_discriminator_param(name) && !is_generator_param(name);
  }
  return false;
}

// reference values captured at the expansion point, value only: the batch-max
// error that normalizes the adversarial loss, and each sample's style
// embedding, which the confusion term treats as a fixed target
struct AdvReference {
  double max_err = 0;
  std::vector<Mat<double>> styles;
};

AdvReference adv_reference(const ModelConfig& mc, const ParamStore<double>& params,
                           const std::vector<SampleData<double>>& batch) {
  Graph<double> g(false);
  BoundParams<double> bp(g, params, nullptr);
  Forward<double> f(mc, g, bp);
  AdvReference ref;
  for (const auto& s : batch) {
    Val hs = f.encode_style(s);
    Val e = detail::sample_error_norm(g, f.discriminate(f.encode_content(s)), hs);
    ref.max_err = std::max(ref.max_err, double(g.scalar_value(e)));
    ref.styles.push_back(g.value(hs));
  }
  return ref;
}

// graph losses mirroring the two training phases.  The adversarial path holds
// the normalizer and the per-sample style targets at the values captured in
// `ref`: the training step treats both as per-step constants (stop-gradient),
// so the analytic pass and every finite-difference evaluation must see the
// same frozen values for the comparison to be meaningful.
Val build_loss(Path p, const ModelConfig& mc, Graph<double>& g, BoundParams<double>& bp,
               const std::vector<SampleData<double>>& batch, double lambda, double eps_norm,
               const AdvReference& ref) {
  Forward<double> f(mc, g, bp);
  std::vector<Val> errs;
  for (size_t k = 0; k < batch.size(); ++k) {
    const SampleData<double>& s = batch[k];
    Val hc = f.encode_content(s);
    if (p == Path::rec) {
      Val hs = f.encode_style(s);
      Val mem = f.prepare_memory(hc, hs, s.frame_word);
      Val pred = f.decode_with_memory(mem, s.pose);
      errs.push_back(detail::sample_error_norm(g, pred, g.leaf(s.pose)));
    } else if (p == Path::dis) {
      Val hs = f.encode_style(s);
      errs.push_back(detail::sample_error_norm(g, f.discriminate(hc), hs));
    } else {
      errs.push_back(detail::sample_error_norm(g, f.discriminate(hc), g.leaf(ref.styles[k])));
    }
  }
  Val stacked = g.stack_rows(errs);
  if (p == Path::adv) {
    Mat<double> mx(1, 1);
    mx(0, 0) = ref.max_err;
    Val scaled = g.div_by_scalar(stacked, g.leaf(std::move(mx)), eps_norm);
    Val one_minus = g.affine(scaled, -1.0, 1.0);
    Val l_adv = g.mean_rows(g.mul(one_minus, one_minus));
    return g.affine(l_adv, lambda, 0.0);
  }
  return g.mean_rows(stacked);
}

}  // namespace

GradcheckReport gradcheck(const ModelConfig& mc, uint64_t seed, double fd_step) {
  auto t0 = std::chrono::steady_clock::now();
  mc.validate();
  GradcheckReport rep;
  const double lambda = 0.7;  // fixed mid-ramp weight so the adv path is scaled
  const double eps_norm = 1e-8;
  std::vector<SampleData<double>> batch = gradcheck_batch(mc, seed, 2);
  ParamStore<double> params = init_params<double>(mc, mix_seed(seed, 0x70617273u));
  const AdvReference ref = adv_reference(mc, params, batch);

  for (Path p : {Path::rec, Path::dis, Path::adv}) {
    auto trains = [&](const std::string& n) { return path_trains(p, n); };

    // analytic pass
    Graph<double> g;
    BoundParams<double> bp(g, params, trains);
    Val loss = build_loss(p, mc, g, bp, batch, lambda, eps_norm, ref);
    g.backward(loss);
    std::vector<Mat<double>> analytic(params.count());
    for (size_t i = 0; i < params.count(); ++i) {
      analytic[i] = bp.grad_of(i);
      if (!trains(params.name(i)) && analytic[i].size() > 0)
        rep.frozen_absmax = std::max(rep.frozen_absmax, analytic[i].cwiseAbs().maxCoeff());
    }

    // value-only evaluation for finite differences
    auto eval = [&]() {
      Graph<double> ng(false);
      BoundParams<double> nbp(ng, params, nullptr);
      Val l = build_loss(p, mc, ng, nbp, batch, lambda, eps_norm, ref);
      return double(ng.scalar_value(l));
    };

    double& slot = p == Path::rec ? rep.max_rel_rec : (p == Path::dis ? rep.max_rel_dis : rep.max_rel_adv);
    for (size_t i = 0; i < params.count(); ++i) {
      if (!trains(params.name(i))) continue;
      Mat<double>& theta = params.tensor(i);
      Mat<double> fd(theta.rows(), theta.cols());
      for (Eigen::Index r = 0; r < theta.rows(); ++r)
        for (Eigen::Index c = 0; c < theta.cols(); ++c) {
          const double keep = theta(r, c);
          theta(r, c) = keep + fd_step;
          double up = eval();
          theta(r, c) = keep - fd_step;
          double dn = eval();
          theta(r, c) = keep;
          fd(r, c) = (up - dn) / (2 * fd_step);
          ++rep.elements_checked;
        }
      // per-tensor relative error: worst element over the larger of the two
      // gradient scales, floored so empty/near-zero tensors stay meaningful
      double denom = std::max({analytic[i].size() ? analytic[i].cwiseAbs().maxCoeff() : 0.0,
                               fd.size() ? fd.cwiseAbs().maxCoeff() : 0.0, 1e-5});
      double diff = (analytic[i] - fd).cwiseAbs().maxCoeff();
      slot = std::max(slot, diff / denom);
    }
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace zsmstm
