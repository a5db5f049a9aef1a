// Command-line driver.  Subcommands cover the whole pipeline: synthesize a
// dataset, train, extract style embeddings, transfer, dump ground-truth
// poses, score transfers, and export BODY25 keypoints.  Every command drops
// a run.json (resolved options + input content hashes + outputs, no
// timestamps) so runs are auditable and reruns comparable.
#include "zsmstm/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "zsmstm/body25.hpp"
#include "zsmstm/checkpoint.hpp"
#include "zsmstm/config.hpp"
#include "zsmstm/data.hpp"
#include "zsmstm/infer.hpp"
#include "zsmstm/io_util.hpp"
#include "zsmstm/metrics.hpp"
#include "zsmstm/synth.hpp"
#include "zsmstm/train.hpp"

namespace zsmstm::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- provenance ------------------------------------------------------------

class RunRecord {
 public:
  RunRecord(std::string command, fs::path path) : path_(std::move(path)) {
    j_["command"] = std::move(command);
    j_["inputs"] = json::object();
    j_["outputs"] = json::array();
  }

  void set_options(json opts) { j_["options"] = std::move(opts); }
  void add_input(const fs::path& p) { j_["inputs"][p.string()] = hex64(fnv1a64_file(p)); }
  void add_output(const fs::path& p) { j_["outputs"].push_back(p.string()); }
  void merge(const std::string& key, json value) { j_[key] = std::move(value); }

  // called twice: before the heavy work (so failures still leave a record
  // of what was attempted) and after, with outputs filled in
  void write() const {
    std::ofstream out = open_output(path_, false);
    out << j_.dump(2) << '\n';
    check(out.good(), Err::io_error, "failed writing " + path_.string());
  }

 private:
  fs::path path_;
  json j_;
};

// ---- config files ------------------------------------------------------------

// flat "key = value" lines; '#' starts a comment; values parse as JSON
// scalars where possible and fall back to plain strings
json parse_config_file(const fs::path& path) {
  std::ifstream in = open_input(path, false);
  json out = json::object();
  std::string line;
  int lineno = 0;
  auto trim = [](std::string& t) {
    size_t b = t.find_first_not_of(" \t\r");
    size_t e = t.find_last_not_of(" \t\r");
    t = b == std::string::npos ? std::string() : t.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = line;
    if (size_t pos = s.find('#'); pos != std::string::npos) s.erase(pos);
    trim(s);
    if (s.empty()) continue;
    size_t eq = s.find('=');
    check(eq != std::string::npos, Err::bad_config,
          path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = s.substr(0, eq), value = s.substr(eq + 1);
    trim(key);
    trim(value);
    check(!key.empty(), Err::bad_config,
          path.string() + ":" + std::to_string(lineno) + ": empty key");
    json v = json::parse(value, nullptr, false);
    if (v.is_discarded() || v.is_object() || v.is_array()) v = value;
    out[key] = v;
  }
  return out;
}

bool known_config_key(const std::string& k) {
  static const json mk = ModelConfig().to_json();
  static const json tk = TrainConfig().to_json();
  return mk.contains(k) || tk.contains(k);
}

ModelConfig model_config_from(const json& j) {
  try {
    return ModelConfig::from_json(j);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    fail(Err::bad_config, std::string("bad model config: ") + e.what());
  }
}

TrainConfig train_config_from(const json& j) {
  try {
    return TrainConfig::from_json(j);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    fail(Err::bad_config, std::string("bad train config: ") + e.what());
  }
}

// ---- small shared helpers -------------------------------------------------------

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

fs::path numbered(const fs::path& dir, const char* stem, size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%03zu.csv", stem, i);
  return dir / buf;
}

// manifest entries matching a speaker ("" = any) and split ("all" = any),
// in manifest order, optionally truncated
std::vector<size_t> select_entries(const DatasetManifest& m, const std::string& speaker,
                                   const std::string& split, int limit) {
  std::vector<size_t> idx;
  for (size_t i = 0; i < m.entries.size(); ++i) {
    const IntervalEntry& e = m.entries[i];
    if (!speaker.empty() && e.speaker_id != speaker) continue;
    if (split != "all" && e.split != split_from_name(split)) continue;
    idx.push_back(i);
    if (limit > 0 && int(idx.size()) == limit) break;
  }
  return idx;
}

void check_checkpoint_matches_manifest(const ModelConfig& mc, const DatasetManifest& man) {
  check(mc.d_text == man.d_text && mc.n_mels == man.n_mels && mc.joints == man.joints &&
            mc.frames == man.frames,
        Err::dimension_mismatch,
        "checkpoint was trained for d_text=" + std::to_string(mc.d_text) + " n_mels=" +
            std::to_string(mc.n_mels) + " joints=" + std::to_string(mc.joints) + " frames=" +
            std::to_string(mc.frames) + ", which does not match this dataset");
}

// a metrics path argument may be one pose CSV or a directory of them
std::vector<fs::path> expand_pose_paths(const std::vector<std::string>& args) {
  std::vector<fs::path> out;
  for (const std::string& a : args) {
    fs::path p(a);
    check(fs::exists(p), Err::missing_file, p.string());
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p))
        if (e.is_regular_file() && e.path().extension() == ".csv") found.push_back(e.path());
      std::sort(found.begin(), found.end());
      check(!found.empty(), Err::empty_input, "no .csv files under " + p.string());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

// ---- synth-data ---------------------------------------------------------------

struct SynthArgs {
  std::string out;
  SynthDatasetSpec spec;
  bool csv = false;
};

int run_synth(const SynthArgs& a) {
  SynthDatasetSpec spec = a.spec;
  spec.binary = !a.csv;
  RunRecord rec("synth-data", fs::path(a.out) / "run.json");
  rec.set_options(json{{"seed", spec.seed},
                       {"seen", spec.n_seen},
                       {"unseen", spec.n_unseen},
                       {"samples_per_speaker", spec.samples_per_speaker},
                       {"train_frac", spec.train_frac},
                       {"valid_frac", spec.valid_frac},
                       {"binary", spec.binary},
                       {"joints", spec.cfg.joints},
                       {"frames", spec.cfg.frames},
                       {"d_text", spec.cfg.d_text},
                       {"n_mels", spec.cfg.n_mels},
                       {"fps", spec.cfg.fps},
                       {"content_classes", spec.cfg.content_classes},
                       {"words_min", spec.cfg.words_min},
                       {"words_max", spec.cfg.words_max},
                       {"min_word_frames", spec.cfg.min_word_frames},
                       {"mel_frames_per_pose", spec.cfg.mel_frames_per_pose},
                       {"text_noise", spec.cfg.text_noise},
                       {"mel_noise", spec.cfg.mel_noise},
                       {"amp_min", spec.cfg.amp_min},
                       {"amp_max", spec.cfg.amp_max},
                       {"freq_min", spec.cfg.freq_min},
                       {"freq_max", spec.cfg.freq_max},
                       {"smooth_min", spec.cfg.smooth_min},
                       {"smooth_max", spec.cfg.smooth_max},
                       {"posture_jitter", spec.cfg.posture_jitter}});
  rec.write();

  DatasetManifest man = gen_dataset(spec, a.out);

  rec.add_output(fs::path(a.out) / "manifest.txt");
  for (const auto& e : man.entries) rec.add_output(man.resolve(e));
  rec.write();
  std::cout << "wrote " << man.entries.size() << " intervals for " << spec.n_seen << "+"
            << spec.n_unseen << " speakers under " << a.out << "\n";
  return 0;
}

// ---- train ------------------------------------------------------------------------

struct TrainArgs {
  std::string data, out, config_path, resume_path;
  std::string seen_list, unseen_list;
  bool verbose = false;
  json overrides = json::object();  // explicit flags, highest precedence
};

int run_train(const TrainArgs& a) {
  DatasetManifest man = load_manifest(a.data);

  json merged = json::object();
  if (!a.config_path.empty()) {
    json filecfg = parse_config_file(a.config_path);
    for (const auto& [k, v] : filecfg.items()) {
      check(known_config_key(k), Err::bad_config,
            "unknown config key '" + k + "' in " + a.config_path);
      merged[k] = v;
    }
  }
  for (const auto& [k, v] : a.overrides.items()) merged[k] = v;

  // the manifest owns the data dimensions; explicit conflicting values are
  // configuration errors rather than silent reshapes
  auto enforce = [&](const char* key, int want) {
    if (merged.contains(key)) {
      bool ok = merged[key].is_number_integer() && merged[key].get<int>() == want;
      check(ok, Err::bad_config, std::string("config sets ") + key + "=" + merged[key].dump() +
                                     " but the dataset manifest says " + std::to_string(want));
    }
    merged[key] = want;
  };
  enforce("d_text", man.d_text);
  enforce("n_mels", man.n_mels);
  enforce("joints", man.joints);
  enforce("frames", man.frames);

  json mj = json::object(), tj = json::object();
  {
    static const json mkeys = ModelConfig().to_json();
    for (const auto& [k, v] : merged.items()) (mkeys.contains(k) ? mj : tj)[k] = v;
  }

  // parse every interval up front: validates the dataset, feeds the split,
  // and yields the longest per-word mel when mel_max_frames is left implicit
  std::vector<Sample> samples;
  samples.reserve(man.entries.size());
  int longest_mel = 0;
  for (const IntervalEntry& e : man.entries) {
    Sample s = parse_interval(man.resolve(e), man);
    for (const WordFeature& w : s.words) longest_mel = std::max(longest_mel, int(w.mel.rows()));
    samples.push_back(std::move(s));
  }

  Checkpoint resume_ck;
  const bool resuming = !a.resume_path.empty();
  if (resuming) {
    resume_ck = load_checkpoint(a.resume_path);
    check(resume_ck.has_trainer, Err::bad_config,
          a.resume_path + " holds no trainer state; cannot resume from it");
    check_checkpoint_matches_manifest(resume_ck.config, man);
    // architecture is pinned by the checkpoint; only trainer keys may move
    for (const auto& [k, v] : mj.items()) {
      json have = resume_ck.config.to_json();
      check(have[k] == v, Err::bad_config,
            "config sets " + k + "=" + v.dump() + " but the resume checkpoint has " +
                have[k].dump());
    }
  }

  ModelConfig mc;
  if (resuming) {
    mc = resume_ck.config;
  } else {
    if (!mj.contains("mel_max_frames")) {
      int patch = mj.contains("patch_size") ? mj["patch_size"].get<int>()
                                            : ModelConfig().patch_size;
      mj["mel_max_frames"] = std::max(longest_mel, patch);
    }
    mc = model_config_from(mj);
  }
  TrainConfig tc;
  {
    json base = resuming ? resume_ck.train_config.to_json() : json::object();
    for (const auto& [k, v] : tj.items()) base[k] = v;
    tc = train_config_from(base);
  }

  // speaker routing: explicit lists, otherwise derived from the manifest
  // (speakers with any train/valid entry are seen, test-only ones unseen)
  std::vector<std::string> seen, unseen;
  if (!a.seen_list.empty() || !a.unseen_list.empty()) {
    seen = split_commas(a.seen_list);
    unseen = split_commas(a.unseen_list);
  } else {
    std::vector<std::string> order;
    for (const auto& e : man.entries)
      if (std::find(order.begin(), order.end(), e.speaker_id) == order.end())
        order.push_back(e.speaker_id);
    for (const std::string& spk : order) {
      bool has_fit_data = false;
      for (const auto& e : man.entries)
        if (e.speaker_id == spk && e.split != SplitKind::test) has_fit_data = true;
      (has_fit_data ? seen : unseen).push_back(spk);
    }
  }
  SpeakerSplit sp = split_speakers(man, seen, unseen);
  check(!sp.train.empty(), Err::empty_dataset, "no training intervals for the seen speakers");
  check(!sp.valid.empty(), Err::empty_dataset, "no validation intervals for the seen speakers");

  std::vector<Sample> train_raw, valid_raw;
  for (size_t i : sp.train) train_raw.push_back(samples[i]);
  for (size_t i : sp.valid) valid_raw.push_back(samples[i]);

  NormalizationStats stats = resuming ? resume_ck.stats : fit_normalization(train_raw);
  std::vector<Sample> train_norm, valid_norm;
  for (const Sample& s : train_raw) train_norm.push_back(normalize(s, stats));
  for (const Sample& s : valid_raw) valid_norm.push_back(normalize(s, stats));

  RunRecord rec("train", fs::path(a.out) / "run.json");
  rec.set_options(json{{"model_config", mc.to_json()},
                       {"train_config", tc.to_json()},
                       {"seen", seen},
                       {"unseen", unseen},
                       {"resume", resuming ? json(a.resume_path) : json(nullptr)}});
  rec.add_input(a.data);
  for (const IntervalEntry& e : man.entries) rec.add_input(man.resolve(e));
  if (resuming) rec.add_input(a.resume_path);
  rec.write();

  FitOptions opt;
  opt.out_dir = a.out;
  opt.resume = resuming ? &resume_ck : nullptr;
  opt.quiet = !a.verbose;
  FitResult res = fit(mc, tc, stats, train_norm, valid_norm, opt);

  rec.add_output(res.best_checkpoint);
  rec.add_output(res.last_checkpoint);
  rec.add_output(res.metrics_csv);
  rec.add_output(res.validation_csv);
  rec.merge("result", json{{"steps", res.steps}, {"best_val", res.best_val}});
  rec.write();
  std::cout << "trained " << res.steps << " steps on " << train_norm.size() << " intervals; best "
            << "validation " << res.best_val << "\nbest checkpoint: "
            << res.best_checkpoint.string() << "\n";
  return 0;
}

// ---- extract-style --------------------------------------------------------------

struct ExtractArgs {
  std::string checkpoint, data, out, csv, speakers;
  std::string split = "all";
};

int run_extract(const ExtractArgs& a) {
  Checkpoint ck = load_checkpoint(a.checkpoint);
  DatasetManifest man = load_manifest(a.data);
  check_checkpoint_matches_manifest(ck.config, man);

  std::vector<std::string> want = split_commas(a.speakers);
  if (want.empty())
    for (const auto& e : man.entries)
      if (std::find(want.begin(), want.end(), e.speaker_id) == want.end())
        want.push_back(e.speaker_id);

  RunRecord rec("extract-style", fs::path(a.out).string() + ".run.json");
  rec.set_options(json{{"checkpoint", a.checkpoint},
                       {"split", a.split},
                       {"speakers", want}});
  rec.add_input(a.checkpoint);
  rec.add_input(a.data);

  std::vector<std::pair<std::string, std::vector<Sample>>> groups;
  for (const std::string& spk : want) {
    std::vector<size_t> idx = select_entries(man, spk, a.split, 0);
    check(!idx.empty(), Err::unknown_speaker,
          "no '" + a.split + "' intervals for speaker '" + spk + "' in " + a.data);
    std::vector<Sample> normed;
    for (size_t i : idx) {
      fs::path p = man.resolve(man.entries[i]);
      rec.add_input(p);
      normed.push_back(normalize(parse_interval(p, man), ck.stats));
    }
    groups.emplace_back(spk, std::move(normed));
  }
  rec.write();

  StyleBank bank = build_style_bank(ck.config, ck.params, groups);
  save_style_bank(bank, a.out);
  rec.add_output(a.out);
  if (!a.csv.empty()) {
    write_style_bank_csv(bank, a.csv);
    rec.add_output(a.csv);
  }
  rec.write();
  std::cout << "wrote style bank with " << bank.entries.size() << " speakers to " << a.out << "\n";
  return 0;
}

// ---- transfer ----------------------------------------------------------------------

struct TransferArgs {
  std::string checkpoint, data, bank, source, target, out;
  std::string split = "test";
  int limit = 0;
};

int run_transfer(const TransferArgs& a) {
  Checkpoint ck = load_checkpoint(a.checkpoint);
  DatasetManifest man = load_manifest(a.data);
  check_checkpoint_matches_manifest(ck.config, man);
  StyleBank bank = load_style_bank(a.bank);
  const StyleEntry& target = bank.at(a.target);

  std::vector<size_t> idx = select_entries(man, a.source, a.split, a.limit);
  check(!idx.empty(), Err::empty_input,
        "no '" + a.split + "' intervals for source speaker '" + a.source + "' in " + a.data);

  RunRecord rec("transfer", fs::path(a.out) / "run.json");
  rec.set_options(json{{"checkpoint", a.checkpoint},
                       {"style_bank", a.bank},
                       {"source", a.source},
                       {"target", a.target},
                       {"split", a.split},
                       {"limit", a.limit}});
  rec.add_input(a.checkpoint);
  rec.add_input(a.data);
  rec.add_input(a.bank);
  for (size_t i : idx) rec.add_input(man.resolve(man.entries[i]));
  rec.write();

  // gen/ holds the transferred tracks, src/ the untouched source poses, so
  // each directory feeds straight into the metrics command
  fs::path gen_dir = fs::path(a.out) / "gen";
  fs::path src_dir = fs::path(a.out) / "src";
  for (size_t k = 0; k < idx.size(); ++k) {
    Sample raw = parse_interval(man.resolve(man.entries[idx[k]]), man);
    Sample norm = normalize(raw, ck.stats);
    Eigen::MatrixXf gen = transfer(ck.config, ck.params, norm, target.style, ck.stats);
    fs::path gp = numbered(gen_dir, "pose", k);
    fs::path sp = numbered(src_dir, "pose", k);
    write_pose_csv(gen, raw.fps, gp);
    write_pose_csv(raw.pose, raw.fps, sp);
    rec.add_output(gp);
    rec.add_output(sp);
  }
  rec.write();
  std::cout << "transferred " << idx.size() << " intervals from '" << a.source << "' toward '"
            << a.target << "' under " << a.out << "\n";
  return 0;
}

// ---- dump-poses -----------------------------------------------------------------

struct DumpArgs {
  std::string data, speaker, out;
  std::string split = "test";
  int limit = 0;
};

int run_dump(const DumpArgs& a) {
  DatasetManifest man = load_manifest(a.data);
  std::vector<size_t> idx = select_entries(man, a.speaker, a.split, a.limit);
  check(!idx.empty(), Err::empty_input,
        "no '" + a.split + "' intervals" +
            (a.speaker.empty() ? std::string() : " for speaker '" + a.speaker + "'") + " in " +
            a.data);

  RunRecord rec("dump-poses", fs::path(a.out) / "run.json");
  rec.set_options(json{{"speaker", a.speaker}, {"split", a.split}, {"limit", a.limit}});
  rec.add_input(a.data);
  for (size_t i : idx) rec.add_input(man.resolve(man.entries[i]));
  rec.write();

  for (size_t k = 0; k < idx.size(); ++k) {
    Sample s = parse_interval(man.resolve(man.entries[idx[k]]), man);
    fs::path p = numbered(a.out, "pose", k);
    write_pose_csv(s.pose, s.fps, p);
    rec.add_output(p);
  }
  rec.write();
  std::cout << "dumped " << idx.size() << " pose tracks to " << a.out << "\n";
  return 0;
}

// ---- metrics ------------------------------------------------------------------------

struct MetricsArgs {
  std::vector<std::string> source, target, model;
  std::string out, svg;
};

int run_metrics(const MetricsArgs& a) {
  RunRecord rec("metrics", fs::path(a.out).string() + ".run.json");
  auto group = [&](const std::vector<std::string>& args) {
    std::vector<SequenceMetrics> all;
    for (const fs::path& p : expand_pose_paths(args)) {
      rec.add_input(p);
      double fps = 0;
      Eigen::MatrixXf pose = read_pose_csv(p, &fps);
      all.push_back(sequence_metrics(pose, fps));
    }
    return mean_metrics(all);
  };
  SequenceMetrics src = group(a.source);
  SequenceMetrics tgt = group(a.target);
  SequenceMetrics mdl = group(a.model);
  rec.set_options(json{{"source", a.source}, {"target", a.target}, {"model", a.model}});
  rec.write();

  std::vector<DistanceRow> rows = distance_report(src, tgt, mdl);
  write_distance_csv(rows, a.out);
  rec.add_output(a.out);
  if (!a.svg.empty()) {
    write_distance_svg(rows, a.svg);
    rec.add_output(a.svg);
  }
  rec.write();

  for (const DistanceRow& r : rows)
    std::cout << r.metric << ": model " << fmt_g9(r.model_pct) << "% vs source "
              << fmt_g9(r.source_pct) << "% of the distance to the target\n";
  std::cout << "wrote " << a.out << "\n";
  return 0;
}

// ---- export-body25 ----------------------------------------------------------------

struct ExportArgs {
  std::string pose, out, csv;
  int width = 1920, height = 1080;
};

int run_export(const ExportArgs& a) {
  RunRecord rec("export-body25", fs::path(a.out) / "run.json");
  rec.set_options(json{{"pose", a.pose}, {"width", a.width}, {"height", a.height}});
  rec.add_input(a.pose);
  rec.write();

  double fps = 0;
  Eigen::MatrixXf pose = read_pose_csv(a.pose, &fps);
  std::vector<int> map = default_body25_map(int(pose.cols()) / 2);
  std::vector<Body25Frame> frames = map_track(pose, map);
  write_body25_json(frames, a.out);
  for (size_t i = 0; i < frames.size(); ++i) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "frame_%06zu_keypoints.json", i);
    rec.add_output(fs::path(a.out) / buf);
  }
  if (!a.csv.empty()) {
    write_body25_csv(frames, a.csv, a.width, a.height);
    rec.add_output(a.csv);
  }
  rec.write();
  std::cout << "exported " << frames.size() << " frames to " << a.out << "\n";
  return 0;
}

}  // namespace

// ---- entry point ---------------------------------------------------------------------

int run(int argc, const char* const* argv) {
  CLI::App app{"zero-shot multimodal style transfer for upper-body gesture synthesis"};
  app.require_subcommand(1);

  SynthArgs synth;
  CLI::App* sc_synth = app.add_subcommand("synth-data", "generate a synthetic speaker dataset");
  sc_synth->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  sc_synth->add_option("--out", synth.out, "output directory")->required();
  sc_synth->add_option("--seed", synth.spec.seed, "dataset seed");
  sc_synth->add_option("--seen", synth.spec.n_seen, "seen speaker count");
  sc_synth->add_option("--unseen", synth.spec.n_unseen, "held-out speaker count");
  sc_synth->add_option("--samples", synth.spec.samples_per_speaker, "intervals per speaker");
  sc_synth->add_option("--train-frac", synth.spec.train_frac, "train fraction per seen speaker");
  sc_synth->add_option("--valid-frac", synth.spec.valid_frac, "validation fraction");
  sc_synth->add_flag("--csv", synth.csv, "write CSV intervals instead of binary");
  sc_synth->add_option("--joints", synth.spec.cfg.joints, "2D joints per frame");
  sc_synth->add_option("--frames", synth.spec.cfg.frames, "pose frames per interval");
  sc_synth->add_option("--d-text", synth.spec.cfg.d_text, "text embedding width");
  sc_synth->add_option("--n-mels", synth.spec.cfg.n_mels, "mel bins");
  sc_synth->add_option("--fps", synth.spec.cfg.fps, "pose frame rate");
  sc_synth->add_option("--classes", synth.spec.cfg.content_classes, "content classes");
  sc_synth->add_option("--words-min", synth.spec.cfg.words_min, "min words per interval");
  sc_synth->add_option("--words-max", synth.spec.cfg.words_max, "max words per interval");
  sc_synth->add_option("--min-word-frames", synth.spec.cfg.min_word_frames,
                       "shortest word span in frames");
  sc_synth->add_option("--mel-frames-per-pose", synth.spec.cfg.mel_frames_per_pose,
                       "mel rows per pose frame");
  sc_synth->add_option("--text-noise", synth.spec.cfg.text_noise, "text embedding jitter");
  sc_synth->add_option("--mel-noise", synth.spec.cfg.mel_noise, "mel jitter");
  sc_synth->add_option("--amp-min", synth.spec.cfg.amp_min, "amplitude range low");
  sc_synth->add_option("--amp-max", synth.spec.cfg.amp_max, "amplitude range high");
  sc_synth->add_option("--freq-min", synth.spec.cfg.freq_min, "frequency range low");
  sc_synth->add_option("--freq-max", synth.spec.cfg.freq_max, "frequency range high");
  sc_synth->add_option("--smooth-min", synth.spec.cfg.smooth_min, "smoothness range low");
  sc_synth->add_option("--smooth-max", synth.spec.cfg.smooth_max, "smoothness range high");
  sc_synth->add_option("--posture-jitter", synth.spec.cfg.posture_jitter, "rest pose jitter");

  TrainArgs train;
  double f_lr = 0, f_lambda_step = 0, f_lambda_max = 0, f_eps_norm = 0, f_beta1 = 0, f_beta2 = 0;
  int f_epochs = 0, f_batch = 0, f_warmup = 0, f_ckpt_every = 0;
  int f_dmodel = 0, f_slayers = 0, f_sheads = 0, f_cheads = 0, f_stheads = 0, f_lstm = 0;
  int f_dlayers = 0, f_dheads = 0, f_patch = 0, f_stride = 0, f_melmax = 0, f_ffn = 0;
  uint64_t f_seed = 0;
  bool f_adv = true;
  CLI::App* sc_train = app.add_subcommand("train", "train a model on a dataset manifest");
  sc_train->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  sc_train->add_option("--data", train.data, "dataset manifest")->required();
  sc_train->add_option("--out", train.out, "output directory")->required();
  sc_train->add_option("--config", train.config_path, "flat key = value config file");
  sc_train->add_option("--resume", train.resume_path, "trainer checkpoint to continue");
  sc_train->add_option("--seen", train.seen_list, "comma list of seen speakers");
  sc_train->add_option("--unseen", train.unseen_list, "comma list of held-out speakers");
  sc_train->add_flag("--verbose", train.verbose, "log step losses to stderr");
  CLI::Option* o_epochs = sc_train->add_option("--epochs", f_epochs, "epoch budget");
  CLI::Option* o_batch = sc_train->add_option("--batch-size", f_batch, "intervals per step");
  CLI::Option* o_lr = sc_train->add_option("--lr", f_lr, "peak learning rate");
  CLI::Option* o_warmup = sc_train->add_option("--warmup-steps", f_warmup, "LR warmup steps");
  CLI::Option* o_lstep = sc_train->add_option("--lambda-step", f_lambda_step,
                                              "adversarial weight ramp per step");
  CLI::Option* o_lmax = sc_train->add_option("--lambda-max", f_lambda_max,
                                             "adversarial weight ceiling");
  CLI::Option* o_epsn = sc_train->add_option("--epsilon-norm", f_eps_norm,
                                             "style error normalization guard");
  CLI::Option* o_beta1 = sc_train->add_option("--beta1", f_beta1, "Adam beta1");
  CLI::Option* o_beta2 = sc_train->add_option("--beta2", f_beta2, "Adam beta2");
  CLI::Option* o_seed = sc_train->add_option("--seed", f_seed, "training seed");
  CLI::Option* o_adv = sc_train->add_flag("--adversarial,!--no-adversarial", f_adv,
                                          "toggle the disentanglement objective");
  CLI::Option* o_ck = sc_train->add_option("--checkpoint-every", f_ckpt_every,
                                           "epochs between checkpoint refreshes");
  CLI::Option* o_dm = sc_train->add_option("--d-model", f_dmodel, "core embedding width");
  CLI::Option* o_sl = sc_train->add_option("--speech-layers", f_slayers, "speech encoder depth");
  CLI::Option* o_sh = sc_train->add_option("--speech-heads", f_sheads, "speech encoder heads");
  CLI::Option* o_ch = sc_train->add_option("--content-att-heads", f_cheads,
                                           "content attention heads");
  CLI::Option* o_sth = sc_train->add_option("--style-att-heads", f_stheads,
                                            "style attention heads");
  CLI::Option* o_lstm = sc_train->add_option("--lstm-layers", f_lstm, "pose LSTM depth");
  CLI::Option* o_dl = sc_train->add_option("--decoder-layers", f_dlayers, "decoder depth");
  CLI::Option* o_dh = sc_train->add_option("--decoder-heads", f_dheads, "decoder heads");
  CLI::Option* o_ps = sc_train->add_option("--patch-size", f_patch, "mel patch edge");
  CLI::Option* o_pstr = sc_train->add_option("--patch-stride", f_stride, "mel patch stride");
  CLI::Option* o_mm = sc_train->add_option("--mel-max-frames", f_melmax,
                                           "longest per-word mel to size positions for");
  CLI::Option* o_ffn = sc_train->add_option("--ffn-mult", f_ffn, "feed-forward width multiplier");

  ExtractArgs extract;
  CLI::App* sc_extract = app.add_subcommand("extract-style",
                                            "build a per-speaker style bank from a checkpoint");
  sc_extract->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  sc_extract->add_option("--checkpoint", extract.checkpoint, "model checkpoint")->required();
  sc_extract->add_option("--data", extract.data, "dataset manifest")->required();
  sc_extract->add_option("--out", extract.out, "style bank output path")->required();
  sc_extract->add_option("--csv", extract.csv, "also write a readable CSV listing");
  sc_extract->add_option("--speakers", extract.speakers, "comma list (default: all in manifest)");
  sc_extract->add_option("--split", extract.split, "train|valid|test|all (default all)");

  TransferArgs transfer;
  CLI::App* sc_transfer = app.add_subcommand("transfer",
                                             "re-render a source speaker's content in a target style");
  sc_transfer->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  sc_transfer->add_option("--checkpoint", transfer.checkpoint, "model checkpoint")->required();
  sc_transfer->add_option("--data", transfer.data, "dataset manifest")->required();
  sc_transfer->add_option("--style-bank", transfer.bank, "style bank from extract-style")
      ->required();
  sc_transfer->add_option("--source", transfer.source, "content speaker")->required();
  sc_transfer->add_option("--target", transfer.target, "style speaker")->required();
  sc_transfer->add_option("--out", transfer.out, "output directory")->required();
  sc_transfer->add_option("--split", transfer.split, "manifest split to read (default test)");
  sc_transfer->add_option("--limit", transfer.limit, "max intervals (0 = all)");

  DumpArgs dump;
  CLI::App* sc_dump = app.add_subcommand("dump-poses", "write ground-truth pose CSVs");
  sc_dump->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  sc_dump->add_option("--data", dump.data, "dataset manifest")->required();
  sc_dump->add_option("--out", dump.out, "output directory")->required();
  sc_dump->add_option("--speaker", dump.speaker, "speaker filter (default: all)");
  sc_dump->add_option("--split", dump.split, "train|valid|test|all (default test)");
  sc_dump->add_option("--limit", dump.limit, "max intervals (0 = all)");

  MetricsArgs metrics;
  CLI::App* sc_metrics = app.add_subcommand("metrics",
                                            "score a transfer against source and target styles");
  sc_metrics->add_option("--source", metrics.source, "source pose CSVs or directories")
      ->required();
  sc_metrics->add_option("--target", metrics.target, "target pose CSVs or directories")
      ->required();
  sc_metrics->add_option("--model", metrics.model, "generated pose CSVs or directories")
      ->required();
  sc_metrics->add_option("--out", metrics.out, "distance report CSV")->required();
  sc_metrics->add_option("--svg", metrics.svg, "also render a bar chart SVG");

  ExportArgs exp;
  CLI::App* sc_export = app.add_subcommand("export-body25",
                                           "emit BODY25 keypoint JSON frames from a pose CSV");
  sc_export->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  sc_export->add_option("--pose", exp.pose, "pose CSV")->required();
  sc_export->add_option("--out", exp.out, "output directory for per-frame JSON")->required();
  sc_export->add_option("--csv", exp.csv, "also write a pixel-space CSV");
  sc_export->add_option("--width", exp.width, "pixel width for the CSV");
  sc_export->add_option("--height", exp.height, "pixel height for the CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*sc_train) {
      json& ov = train.overrides;
      if (o_epochs->count()) ov["epochs"] = f_epochs;
      if (o_batch->count()) ov["batch_size"] = f_batch;
      if (o_lr->count()) ov["initial_lr"] = f_lr;
      if (o_warmup->count()) ov["warmup_steps"] = f_warmup;
      if (o_lstep->count()) ov["lambda_step"] = f_lambda_step;
      if (o_lmax->count()) ov["lambda_max"] = f_lambda_max;
      if (o_epsn->count()) ov["epsilon_norm"] = f_eps_norm;
      if (o_beta1->count()) ov["beta1"] = f_beta1;
      if (o_beta2->count()) ov["beta2"] = f_beta2;
      if (o_seed->count()) ov["seed"] = f_seed;
      if (o_adv->count()) ov["adversarial"] = f_adv;
      if (o_ck->count()) ov["checkpoint_every"] = f_ckpt_every;
      if (o_dm->count()) ov["d_model"] = f_dmodel;
      if (o_sl->count()) ov["speech_layers"] = f_slayers;
      if (o_sh->count()) ov["speech_heads"] = f_sheads;
      if (o_ch->count()) ov["content_att_heads"] = f_cheads;
      if (o_sth->count()) ov["style_att_heads"] = f_stheads;
      if (o_lstm->count()) ov["pose_lstm_layers"] = f_lstm;
      if (o_dl->count()) ov["decoder_layers"] = f_dlayers;
      if (o_dh->count()) ov["decoder_heads"] = f_dheads;
      if (o_ps->count()) ov["patch_size"] = f_patch;
      if (o_pstr->count()) ov["patch_stride"] = f_stride;
      if (o_mm->count()) ov["mel_max_frames"] = f_melmax;
      if (o_ffn->count()) ov["ffn_mult"] = f_ffn;
      return run_train(train);
    }
    if (*sc_synth) return run_synth(synth);
    if (*sc_extract) return run_extract(extract);
    if (*sc_transfer) return run_transfer(transfer);
    if (*sc_dump) return run_dump(dump);
    if (*sc_metrics) return run_metrics(metrics);
    if (*sc_export) return run_export(exp);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("zsmstm");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run(int(argv.size()), argv.data());
}

}  // namespace zsmstm::cli
