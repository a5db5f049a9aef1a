// CLI behaviour: exit codes, artifact layout, provenance records, config
// precedence, and bit-identical reruns of the whole pipeline.
#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "zsmstm/checkpoint.hpp"
#include "zsmstm/cli.hpp"
#include "zsmstm/data.hpp"
#include "zsmstm/infer.hpp"
#include "zsmstm/io_util.hpp"
#include "test_util.hpp"

using namespace zsmstm;
using zsmstm::testutil::TempDir;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int cli_run(std::vector<std::string> args) { return cli::run(args); }

std::string pstr(const fs::path& p) { return p.string(); }

// small dataset all CLI cases share: 2 seen + 1 unseen speakers, 6 intervals
// each, 10 joints so the BODY25 export applies
void make_dataset(const fs::path& dir, const std::string& seed = "3") {
  REQUIRE(cli_run({"synth-data", "--out", pstr(dir), "--seed", seed, "--seen", "2",
                   "--unseen", "1", "--samples", "6", "--frames", "24", "--d-text", "8",
                   "--n-mels", "8", "--classes", "4", "--words-max", "3",
                   "--min-word-frames", "6"}) == 0);
}

// tiny architecture flags reused by every training call
std::vector<std::string> tiny_train_flags() {
  return {"--d-model", "16", "--speech-layers", "1", "--speech-heads", "2",
          "--patch-size", "8", "--patch-stride", "4", "--ffn-mult", "2",
          "--warmup-steps", "50", "--lr", "1e-4", "--seed", "5"};
}

int train_tiny(const fs::path& data, const fs::path& out,
               std::vector<std::string> extra = {}) {
  std::vector<std::string> args = {"train", "--data", pstr(data / "manifest.txt"),
                                   "--out", pstr(out), "--epochs", "2", "--batch-size", "4"};
  for (auto& f : tiny_train_flags()) args.push_back(f);
  for (auto& f : extra) args.push_back(f);
  return cli_run(args);
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  return json::parse(in);
}

}  // namespace

TEST_CASE("cli: usage errors exit 2, help exits 0") {
  CHECK(cli_run({}) == 2);
  CHECK(cli_run({"no-such-command"}) == 2);
  CHECK(cli_run({"synth-data"}) == 2);           // missing --out
  CHECK(cli_run({"train", "--out", "x"}) == 2);  // missing --data
  CHECK(cli_run({"--help"}) == 0);
  CHECK(cli_run({"train", "--help"}) == 0);
}

TEST_CASE("cli: synth-data writes a loadable dataset and provenance record") {
  TempDir tmp("cli_synth");
  fs::path d1 = tmp.path / "a", d2 = tmp.path / "b", d3 = tmp.path / "c";
  make_dataset(d1);
  make_dataset(d2);        // same seed
  make_dataset(d3, "4");   // different seed

  DatasetManifest man = load_manifest(d1 / "manifest.txt");
  CHECK(man.entries.size() == 18);  // 2 seen * 6 + 1 unseen * 6
  CHECK(man.d_text == 8);
  CHECK(man.joints == 10);

  json rec = read_json(d1 / "run.json");
  CHECK(rec["command"] == "synth-data");
  CHECK(rec["options"]["seed"] == 3);
  CHECK(rec["outputs"].size() == man.entries.size() + 1);

  // same seed reruns bit-identically; a different seed does not
  CHECK(fnv1a64_file(d1 / "manifest.txt") == fnv1a64_file(d2 / "manifest.txt"));
  for (const auto& e : man.entries)
    CHECK(fnv1a64_file(man.resolve(e)) == fnv1a64_file(d2 / e.rel_path));
  bool any_diff = false;
  for (const auto& e : man.entries)
    if (fs::exists(d3 / e.rel_path) &&
        fnv1a64_file(man.resolve(e)) != fnv1a64_file(d3 / e.rel_path))
      any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("cli: train produces checkpoints and reruns bit-identically") {
  TempDir tmp("cli_train");
  fs::path data = tmp.path / "data";
  make_dataset(data);

  fs::path runa = tmp.path / "runa", runb = tmp.path / "runb";
  REQUIRE(train_tiny(data, runa) == 0);
  REQUIRE(train_tiny(data, runb) == 0);

  for (const char* f : {"best.ckpt", "last.ckpt", "metrics.csv", "validation.csv", "run.json"})
    CHECK(fs::exists(runa / f));

  CHECK(fnv1a64_file(runa / "metrics.csv") == fnv1a64_file(runb / "metrics.csv"));
  CHECK(fnv1a64_file(runa / "validation.csv") == fnv1a64_file(runb / "validation.csv"));
  CHECK(fnv1a64_file(runa / "last.ckpt") == fnv1a64_file(runb / "last.ckpt"));

  json rec = read_json(runa / "run.json");
  CHECK(rec["command"] == "train");
  CHECK(rec["options"]["model_config"]["d_model"] == 16);
  CHECK(rec["options"]["model_config"]["d_text"] == 8);   // from the manifest
  CHECK(rec["options"]["seen"] == json({"synth_s00", "synth_s01"}));
  CHECK(rec["options"]["unseen"] == json({"synth_u00"}));
  CHECK(rec["result"]["steps"] == 4);  // 8 train intervals / batch 4 * 2 epochs

  // mel_max_frames was derived from the data (longest word mel)
  Checkpoint ck = load_checkpoint(runa / "best.ckpt");
  CHECK(ck.config.mel_max_frames >= ck.config.patch_size);
  CHECK(ck.has_trainer);
}

TEST_CASE("cli: config file merges under flags; bad keys and conflicts exit 2") {
  TempDir tmp("cli_cfg");
  fs::path data = tmp.path / "data";
  make_dataset(data);

  fs::path cfg = tmp.path / "train.cfg";
  {
    std::ofstream out(cfg);
    out << "# comment line\n"
        << "epochs = 7\n"
        << "batch_size = 4   # trailing comment\n"
        << "adversarial = false\n";
  }
  fs::path run = tmp.path / "run";
  std::vector<std::string> args = {"train", "--data", pstr(data / "manifest.txt"), "--out",
                                   pstr(run), "--config", pstr(cfg), "--epochs", "2"};
  for (auto& f : tiny_train_flags()) args.push_back(f);
  REQUIRE(cli_run(args) == 0);

  json rec = read_json(run / "run.json");
  CHECK(rec["options"]["train_config"]["epochs"] == 2);        // flag beat the file
  CHECK(rec["options"]["train_config"]["batch_size"] == 4);    // file applied
  CHECK(rec["options"]["train_config"]["adversarial"] == false);

  // adversarial-off runs log a zero discriminator column
  std::ifstream met(run / "metrics.csv");
  std::string header, first;
  std::getline(met, header);
  std::getline(met, first);
  CHECK(first.find(",0,") != std::string::npos);

  {
    std::ofstream out(cfg);
    out << "no_such_knob = 1\n";
  }
  CHECK(cli_run(args) == 2);

  {
    std::ofstream out(cfg);
    out << "d_text = 99\n";  // contradicts the manifest
  }
  CHECK(cli_run(args) == 2);

  {
    std::ofstream out(cfg);
    out << "epochs\n";  // no '=' at all
  }
  CHECK(cli_run(args) == 2);
}

TEST_CASE("cli: divergent training exits 4") {
  TempDir tmp("cli_diverge");
  fs::path data = tmp.path / "data";
  make_dataset(data);
  int rc = train_tiny(data, tmp.path / "run", {"--lr", "1e30", "--no-adversarial"});
  CHECK(rc == 4);
}

TEST_CASE("cli: style bank, transfer, dump, metrics, export chain") {
  TempDir tmp("cli_chain");
  fs::path data = tmp.path / "data";
  make_dataset(data);
  fs::path run = tmp.path / "run";
  REQUIRE(train_tiny(data, run) == 0);
  fs::path ckpt = run / "best.ckpt";
  uint64_t ckpt_bytes = fnv1a64_file(ckpt);

  // ---- extract-style
  fs::path bank = tmp.path / "bank.zsb";
  REQUIRE(cli_run({"extract-style", "--checkpoint", pstr(ckpt), "--data",
                   pstr(data / "manifest.txt"), "--out", pstr(bank), "--csv",
                   pstr(tmp.path / "bank.csv")}) == 0);
  StyleBank sb = load_style_bank(bank);
  CHECK(sb.entries.size() == 3);
  CHECK(sb.find("synth_u00") != nullptr);
  CHECK(fs::exists(tmp.path / "bank.zsb.run.json"));
  CHECK(fnv1a64_file(ckpt) == ckpt_bytes);  // extraction never rewrites weights

  // restricting speakers and split
  fs::path bank2 = tmp.path / "bank2.zsb";
  REQUIRE(cli_run({"extract-style", "--checkpoint", pstr(ckpt), "--data",
                   pstr(data / "manifest.txt"), "--out", pstr(bank2), "--speakers",
                   "synth_s00", "--split", "train"}) == 0);
  CHECK(load_style_bank(bank2).entries.size() == 1);
  CHECK(cli_run({"extract-style", "--checkpoint", pstr(ckpt), "--data",
                 pstr(data / "manifest.txt"), "--out", pstr(bank2), "--speakers",
                 "nobody"}) == 3);

  // ---- transfer
  fs::path tr = tmp.path / "tr";
  REQUIRE(cli_run({"transfer", "--checkpoint", pstr(ckpt), "--data",
                   pstr(data / "manifest.txt"), "--style-bank", pstr(bank), "--source",
                   "synth_s00", "--target", "synth_u00", "--out", pstr(tr)}) == 0);
  CHECK(fs::exists(tr / "gen" / "pose_000.csv"));
  CHECK(fs::exists(tr / "src" / "pose_000.csv"));
  Eigen::MatrixXf gen = read_pose_csv(tr / "gen" / "pose_000.csv");
  CHECK(gen.rows() == 24);
  CHECK(gen.cols() == 20);
  CHECK(cli_run({"transfer", "--checkpoint", pstr(ckpt), "--data",
                 pstr(data / "manifest.txt"), "--style-bank", pstr(bank), "--source",
                 "synth_s00", "--target", "nobody", "--out", pstr(tr)}) == 3);

  // --limit caps the interval count
  fs::path tr1 = tmp.path / "tr1";
  REQUIRE(cli_run({"transfer", "--checkpoint", pstr(ckpt), "--data",
                   pstr(data / "manifest.txt"), "--style-bank", pstr(bank), "--source",
                   "synth_s00", "--target", "synth_u00", "--out", pstr(tr1), "--limit",
                   "1"}) == 0);
  CHECK(!fs::exists(tr1 / "gen" / "pose_001.csv"));

  // ---- dump-poses: ground truth for the metric target
  fs::path tgt = tmp.path / "tgt";
  REQUIRE(cli_run({"dump-poses", "--data", pstr(data / "manifest.txt"), "--speaker",
                   "synth_u00", "--out", pstr(tgt)}) == 0);
  CHECK(fs::exists(tgt / "pose_000.csv"));
  double fps = 0;
  Eigen::MatrixXf dumped = read_pose_csv(tgt / "pose_000.csv", &fps);
  CHECK(fps == 15.0);
  CHECK(dumped.rows() == 24);

  // ---- metrics over the three directories
  fs::path report = tmp.path / "report.csv";
  REQUIRE(cli_run({"metrics", "--source", pstr(tr / "src"), "--target", pstr(tgt), "--model",
                   pstr(tr / "gen"), "--out", pstr(report), "--svg",
                   pstr(tmp.path / "report.svg")}) == 0);
  std::ifstream rep(report);
  std::string line;
  std::getline(rep, line);
  CHECK(line == "metric,source_dist,model_dist,source_pct,model_pct");
  int rows = 0;
  while (std::getline(rep, line)) ++rows;
  CHECK(rows == 7);
  CHECK(fs::exists(tmp.path / "report.svg"));
  CHECK(fs::exists(tmp.path / "report.csv.run.json"));

  // a single file also works as a metrics argument
  REQUIRE(cli_run({"metrics", "--source", pstr(tr / "src" / "pose_000.csv"), "--target",
                   pstr(tgt / "pose_000.csv"), "--model", pstr(tr / "gen" / "pose_000.csv"),
                   "--out", pstr(tmp.path / "report1.csv")}) == 0);

  // ---- export-body25
  fs::path kp = tmp.path / "kp";
  REQUIRE(cli_run({"export-body25", "--pose", pstr(tr / "gen" / "pose_000.csv"), "--out",
                   pstr(kp), "--csv", pstr(tmp.path / "kp.csv")}) == 0);
  CHECK(fs::exists(kp / "frame_000000_keypoints.json"));
  CHECK(fs::exists(kp / "frame_000023_keypoints.json"));
  CHECK(fs::exists(tmp.path / "kp.csv"));

  // missing inputs map to exit 3
  CHECK(cli_run({"metrics", "--source", pstr(tmp.path / "nope"), "--target", pstr(tgt),
                 "--model", pstr(tr / "gen"), "--out", pstr(tmp.path / "x.csv")}) == 3);
}

TEST_CASE("cli: train resume continues from a trainer checkpoint") {
  TempDir tmp("cli_resume");
  fs::path data = tmp.path / "data";
  make_dataset(data);

  fs::path full = tmp.path / "full", half = tmp.path / "half";
  REQUIRE(train_tiny(data, full, {"--epochs", "4"}) == 0);
  REQUIRE(train_tiny(data, half, {"--epochs", "2"}) == 0);
  REQUIRE(train_tiny(data, half, {"--epochs", "4", "--resume", pstr(half / "last.ckpt")}) == 0);

  CHECK(load_checkpoint(half / "last.ckpt").step == load_checkpoint(full / "last.ckpt").step);
  CHECK(params_hash(load_checkpoint(half / "last.ckpt").params) ==
        params_hash(load_checkpoint(full / "last.ckpt").params));

  // architecture conflicts with the resume checkpoint exit 2
  CHECK(train_tiny(data, half, {"--epochs", "6", "--resume", pstr(half / "last.ckpt"),
                                "--d-model", "32"}) == 2);
  // a weights-only checkpoint cannot seed a resume
  Checkpoint ck = load_checkpoint(half / "last.ckpt");
  ck.has_trainer = false;
  save_checkpoint(ck, tmp.path / "weights.ckpt");
  CHECK(train_tiny(data, half, {"--epochs", "6", "--resume",
                                pstr(tmp.path / "weights.ckpt")}) == 2);
}
