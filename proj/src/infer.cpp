#include "zsmstm/infer.hpp"

#include <fstream>

#include "zsmstm/io_util.hpp"

namespace zsmstm {

Eigen::VectorXf extract_style(const ModelConfig& mc, const ParamStore<float>& params,
                              const std::vector<Sample>& normalized) {
  mc.validate();
  check(!normalized.empty(), Err::empty_input, "extract_style: no samples");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(mc.d_style());
  for (const Sample& s : normalized) acc += style_embedding(mc, params, s).cast<double>();
  acc /= double(normalized.size());
  return acc.cast<float>();
}

Eigen::VectorXf style_embedding(const ModelConfig& mc, const ParamStore<float>& params,
                                const Sample& normalized) {
  SampleData<float> d = SampleData<float>::from_sample(normalized);
  Graph<float> g(false);
  BoundParams<float> bp(g, params, nullptr);
  Forward<float> f(mc, g, bp);
  return g.value(f.encode_style(d)).row(0).transpose();
}

Eigen::VectorXf content_embedding(const ModelConfig& mc, const ParamStore<float>& params,
                                  const Sample& normalized) {
  SampleData<float> d = SampleData<float>::from_sample(normalized);
  Graph<float> g(false);
  BoundParams<float> bp(g, params, nullptr);
  Forward<float> f(mc, g, bp);
  Eigen::MatrixXf rows = g.value(f.encode_content(d));
  return (rows.colwise().sum() / float(rows.rows())).transpose();
}

const StyleEntry* StyleBank::find(const std::string& speaker_id) const {
  for (const auto& e : entries)
    if (e.speaker_id == speaker_id) return &e;
  return nullptr;
}

const StyleEntry& StyleBank::at(const std::string& speaker_id) const {
  const StyleEntry* e = find(speaker_id);
  check(e != nullptr, Err::unknown_speaker, "style bank has no entry for '" + speaker_id + "'");
  return *e;
}

StyleBank build_style_bank(
    const ModelConfig& mc, const ParamStore<float>& params,
    const std::vector<std::pair<std::string, std::vector<Sample>>>& normalized_by_speaker) {
  StyleBank bank;
  for (const auto& [speaker, samples] : normalized_by_speaker) {
    check(bank.find(speaker) == nullptr, Err::bad_config,
          "duplicate speaker '" + speaker + "' in style bank input");
    StyleEntry e;
    e.speaker_id = speaker;
    e.style = extract_style(mc, params, samples);
    e.sample_count = samples.size();
    bank.entries.push_back(std::move(e));
  }
  return bank;
}

namespace {
constexpr char kBankMagic[] = "ZSMSTM-STYLBANK";  // 15 chars + version byte
constexpr uint8_t kBankVersion = 1;
}  // namespace

void save_style_bank(const StyleBank& bank, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  out.write(kBankMagic, 15);
  write_u8(out, kBankVersion);
  write_u32(out, uint32_t(bank.entries.size()));
  for (const auto& e : bank.entries) {
    write_str(out, e.speaker_id);
    write_u64(out, e.sample_count);
    write_u32(out, uint32_t(e.style.size()));
    for (Eigen::Index i = 0; i < e.style.size(); ++i) write_f32(out, e.style(i));
  }
  check(out.good(), Err::io_error, "failed writing style bank " + path.string());
}

StyleBank load_style_bank(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  char magic[15];
  in.read(magic, 15);
  check(in.good() && std::string(magic, 15) == kBankMagic, Err::malformed_interval,
        "not a style bank file: " + path.string());
  uint8_t version = read_u8(in);
  check(version == kBankVersion, Err::malformed_interval,
        "unsupported style bank version " + std::to_string(int(version)));
  StyleBank bank;
  uint32_t n = read_u32(in);
  bank.entries.resize(n);
  for (auto& e : bank.entries) {
    e.speaker_id = read_str(in);
    e.sample_count = read_u64(in);
    uint32_t d = read_u32(in);
    e.style.resize(Eigen::Index(d));
    for (uint32_t i = 0; i < d; ++i) e.style(Eigen::Index(i)) = read_f32(in);
  }
  check(in.good(), Err::malformed_interval, "truncated style bank " + path.string());
  return bank;
}

void write_style_bank_csv(const StyleBank& bank, const std::filesystem::path& path) {
  std::ofstream out = open_output(path, false);
  out << "#ZSMSTM-STYLEBANK v1\n";
  out << "speaker,sample_count,components...\n";
  for (const auto& e : bank.entries) {
    out << e.speaker_id << ',' << e.sample_count;
    for (Eigen::Index i = 0; i < e.style.size(); ++i) out << ',' << fmt_g9(e.style(i));
    out << '\n';
  }
  check(out.good(), Err::io_error, "failed writing style bank csv " + path.string());
}

Eigen::MatrixXf transfer(const ModelConfig& mc, const ParamStore<float>& params,
                         const Sample& content_norm, const Eigen::VectorXf& style,
                         const NormalizationStats& stats) {
  mc.validate();
  check(int(style.size()) == mc.d_style(), Err::dimension_mismatch,
        "style vector has " + std::to_string(style.size()) + " components, model expects " +
            std::to_string(mc.d_style()));
  SampleData<float> d = SampleData<float>::from_sample(content_norm);
  check(int(d.pose.rows()) == mc.frames, Err::dimension_mismatch,
        "content sample frame count does not match the model");
  Graph<float> g(false);
  BoundParams<float> bp(g, params, nullptr);
  Forward<float> f(mc, g, bp);
  Val content = f.encode_content(d);
  Val style_leaf = g.leaf(style.transpose().eval());
  Val mem = f.prepare_memory(content, style_leaf, d.frame_word);
  Eigen::MatrixXf normalized = f.decode_autoregressive(mem);
  check(normalized.allFinite(), Err::non_finite_value, "transfer produced non-finite pose");
  return denormalize_pose(normalized, stats.pose);
}

}  // namespace zsmstm
