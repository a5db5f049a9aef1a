#include "zsmstm/checkpoint.hpp"

#include <cstring>

#include "zsmstm/io_util.hpp"

namespace zsmstm {

namespace {

constexpr char kMagic[] = "ZSMSTM-CHECKPNT";  // 15 chars + version byte
constexpr uint8_t kVersion = 1;

void write_stream_stats(std::ostream& os, const StreamStats& st) {
  write_u32(os, uint32_t(st.mean.size()));
  for (Eigen::Index i = 0; i < st.mean.size(); ++i) write_f64(os, st.mean[i]);
  for (Eigen::Index i = 0; i < st.stddev.size(); ++i) write_f64(os, st.stddev[i]);
  for (uint8_t d : st.degenerate) write_u8(os, d);
}

StreamStats read_stream_stats(std::istream& is) {
  StreamStats st;
  uint32_t dim = read_u32(is);
  check(dim > 0 && dim <= (1u << 20), Err::io_error, "checkpoint: bad stats width");
  st.mean.resize(dim);
  st.stddev.resize(dim);
  st.degenerate.resize(dim);
  for (uint32_t i = 0; i < dim; ++i) st.mean[int(i)] = read_f64(is);
  for (uint32_t i = 0; i < dim; ++i) st.stddev[int(i)] = read_f64(is);
  for (uint32_t i = 0; i < dim; ++i) st.degenerate[i] = read_u8(is);
  return st;
}

void write_f32_matrix(std::ostream& os, const Eigen::MatrixXf& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) write_f32(os, m(r, c));
}

void read_f32_matrix(std::istream& is, Eigen::MatrixXf& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = read_f32(is);
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  auto f = open_output(path);
  f.write(kMagic, 15);
  write_u8(f, kVersion);
  write_u8(f, ck.has_trainer ? 1 : 0);
  write_str(f, ck.config.to_json().dump());
  write_stream_stats(f, ck.stats.pose);
  write_stream_stats(f, ck.stats.mel);
  write_stream_stats(f, ck.stats.text);

  write_u32(f, uint32_t(ck.params.count()));
  for (size_t i = 0; i < ck.params.count(); ++i) {
    const auto& t = ck.params.tensor(i);
    write_str(f, ck.params.name(i));
    write_u32(f, uint32_t(t.rows()));
    write_u32(f, uint32_t(t.cols()));
    write_f32_matrix(f, t);
  }

  if (ck.has_trainer) {
    check(ck.adam_m.size() == ck.params.count() && ck.adam_v.size() == ck.params.count(),
          Err::bad_config, "trainer state moments misaligned with parameters");
    write_str(f, ck.train_config.to_json().dump());
    write_u64(f, ck.step);
    write_u8(f, ck.has_best ? 1 : 0);
    write_f64(f, ck.has_best ? ck.best_val : 0.0);
    for (size_t i = 0; i < ck.params.count(); ++i) {
      write_f32_matrix(f, ck.adam_m[i]);
      write_f32_matrix(f, ck.adam_v[i]);
    }
  }
  check(bool(f), Err::io_error, "write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  auto f = open_input(path);
  char magic[15];
  f.read(magic, 15);
  check(bool(f) && std::memcmp(magic, kMagic, 15) == 0, Err::io_error,
        path.string() + ": not a checkpoint file");
  uint8_t ver = read_u8(f);
  check(ver == kVersion, Err::io_error,
        path.string() + ": unsupported checkpoint version " + std::to_string(ver));
  Checkpoint ck;
  ck.has_trainer = read_u8(f) != 0;
  try {
    ck.config = ModelConfig::from_json(nlohmann::json::parse(read_str(f)));
  } catch (const nlohmann::json::exception& e) {
    fail(Err::io_error, path.string() + ": bad embedded model config: " + e.what());
  }
  ck.stats.pose = read_stream_stats(f);
  ck.stats.mel = read_stream_stats(f);
  ck.stats.text = read_stream_stats(f);

  uint32_t count = read_u32(f);
  check(count > 0 && count <= (1u << 20), Err::io_error, path.string() + ": bad parameter count");
  for (uint32_t i = 0; i < count; ++i) {
    std::string name = read_str(f);
    uint32_t rows = read_u32(f), cols = read_u32(f);
    check(rows > 0 && cols > 0 && uint64_t(rows) * cols <= (1ull << 31), Err::io_error,
          path.string() + ": bad tensor shape for '" + name + "'");
    size_t idx = ck.params.add(name, Eigen::Index(rows), Eigen::Index(cols));
    read_f32_matrix(f, ck.params.tensor(idx));
  }

  if (ck.has_trainer) {
    try {
      ck.train_config = TrainConfig::from_json(nlohmann::json::parse(read_str(f)));
    } catch (const nlohmann::json::exception& e) {
      fail(Err::io_error, path.string() + ": bad embedded train config: " + e.what());
    }
    ck.step = read_u64(f);
    ck.has_best = read_u8(f) != 0;
    double bv = read_f64(f);
    if (ck.has_best) ck.best_val = bv;
    ck.adam_m.resize(count);
    ck.adam_v.resize(count);
    for (uint32_t i = 0; i < count; ++i) {
      const auto& t = ck.params.tensor(i);
      ck.adam_m[i].resize(t.rows(), t.cols());
      ck.adam_v[i].resize(t.rows(), t.cols());
      read_f32_matrix(f, ck.adam_m[i]);
      read_f32_matrix(f, ck.adam_v[i]);
    }
  }
  return ck;
}

uint64_t params_hash(const ParamStore<float>& params) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (size_t i = 0; i < params.count(); ++i) {
    const std::string& name = params.name(i);
    h = fnv1a64(name.data(), name.size(), h);
    const auto& t = params.tensor(i);
    uint32_t shape[2] = {uint32_t(t.rows()), uint32_t(t.cols())};
    h = fnv1a64(shape, sizeof shape, h);
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      for (Eigen::Index c = 0; c < t.cols(); ++c) {
        float v = t(r, c);
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        h = fnv1a64(&bits, 4, h);
      }
  }
  return h;
}

}  // namespace zsmstm
