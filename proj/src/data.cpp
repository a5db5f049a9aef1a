#include "zsmstm/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>
#include <unordered_map>

#include "zsmstm/io_util.hpp"
#include "zsmstm/rng.hpp"

namespace zsmstm {

namespace {

constexpr char kManifestHeader[] = "#ZSMSTM-MANIFEST v1";
constexpr char kIntervalCsvHeader[] = "#ZSMSTM-INTERVAL-CSV v1";
constexpr char kPoseCsvHeader[] = "#ZSMSTM-POSE v1";
// 15 chars + version byte = 16-byte magic
constexpr char kIntervalMagic[] = "ZSMSTM-INTERVAL";
constexpr uint8_t kIntervalVersion = 1;

void require_finite(const Eigen::MatrixXf& m, const std::string& what) {
  if (!m.allFinite()) fail(Err::non_finite_value, what + " contains NaN or Inf");
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_num(const std::string& s, const std::string& where) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    check(pos == s.size(), Err::malformed_manifest, where + ": trailing junk in number '" + s + "'");
    return v;
  } catch (const Error&) {
    throw;
  } catch (...) {
    fail(Err::malformed_manifest, where + ": bad number '" + s + "'");
  }
}

float parse_f32(const std::string& s, Err kind, const std::string& where) {
  try {
    size_t pos = 0;
    float v = std::stof(s, &pos);
    check(pos == s.size(), kind, where + ": trailing junk in number '" + s + "'");
    return v;
  } catch (const Error&) {
    throw;
  } catch (...) {
    fail(kind, where + ": bad number '" + s + "'");
  }
}

}  // namespace

void validate_alignment(const Sample& s) {
  check(!s.words.empty(), Err::empty_input, "interval has no words");
  check(s.alignment.size() == s.words.size(), Err::alignment_gap,
        "alignment has " + std::to_string(s.alignment.size()) + " spans for " +
            std::to_string(s.words.size()) + " words");
  int cursor = 0;
  for (size_t w = 0; w < s.alignment.size(); ++w) {
    const Span& sp = s.alignment[w];
    check(sp.begin == cursor, Err::alignment_gap,
          "span " + std::to_string(w) + " starts at " + std::to_string(sp.begin) +
              ", expected " + std::to_string(cursor));
    check(sp.end > sp.begin, Err::alignment_gap, "span " + std::to_string(w) + " is empty");
    cursor = sp.end;
  }
  check(cursor == s.frame_count(), Err::alignment_gap,
        "alignment covers " + std::to_string(cursor) + " of " +
            std::to_string(s.frame_count()) + " frames");
}

std::vector<int> frame_to_word(const std::vector<Span>& alignment, int frames) {
  std::vector<int> map(size_t(frames), -1);
  for (size_t w = 0; w < alignment.size(); ++w)
    for (int t = alignment[w].begin; t < alignment[w].end; ++t) {
      check(t >= 0 && t < frames, Err::alignment_gap, "span exceeds frame range");
      map[size_t(t)] = int(w);
    }
  for (int t = 0; t < frames; ++t)
    check(map[size_t(t)] >= 0, Err::alignment_gap, "frame " + std::to_string(t) + " not covered");
  return map;
}

const char* split_name(SplitKind k) {
  switch (k) {
    case SplitKind::train: return "train";
    case SplitKind::valid: return "valid";
    case SplitKind::test: return "test";
  }
  return "?";
}

SplitKind split_from_name(const std::string& name) {
  if (name == "train") return SplitKind::train;
  if (name == "valid") return SplitKind::valid;
  if (name == "test") return SplitKind::test;
  fail(Err::malformed_manifest, "unknown split '" + name + "'");
}

// ---- manifest -----------------------------------------------------------------

DatasetManifest load_manifest(const std::filesystem::path& path) {
  auto f = open_input(path, /*binary=*/false);
  DatasetManifest m;
  m.root = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  if (const char* env = std::getenv("ZSMSTM_DATA_ROOT"); env && *env) m.root = env;

  std::string line;
  check(bool(std::getline(f, line)), Err::malformed_manifest, path.string() + " is empty");
  check(trim(line) == kManifestHeader, Err::malformed_manifest,
        path.string() + ": bad header line '" + trim(line) + "'");

  bool have[5] = {false, false, false, false, false};
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::string where = path.string() + ":" + std::to_string(lineno);
    if (t.find('\t') == std::string::npos) {
      auto eq = t.find('=');
      check(eq != std::string::npos, Err::malformed_manifest, where + ": expected key=value or entry row");
      std::string key = trim(t.substr(0, eq)), val = trim(t.substr(eq + 1));
      if (key == "d_text") { m.d_text = int(parse_num(val, where)); have[0] = true; }
      else if (key == "n_mels") { m.n_mels = int(parse_num(val, where)); have[1] = true; }
      else if (key == "joints") { m.joints = int(parse_num(val, where)); have[2] = true; }
      else if (key == "frames") { m.frames = int(parse_num(val, where)); have[3] = true; }
      else if (key == "fps") { m.fps = parse_num(val, where); have[4] = true; }
      else fail(Err::malformed_manifest, where + ": unknown key '" + key + "'");
    } else {
      auto cols = split_on(t, '\t');
      check(cols.size() == 3, Err::malformed_manifest, where + ": expected speaker<TAB>split<TAB>path");
      IntervalEntry e;
      e.speaker_id = trim(cols[0]);
      e.split = split_from_name(trim(cols[1]));
      e.rel_path = trim(cols[2]);
      check(!e.speaker_id.empty() && !e.rel_path.empty(), Err::malformed_manifest,
            where + ": empty speaker or path");
      m.entries.push_back(std::move(e));
    }
  }
  for (int i = 0; i < 5; ++i)
    check(have[i], Err::malformed_manifest, path.string() + ": missing header key #" + std::to_string(i));
  check(m.d_text > 0 && m.n_mels > 0 && m.joints > 0 && m.frames > 0 && m.fps > 0,
        Err::malformed_manifest, path.string() + ": non-positive dimension in header");
  check(!m.entries.empty(), Err::empty_dataset, path.string() + " lists no intervals");
  return m;
}

void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  auto f = open_output(path, /*binary=*/false);
  f << kManifestHeader << "\n";
  f << "d_text=" << m.d_text << "\n";
  f << "n_mels=" << m.n_mels << "\n";
  f << "joints=" << m.joints << "\n";
  f << "frames=" << m.frames << "\n";
  f << "fps=" << fmt_g9(m.fps) << "\n";
  for (const auto& e : m.entries)
    f << e.speaker_id << '\t' << split_name(e.split) << '\t' << e.rel_path << "\n";
  check(bool(f), Err::io_error, "write failed: " + path.string());
}

// ---- interval binary -----------------------------------------------------------

void write_interval_binary(const Sample& s, const std::filesystem::path& path) {
  validate_alignment(s);
  require_finite(s.pose, "pose");
  const int W = s.word_count();
  const int d_text = int(s.words[0].text_vec.cols());
  const int n_mels = int(s.words[0].mel.cols());

  auto f = open_output(path);
  f.write(kIntervalMagic, 15);
  write_u8(f, kIntervalVersion);
  write_str(f, s.speaker_id);
  write_u32(f, uint32_t(W));
  write_u32(f, uint32_t(s.frame_count()));
  write_u32(f, uint32_t(s.pose.cols() / 2));
  write_u32(f, uint32_t(d_text));
  write_u32(f, uint32_t(n_mels));
  write_f64(f, s.fps);
  for (const auto& w : s.words) {
    check(int(w.text_vec.cols()) == d_text && w.text_vec.rows() == 1, Err::dimension_mismatch,
          "inconsistent text vector width");
    require_finite(w.text_vec, "text");
    for (int j = 0; j < d_text; ++j) write_f32(f, w.text_vec(0, j));
  }
  for (const auto& w : s.words) {
    check(int(w.mel.cols()) == n_mels, Err::dimension_mismatch, "inconsistent mel width");
    require_finite(w.mel, "mel");
    write_u32(f, uint32_t(w.mel.rows()));
    for (int r = 0; r < w.mel.rows(); ++r)
      for (int c = 0; c < n_mels; ++c) write_f32(f, w.mel(r, c));
  }
  for (int r = 0; r < s.pose.rows(); ++r)
    for (int c = 0; c < s.pose.cols(); ++c) write_f32(f, s.pose(r, c));
  for (const auto& sp : s.alignment) {
    write_u32(f, uint32_t(sp.begin));
    write_u32(f, uint32_t(sp.end));
  }
  check(bool(f), Err::io_error, "write failed: " + path.string());
}

namespace {

Sample parse_interval_binary(const std::filesystem::path& path, std::ifstream& f) {
  char magic[15];
  f.read(magic, 15);
  check(bool(f) && std::memcmp(magic, kIntervalMagic, 15) == 0, Err::malformed_interval,
        path.string() + ": bad magic");
  uint8_t ver = read_u8(f);
  check(ver == kIntervalVersion, Err::malformed_interval,
        path.string() + ": unsupported version " + std::to_string(ver));
  Sample s;
  s.speaker_id = read_str(f);
  uint32_t W = read_u32(f), T = read_u32(f), J = read_u32(f);
  uint32_t d_text = read_u32(f), n_mels = read_u32(f);
  s.fps = read_f64(f);
  check(W > 0 && T > 0 && J > 0 && d_text > 0 && n_mels > 0, Err::malformed_interval,
        path.string() + ": zero dimension in header");
  check(W <= T, Err::malformed_interval, path.string() + ": more words than frames");
  s.words.resize(W);
  for (auto& w : s.words) {
    w.text_vec.resize(1, d_text);
    for (uint32_t j = 0; j < d_text; ++j) w.text_vec(0, int(j)) = read_f32(f);
  }
  for (auto& w : s.words) {
    uint32_t rows = read_u32(f);
    check(rows > 0 && rows <= (1u << 20), Err::malformed_interval, path.string() + ": bad mel length");
    w.mel.resize(rows, n_mels);
    for (uint32_t r = 0; r < rows; ++r)
      for (uint32_t c = 0; c < n_mels; ++c) w.mel(int(r), int(c)) = read_f32(f);
  }
  s.pose.resize(T, 2 * J);
  for (uint32_t r = 0; r < T; ++r)
    for (uint32_t c = 0; c < 2 * J; ++c) s.pose(int(r), int(c)) = read_f32(f);
  s.alignment.resize(W);
  for (auto& sp : s.alignment) {
    sp.begin = int(read_u32(f));
    sp.end = int(read_u32(f));
  }
  return s;
}

Sample parse_interval_csv(const std::filesystem::path& path) {
  auto f = open_input(path, /*binary=*/false);
  std::string line;
  check(bool(std::getline(f, line)) && trim(line) == kIntervalCsvHeader, Err::malformed_interval,
        path.string() + ": bad CSV header");
  auto next_line = [&](const char* what) {
    check(bool(std::getline(f, line)), Err::malformed_interval,
          path.string() + ": truncated before " + what);
    return trim(line);
  };

  Sample s;
  int W = -1, T = -1, J = -1, d_text = -1, n_mels = -1;
  // key=value block until [text]
  for (;;) {
    std::string t = next_line("header");
    if (t == "[text]") break;
    auto eq = t.find('=');
    check(eq != std::string::npos, Err::malformed_interval, path.string() + ": expected key=value, got '" + t + "'");
    std::string key = t.substr(0, eq), val = t.substr(eq + 1);
    if (key == "speaker") s.speaker_id = val;
    else if (key == "words") W = int(parse_num(val, path.string()));
    else if (key == "frames") T = int(parse_num(val, path.string()));
    else if (key == "joints") J = int(parse_num(val, path.string()));
    else if (key == "d_text") d_text = int(parse_num(val, path.string()));
    else if (key == "n_mels") n_mels = int(parse_num(val, path.string()));
    else if (key == "fps") s.fps = parse_num(val, path.string());
    else fail(Err::malformed_interval, path.string() + ": unknown key '" + key + "'");
  }
  check(W > 0 && T > 0 && J > 0 && d_text > 0 && n_mels > 0, Err::malformed_interval,
        path.string() + ": missing or non-positive dimensions");

  auto parse_row = [&](const std::string& t, int expect, Eigen::MatrixXf& m, int row) {
    auto cells = split_on(t, ',');
    check(int(cells.size()) == expect, Err::malformed_interval,
          path.string() + ": expected " + std::to_string(expect) + " cells, got " +
              std::to_string(cells.size()));
    for (int i = 0; i < expect; ++i)
      m(row, i) = parse_f32(trim(cells[i]), Err::malformed_interval, path.string());
  };

  s.words.resize(size_t(W));
  for (int w = 0; w < W; ++w) {
    s.words[size_t(w)].text_vec.resize(1, d_text);
    parse_row(next_line("text row"), d_text, s.words[size_t(w)].text_vec, 0);
  }
  for (int w = 0; w < W; ++w) {
    std::string t = next_line("[mel]");
    check(t == "[mel]", Err::malformed_interval, path.string() + ": expected [mel], got '" + t + "'");
    t = next_line("mel rows");
    auto eq = t.find('=');
    check(eq != std::string::npos && t.substr(0, eq) == "rows", Err::malformed_interval,
          path.string() + ": expected rows=N");
    int rows = int(parse_num(t.substr(eq + 1), path.string()));
    check(rows > 0, Err::malformed_interval, path.string() + ": empty mel");
    s.words[size_t(w)].mel.resize(rows, n_mels);
    for (int r = 0; r < rows; ++r) parse_row(next_line("mel row"), n_mels, s.words[size_t(w)].mel, r);
  }
  std::string t = next_line("[pose]");
  check(t == "[pose]", Err::malformed_interval, path.string() + ": expected [pose], got '" + t + "'");
  s.pose.resize(T, 2 * J);
  for (int r = 0; r < T; ++r) parse_row(next_line("pose row"), 2 * J, s.pose, r);
  t = next_line("[alignment]");
  check(t == "[alignment]", Err::malformed_interval, path.string() + ": expected [alignment]");
  s.alignment.resize(size_t(W));
  for (int w = 0; w < W; ++w) {
    auto cells = split_on(next_line("alignment row"), ',');
    check(cells.size() == 2, Err::malformed_interval, path.string() + ": alignment row needs begin,end");
    s.alignment[size_t(w)].begin = int(parse_num(trim(cells[0]), path.string()));
    s.alignment[size_t(w)].end = int(parse_num(trim(cells[1]), path.string()));
  }
  return s;
}

}  // namespace

void write_interval_csv(const Sample& s, const std::filesystem::path& path) {
  validate_alignment(s);
  require_finite(s.pose, "pose");
  auto f = open_output(path, /*binary=*/false);
  const int d_text = int(s.words[0].text_vec.cols());
  const int n_mels = int(s.words[0].mel.cols());
  f << kIntervalCsvHeader << "\n";
  f << "speaker=" << s.speaker_id << "\n";
  f << "words=" << s.word_count() << "\n";
  f << "frames=" << s.frame_count() << "\n";
  f << "joints=" << s.pose.cols() / 2 << "\n";
  f << "d_text=" << d_text << "\n";
  f << "n_mels=" << n_mels << "\n";
  f << "fps=" << fmt_g9(s.fps) << "\n";
  auto put_row = [&](const Eigen::MatrixXf& m, int row) {
    for (int c = 0; c < m.cols(); ++c) f << (c ? "," : "") << fmt_g9(m(row, c));
    f << "\n";
  };
  f << "[text]\n";
  for (const auto& w : s.words) put_row(w.text_vec, 0);
  for (const auto& w : s.words) {
    f << "[mel]\nrows=" << w.mel.rows() << "\n";
    for (int r = 0; r < w.mel.rows(); ++r) put_row(w.mel, r);
  }
  f << "[pose]\n";
  for (int r = 0; r < s.pose.rows(); ++r) put_row(s.pose, r);
  f << "[alignment]\n";
  for (const auto& sp : s.alignment) f << sp.begin << "," << sp.end << "\n";
  check(bool(f), Err::io_error, "write failed: " + path.string());
}

Sample parse_interval(const std::filesystem::path& path) {
  Sample s;
  {
    auto f = open_input(path);
    char first = 0;
    f.get(first);
    check(bool(f), Err::malformed_interval, path.string() + " is empty");
    f.seekg(0);
    if (first == '#') {
      f.close();
      s = parse_interval_csv(path);
    } else {
      s = parse_interval_binary(path, f);
    }
  }
  validate_alignment(s);
  require_finite(s.pose, path.string() + ": pose");
  for (const auto& w : s.words) {
    require_finite(w.text_vec, path.string() + ": text");
    require_finite(w.mel, path.string() + ": mel");
  }
  return s;
}

Sample parse_interval(const std::filesystem::path& path, const DatasetManifest& m) {
  Sample s = parse_interval(path);
  check(int(s.words[0].text_vec.cols()) == m.d_text, Err::dimension_mismatch,
        path.string() + ": d_text " + std::to_string(s.words[0].text_vec.cols()) +
            " != manifest " + std::to_string(m.d_text));
  check(int(s.words[0].mel.cols()) == m.n_mels, Err::dimension_mismatch,
        path.string() + ": n_mels mismatch with manifest");
  check(int(s.pose.cols()) == 2 * m.joints, Err::dimension_mismatch,
        path.string() + ": joint count mismatch with manifest");
  check(s.frame_count() == m.frames, Err::dimension_mismatch,
        path.string() + ": frame count mismatch with manifest");
  return s;
}

// ---- pose csv ------------------------------------------------------------------

void write_pose_csv(const Eigen::MatrixXf& pose, double fps, const std::filesystem::path& path) {
  check(pose.rows() > 0 && pose.cols() > 0 && pose.cols() % 2 == 0, Err::dimension_mismatch,
        "pose matrix must be T x 2J");
  require_finite(pose, "pose");
  auto f = open_output(path, /*binary=*/false);
  f << kPoseCsvHeader << "\n";
  f << "frames=" << pose.rows() << ",joints=" << pose.cols() / 2 << ",fps=" << fmt_g9(fps) << "\n";
  for (int r = 0; r < pose.rows(); ++r) {
    for (int c = 0; c < pose.cols(); ++c) f << (c ? "," : "") << fmt_g9(pose(r, c));
    f << "\n";
  }
  check(bool(f), Err::io_error, "write failed: " + path.string());
}

Eigen::MatrixXf read_pose_csv(const std::filesystem::path& path, double* fps_out) {
  auto f = open_input(path, /*binary=*/false);
  std::string line;
  check(bool(std::getline(f, line)) && trim(line) == kPoseCsvHeader, Err::malformed_interval,
        path.string() + ": bad pose header");
  check(bool(std::getline(f, line)), Err::malformed_interval, path.string() + ": missing dims line");
  int T = -1, J = -1;
  double fps = 15.0;
  for (const auto& kv : split_on(trim(line), ',')) {
    auto eq = kv.find('=');
    check(eq != std::string::npos, Err::malformed_interval, path.string() + ": bad dims line");
    std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
    if (key == "frames") T = int(parse_num(val, path.string()));
    else if (key == "joints") J = int(parse_num(val, path.string()));
    else if (key == "fps") fps = parse_num(val, path.string());
    else fail(Err::malformed_interval, path.string() + ": unknown dims key '" + key + "'");
  }
  check(T > 0 && J > 0 && fps > 0, Err::malformed_interval, path.string() + ": bad dimensions");
  Eigen::MatrixXf pose(T, 2 * J);
  for (int r = 0; r < T; ++r) {
    check(bool(std::getline(f, line)), Err::malformed_interval, path.string() + ": truncated pose");
    auto cells = split_on(trim(line), ',');
    check(int(cells.size()) == 2 * J, Err::malformed_interval, path.string() + ": bad pose row width");
    for (int c = 0; c < 2 * J; ++c)
      pose(r, c) = parse_f32(trim(cells[size_t(c)]), Err::malformed_interval, path.string());
  }
  require_finite(pose, path.string() + ": pose");
  if (fps_out) *fps_out = fps;
  return pose;
}

// ---- normalization --------------------------------------------------------------

namespace {

struct Accum {
  Eigen::VectorXd sum, sumsq;
  int64_t count = 0;
  void init(int dim) {
    sum = Eigen::VectorXd::Zero(dim);
    sumsq = Eigen::VectorXd::Zero(dim);
  }
  void add_rows(const Eigen::MatrixXf& m) {
    for (int r = 0; r < m.rows(); ++r) {
      Eigen::VectorXd row = m.row(r).cast<double>();
      sum += row;
      sumsq += row.cwiseProduct(row);
      ++count;
    }
  }
  StreamStats finish() const {
    StreamStats st;
    check(count > 0, Err::empty_dataset, "no rows to fit normalization on");
    st.mean = sum / double(count);
    Eigen::VectorXd var = sumsq / double(count) - st.mean.cwiseProduct(st.mean);
    var = var.cwiseMax(0.0);  // clamp the tiny negatives cancellation can produce
    st.stddev = var.cwiseSqrt();
    st.degenerate.resize(size_t(st.mean.size()));
    for (int i = 0; i < st.mean.size(); ++i) st.degenerate[size_t(i)] = st.stddev[i] == 0.0 ? 1 : 0;
    return st;
  }
};

// x' = (x - mu) * 0.5 / sigma, sigma treated as 1 where degenerate
Eigen::MatrixXd apply_stream_d(const Eigen::MatrixXd& m, const StreamStats& st, bool forward) {
  check(int(m.cols()) == st.dim(), Err::dimension_mismatch,
        "stream width " + std::to_string(m.cols()) + " != stats width " + std::to_string(st.dim()));
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (int c = 0; c < m.cols(); ++c) {
    double sigma = st.degenerate[size_t(c)] ? 1.0 : st.stddev[c];
    double mu = st.mean[c];
    for (int r = 0; r < m.rows(); ++r) {
      double x = m(r, c);
      out(r, c) = forward ? (x - mu) * 0.5 / sigma : x * sigma * 2.0 + mu;
    }
  }
  return out;
}

Eigen::MatrixXf apply_stream(const Eigen::MatrixXf& m, const StreamStats& st, bool forward) {
  return apply_stream_d(m.cast<double>(), st, forward).cast<float>();
}

}  // namespace

Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& rows, const StreamStats& st) {
  return apply_stream_d(rows, st, true);
}

Eigen::MatrixXd denormalize_rows(const Eigen::MatrixXd& rows, const StreamStats& st) {
  return apply_stream_d(rows, st, false);
}

NormalizationStats fit_normalization(const std::vector<Sample>& train) {
  check(!train.empty(), Err::empty_dataset, "cannot fit normalization on an empty split");
  const int pose_dim = int(train[0].pose.cols());
  const int d_text = int(train[0].words.at(0).text_vec.cols());
  const int n_mels = int(train[0].words.at(0).mel.cols());
  Accum pose, mel, text;
  pose.init(pose_dim);
  mel.init(n_mels);
  text.init(d_text);
  for (const auto& s : train) {
    check(int(s.pose.cols()) == pose_dim, Err::dimension_mismatch, "pose width varies across samples");
    pose.add_rows(s.pose);
    for (const auto& w : s.words) {
      check(int(w.text_vec.cols()) == d_text && int(w.mel.cols()) == n_mels,
            Err::dimension_mismatch, "word feature width varies across samples");
      mel.add_rows(w.mel);
      text.add_rows(w.text_vec);
    }
  }
  NormalizationStats st;
  st.pose = pose.finish();
  st.mel = mel.finish();
  st.text = text.finish();
  return st;
}

Eigen::MatrixXf normalize_pose(const Eigen::MatrixXf& pose, const StreamStats& st) {
  return apply_stream(pose, st, true);
}

Eigen::MatrixXf denormalize_pose(const Eigen::MatrixXf& pose, const StreamStats& st) {
  return apply_stream(pose, st, false);
}

Sample normalize(const Sample& s, const NormalizationStats& st) {
  Sample out = s;
  out.pose = apply_stream(s.pose, st.pose, true);
  for (size_t w = 0; w < s.words.size(); ++w) {
    out.words[w].mel = apply_stream(s.words[w].mel, st.mel, true);
    out.words[w].text_vec = apply_stream(s.words[w].text_vec, st.text, true);
  }
  return out;
}

Sample denormalize(const Sample& s, const NormalizationStats& st) {
  Sample out = s;
  out.pose = apply_stream(s.pose, st.pose, false);
  for (size_t w = 0; w < s.words.size(); ++w) {
    out.words[w].mel = apply_stream(s.words[w].mel, st.mel, false);
    out.words[w].text_vec = apply_stream(s.words[w].text_vec, st.text, false);
  }
  return out;
}

// ---- splits ----------------------------------------------------------------------

const std::vector<std::string> kDefaultSeenSpeakers = {
    "Shelly", "Jon", "Fallon", "Bee", "Ellen", "Oliver", "Lec_cosmic", "Lec_hist",
    "Seth", "Conan", "Angelica", "Rock", "Noah", "Ytch_prof", "Lec_law", "Ytch_dating"};

const std::vector<std::string> kDefaultUnseenSpeakers = {
    "Lec_evol", "Almaram", "Huckabee", "Ytch_charisma", "Minhaj", "Chemistry"};

SpeakerSplit split_speakers(const DatasetManifest& m,
                            const std::vector<std::string>& seen,
                            const std::vector<std::string>& unseen) {
  std::set<std::string> seen_set(seen.begin(), seen.end());
  std::set<std::string> unseen_set(unseen.begin(), unseen.end());
  for (const auto& s : seen_set)
    check(!unseen_set.count(s), Err::overlapping_splits, "speaker '" + s + "' in both seen and unseen lists");

  SpeakerSplit out;
  for (size_t i = 0; i < m.entries.size(); ++i) {
    const auto& e = m.entries[i];
    if (seen_set.count(e.speaker_id)) {
      switch (e.split) {
        case SplitKind::train: out.train.push_back(i); break;
        case SplitKind::valid: out.valid.push_back(i); break;
        case SplitKind::test: out.seen_test.push_back(i); break;
      }
    } else if (unseen_set.count(e.speaker_id)) {
      check(e.split == SplitKind::test, Err::overlapping_splits,
            "unseen speaker '" + e.speaker_id + "' appears in split '" + split_name(e.split) + "'");
      out.unseen_test.push_back(i);
    } else {
      fail(Err::unknown_speaker, "manifest speaker '" + e.speaker_id + "' is in neither list");
    }
  }
  return out;
}

std::vector<std::vector<size_t>> make_batches(size_t n, int batch_size, uint64_t seed) {
  check(n > 0, Err::empty_dataset, "cannot batch zero samples");
  check(batch_size > 0, Err::bad_config, "batch_size must be positive");
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(mix_seed(seed, 0x6261746368ULL));  // "batch"
  rng.shuffle(order);
  std::vector<std::vector<size_t>> batches;
  for (size_t at = 0; at < n; at += size_t(batch_size)) {
    size_t hi = std::min(n, at + size_t(batch_size));
    batches.emplace_back(order.begin() + long(at), order.begin() + long(hi));
  }
  return batches;
}

}  // namespace zsmstm
