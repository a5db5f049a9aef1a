#include "zsmstm/metrics.hpp"

#include <cmath>

#include "zsmstm/errors.hpp"
#include "zsmstm/io_util.hpp"

namespace zsmstm {

namespace {

// Successive row differences of a T x 2J track, in double for metric math.
Eigen::MatrixXd row_diff(const Eigen::MatrixXd& m) {
  return m.bottomRows(m.rows() - 1) - m.topRows(m.rows() - 1);
}

// mean over rows and joints of the per-joint (dx,dy) euclidean norm
double mean_joint_norm(const Eigen::MatrixXd& m) {
  const int joints = int(m.cols()) / 2;
  double acc = 0;
  for (int r = 0; r < m.rows(); ++r)
    for (int j = 0; j < joints; ++j)
      acc += std::hypot(m(r, 2 * j), m(r, 2 * j + 1));
  return acc / (double(m.rows()) * double(joints));
}

Eigen::MatrixXd nth_difference(const Eigen::MatrixXf& pose, int order) {
  check(pose.cols() >= 2 && pose.cols() % 2 == 0, Err::dimension_mismatch, "pose must be T x 2J");
  check(int(pose.rows()) > order, Err::too_short,
        "need more than " + std::to_string(order) + " frames for an order-" +
            std::to_string(order) + " difference");
  Eigen::MatrixXd d = pose.cast<double>();
  for (int i = 0; i < order; ++i) d = row_diff(d);
  return d;
}

Eigen::MatrixXf select_joints(const Eigen::MatrixXf& pose, const std::vector<int>& joints) {
  check(!joints.empty(), Err::empty_input, "joint subset is empty");
  Eigen::MatrixXf out(pose.rows(), 2 * long(joints.size()));
  for (size_t k = 0; k < joints.size(); ++k) {
    int j = joints[k];
    check(j >= 0 && 2 * j + 1 < pose.cols(), Err::bad_index,
          "joint index " + std::to_string(j) + " out of range");
    out.col(2 * long(k)) = pose.col(2 * j);
    out.col(2 * long(k) + 1) = pose.col(2 * j + 1);
  }
  return out;
}

}  // namespace

double velocity(const Eigen::MatrixXf& pose, double fps) {
  return mean_joint_norm(nth_difference(pose, 1)) * fps;
}

double acceleration(const Eigen::MatrixXf& pose, double fps) {
  return mean_joint_norm(nth_difference(pose, 2)) * fps * fps;
}

double jerk(const Eigen::MatrixXf& pose, double fps) {
  return mean_joint_norm(nth_difference(pose, 3)) * fps * fps * fps;
}

std::array<double, 3> joint_subset_dynamics(const Eigen::MatrixXf& pose, double fps,
                                            const std::vector<int>& joint_indices) {
  Eigen::MatrixXf sub = select_joints(pose, joint_indices);
  return {velocity(sub, fps), acceleration(sub, fps), jerk(sub, fps)};
}

double bbox_perimeter(const Eigen::MatrixXf& pose) {
  check(pose.rows() > 0 && pose.cols() >= 2 && pose.cols() % 2 == 0, Err::dimension_mismatch,
        "pose must be T x 2J");
  const int joints = int(pose.cols()) / 2;
  double acc = 0;
  for (int r = 0; r < pose.rows(); ++r) {
    double xmin = pose(r, 0), xmax = pose(r, 0), ymin = pose(r, 1), ymax = pose(r, 1);
    for (int j = 1; j < joints; ++j) {
      xmin = std::min(xmin, double(pose(r, 2 * j)));
      xmax = std::max(xmax, double(pose(r, 2 * j)));
      ymin = std::min(ymin, double(pose(r, 2 * j + 1)));
      ymax = std::max(ymax, double(pose(r, 2 * j + 1)));
    }
    acc += 2.0 * ((xmax - xmin) + (ymax - ymin));
  }
  return acc / double(pose.rows());
}

const std::vector<int> kDefaultWristJoints = {4, 7};

SequenceMetrics sequence_metrics(const Eigen::MatrixXf& pose, double fps,
                                 const std::vector<int>& wrists) {
  SequenceMetrics m;
  m.velocity = velocity(pose, fps);
  m.acceleration = acceleration(pose, fps);
  m.jerk = jerk(pose, fps);
  auto w = joint_subset_dynamics(pose, fps, wrists);
  m.wrist_velocity = w[0];
  m.wrist_acceleration = w[1];
  m.wrist_jerk = w[2];
  m.bbox_perimeter = bbox_perimeter(pose);
  return m;
}

SequenceMetrics mean_metrics(const std::vector<SequenceMetrics>& batch) {
  check(!batch.empty(), Err::empty_input, "cannot average zero metric sets");
  SequenceMetrics m;
  for (const auto& b : batch) {
    m.velocity += b.velocity;
    m.acceleration += b.acceleration;
    m.jerk += b.jerk;
    m.wrist_velocity += b.wrist_velocity;
    m.wrist_acceleration += b.wrist_acceleration;
    m.wrist_jerk += b.wrist_jerk;
    m.bbox_perimeter += b.bbox_perimeter;
  }
  double n = double(batch.size());
  m.velocity /= n;
  m.acceleration /= n;
  m.jerk /= n;
  m.wrist_velocity /= n;
  m.wrist_acceleration /= n;
  m.wrist_jerk /= n;
  m.bbox_perimeter /= n;
  return m;
}

std::vector<DistanceRow> distance_report(const SequenceMetrics& source,
                                         const SequenceMetrics& target,
                                         const SequenceMetrics& model) {
  auto row = [](const char* name, double s, double t, double m) {
    DistanceRow r;
    r.metric = name;
    r.source_dist = std::abs(s - t);
    r.model_dist = std::abs(m - t);
    double denom = r.source_dist + r.model_dist;
    if (denom == 0.0) {
      r.source_pct = r.model_pct = 50.0;
    } else {
      r.source_pct = 100.0 * r.source_dist / denom;
      r.model_pct = 100.0 * r.model_dist / denom;
    }
    return r;
  };
  return {
      row("velocity", source.velocity, target.velocity, model.velocity),
      row("acceleration", source.acceleration, target.acceleration, model.acceleration),
      row("jerk", source.jerk, target.jerk, model.jerk),
      row("wrist_velocity", source.wrist_velocity, target.wrist_velocity, model.wrist_velocity),
      row("wrist_acceleration", source.wrist_acceleration, target.wrist_acceleration,
          model.wrist_acceleration),
      row("wrist_jerk", source.wrist_jerk, target.wrist_jerk, model.wrist_jerk),
      row("bbox_perimeter", source.bbox_perimeter, target.bbox_perimeter, model.bbox_perimeter),
  };
}

void write_distance_csv(const std::vector<DistanceRow>& rows, const std::filesystem::path& path) {
  auto f = open_output(path, /*binary=*/false);
  f << "metric,source_dist,model_dist,source_pct,model_pct\n";
  for (const auto& r : rows)
    f << r.metric << "," << fmt_g9(r.source_dist) << "," << fmt_g9(r.model_dist) << ","
      << fmt_g9(r.source_pct) << "," << fmt_g9(r.model_pct) << "\n";
  check(bool(f), Err::io_error, "write failed: " + path.string());
}

void write_distance_svg(const std::vector<DistanceRow>& rows, const std::filesystem::path& path) {
  check(!rows.empty(), Err::empty_input, "no rows to plot");
  const int bar_w = 28, pair_gap = 18, group_gap = 36, left = 60, top = 30;
  const int plot_h = 240, bottom = 90;
  const int group_w = 2 * bar_w + pair_gap;
  const int width = left + int(rows.size()) * (group_w + group_gap) + 40;
  const int height = top + plot_h + bottom;
  auto f = open_output(path, /*binary=*/false);
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\">\n";
  f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // y axis: 0..100%
  for (int pct = 0; pct <= 100; pct += 25) {
    int y = top + plot_h - pct * plot_h / 100;
    f << "<line x1=\"" << left - 6 << "\" y1=\"" << y << "\" x2=\"" << width - 20 << "\" y2=\"" << y
      << "\" stroke=\"#ddd\"/>\n";
    f << "<text x=\"" << left - 10 << "\" y=\"" << y + 4
      << "\" font-size=\"11\" text-anchor=\"end\" font-family=\"sans-serif\">" << pct << "</text>\n";
  }
  int x = left + group_gap / 2;
  for (const auto& r : rows) {
    int hs = int(r.source_pct * plot_h / 100.0 + 0.5);
    int hm = int(r.model_pct * plot_h / 100.0 + 0.5);
    f << "<rect x=\"" << x << "\" y=\"" << top + plot_h - hs << "\" width=\"" << bar_w
      << "\" height=\"" << hs << "\" fill=\"#7a9cc6\"/>\n";
    f << "<rect x=\"" << x + bar_w + pair_gap << "\" y=\"" << top + plot_h - hm << "\" width=\""
      << bar_w << "\" height=\"" << hm << "\" fill=\"#c67a7a\"/>\n";
    f << "<text x=\"" << x + group_w / 2 << "\" y=\"" << top + plot_h + 16
      << "\" font-size=\"10\" text-anchor=\"middle\" font-family=\"sans-serif\" transform=\"rotate(30 "
      << x + group_w / 2 << " " << top + plot_h + 16 << ")\">" << r.metric << "</text>\n";
    x += group_w + group_gap;
  }
  f << "<text x=\"" << left << "\" y=\"" << height - 14
    << "\" font-size=\"11\" font-family=\"sans-serif\">share of distance-to-target (%%): blue=source "
       "red=model; lower model bars mean the transfer moved closer to the target style</text>\n";
  f << "</svg>\n";
  check(bool(f), Err::io_error, "write failed: " + path.string());
}

}  // namespace zsmstm
