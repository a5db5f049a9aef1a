#pragma once
// Expressivity metrics over pose tracks: finite-difference velocity /
// acceleration / jerk (full body and wrists-only) plus mean bounding-box
// perimeter, and the source-vs-model distance report used to judge
// style transfer.

#include <Eigen/Core>
#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace zsmstm {

struct SequenceMetrics {
  double velocity = 0;
  double acceleration = 0;
  double jerk = 0;
  double wrist_velocity = 0;
  double wrist_acceleration = 0;
  double wrist_jerk = 0;
  double bbox_perimeter = 0;
};

// Mean over frames and joints of the 2D per-joint displacement norm between
// consecutive frames, scaled by fps (units: position units per second).
double velocity(const Eigen::MatrixXf& pose, double fps);
// Same on the second / third finite difference, scaled by fps^2 / fps^3.
double acceleration(const Eigen::MatrixXf& pose, double fps);
double jerk(const Eigen::MatrixXf& pose, double fps);

// velocity/acceleration/jerk restricted to the given joint indices
std::array<double, 3> joint_subset_dynamics(const Eigen::MatrixXf& pose, double fps,
                                            const std::vector<int>& joint_indices);

// Mean over frames of 2*(width + height) of the tight box around all joints.
double bbox_perimeter(const Eigen::MatrixXf& pose);

extern const std::vector<int> kDefaultWristJoints;  // {4, 7} in the default layout

SequenceMetrics sequence_metrics(const Eigen::MatrixXf& pose, double fps,
                                 const std::vector<int>& wrists = kDefaultWristJoints);

// Element-wise mean of a batch of metric sets.
SequenceMetrics mean_metrics(const std::vector<SequenceMetrics>& batch);

struct DistanceRow {
  std::string metric;
  double source_dist = 0;  // |m_source - m_target|
  double model_dist = 0;   // |m_model - m_target|
  double source_pct = 0;   // 100 * source_dist / (source_dist + model_dist)
  double model_pct = 0;    // 100 * model_dist / (source_dist + model_dist)
};

// One row per metric, order: velocity, acceleration, jerk, wrist_velocity,
// wrist_acceleration, wrist_jerk, bbox_perimeter.  When both distances are
// zero the shares split 50/50.
std::vector<DistanceRow> distance_report(const SequenceMetrics& source,
                                         const SequenceMetrics& target,
                                         const SequenceMetrics& model);

void write_distance_csv(const std::vector<DistanceRow>& rows, const std::filesystem::path& path);
// Simple grouped bar chart of the percentage shares.
void write_distance_svg(const std::vector<DistanceRow>& rows, const std::filesystem::path& path);

}  // namespace zsmstm
