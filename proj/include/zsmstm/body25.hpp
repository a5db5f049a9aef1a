#pragma once
// Export pose tracks to the BODY25 keypoint layout: per-frame JSON files
// (pose-estimator compatible, normalized coords) and a single CSV in pixel
// units.  Unmapped keypoints stay (0, 0, 0); mapped ones get confidence 1.

#include <Eigen/Core>
#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace zsmstm {

constexpr int kBody25Points = 25;

extern const std::array<const char*, kBody25Points> kBody25Names;

struct Body25Frame {
  // x, y, confidence triplets for all 25 keypoints
  std::array<float, 3 * kBody25Points> kp{};
};

// joint j of the model -> BODY25 index map for the default 10-joint rig:
// nose, neck, shoulders, elbows, wrists, eyes.
std::vector<int> default_body25_map(int joints);

// frame: 1 x 2J row (x0,y0,...).  joint_map[j] in [0,25) and injective.
Body25Frame map_to_body25(const Eigen::RowVectorXf& frame, const std::vector<int>& joint_map);

std::vector<Body25Frame> map_track(const Eigen::MatrixXf& pose, const std::vector<int>& joint_map);

// frame_%06d_keypoints.json files under dir, normalized units, fixed
// 6-decimal formatting so re-export is byte-identical.
void write_body25_json(const std::vector<Body25Frame>& frames, const std::filesystem::path& dir);

// one CSV for the whole track; coordinates scaled to the given pixel
// resolution (x * width, y * height)
void write_body25_csv(const std::vector<Body25Frame>& frames, const std::filesystem::path& path,
                      int width = 1920, int height = 1080);

}  // namespace zsmstm
