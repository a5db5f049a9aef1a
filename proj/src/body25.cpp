#include "zsmstm/body25.hpp"

#include <cstdio>
#include <set>

#include "zsmstm/errors.hpp"
#include "zsmstm/io_util.hpp"

namespace zsmstm {

const std::array<const char*, kBody25Points> kBody25Names = {
    "Nose",      "Neck",      "RShoulder", "RElbow",  "RWrist",
    "LShoulder", "LElbow",    "LWrist",    "MidHip",  "RHip",
    "RKnee",     "RAnkle",    "LHip",      "LKnee",   "LAnkle",
    "REye",      "LEye",      "REar",      "LEar",    "LBigToe",
    "LSmallToe", "LHeel",     "RBigToe",   "RSmallToe", "RHeel"};

std::vector<int> default_body25_map(int joints) {
  // matches the synthetic rig ordering: nose, neck, r-shoulder, r-elbow,
  // r-wrist, l-shoulder, l-elbow, l-wrist, r-eye, l-eye
  const std::vector<int> ten = {0, 1, 2, 3, 4, 5, 6, 7, 15, 16};
  check(joints == 10, Err::bad_mapping,
        "no default BODY25 map for " + std::to_string(joints) + " joints; provide one");
  return ten;
}

Body25Frame map_to_body25(const Eigen::RowVectorXf& frame, const std::vector<int>& joint_map) {
  check(frame.size() % 2 == 0, Err::dimension_mismatch, "pose row must hold x,y pairs");
  const int joints = int(frame.size()) / 2;
  check(int(joint_map.size()) == joints, Err::bad_mapping,
        "joint map has " + std::to_string(joint_map.size()) + " entries for " +
            std::to_string(joints) + " joints");
  std::set<int> used;
  Body25Frame out;  // zero-initialised: unmapped points stay (0,0,0)
  for (int j = 0; j < joints; ++j) {
    int k = joint_map[size_t(j)];
    check(k >= 0 && k < kBody25Points, Err::bad_mapping,
          "BODY25 index " + std::to_string(k) + " out of range");
    check(used.insert(k).second, Err::bad_mapping,
          "BODY25 index " + std::to_string(k) + " mapped twice");
    out.kp[size_t(3 * k)] = frame[2 * j];
    out.kp[size_t(3 * k + 1)] = frame[2 * j + 1];
    out.kp[size_t(3 * k + 2)] = 1.0f;
  }
  return out;
}

std::vector<Body25Frame> map_track(const Eigen::MatrixXf& pose, const std::vector<int>& joint_map) {
  check(pose.rows() > 0, Err::empty_input, "empty pose track");
  std::vector<Body25Frame> frames;
  frames.reserve(size_t(pose.rows()));
  for (int r = 0; r < pose.rows(); ++r)
    frames.push_back(map_to_body25(pose.row(r), joint_map));
  return frames;
}

void write_body25_json(const std::vector<Body25Frame>& frames, const std::filesystem::path& dir) {
  check(!frames.empty(), Err::empty_input, "no frames to export");
  std::filesystem::create_directories(dir);
  char name[48];
  for (size_t i = 0; i < frames.size(); ++i) {
    std::snprintf(name, sizeof name, "frame_%06zu_keypoints.json", i);
    auto f = open_output(dir / name, /*binary=*/false);
    f << "{\"version\":1.3,\"people\":[{\"person_id\":[-1],\"pose_keypoints_2d\":[";
    for (size_t k = 0; k < frames[i].kp.size(); ++k)
      f << (k ? "," : "") << fmt_f6(frames[i].kp[k]);
    f << "],\"face_keypoints_2d\":[],\"hand_left_keypoints_2d\":[],"
         "\"hand_right_keypoints_2d\":[]}]}\n";
    check(bool(f), Err::io_error, "write failed: " + (dir / name).string());
  }
}

void write_body25_csv(const std::vector<Body25Frame>& frames, const std::filesystem::path& path,
                      int width, int height) {
  check(!frames.empty(), Err::empty_input, "no frames to export");
  check(width > 0 && height > 0, Err::bad_config, "resolution must be positive");
  auto f = open_output(path, /*binary=*/false);
  f << "frame";
  for (int k = 0; k < kBody25Points; ++k)
    f << "," << kBody25Names[size_t(k)] << "_x," << kBody25Names[size_t(k)] << "_y,"
      << kBody25Names[size_t(k)] << "_c";
  f << "\n";
  for (size_t i = 0; i < frames.size(); ++i) {
    f << i;
    for (int k = 0; k < kBody25Points; ++k) {
      const auto& kp = frames[i].kp;
      f << "," << fmt_f6(double(kp[size_t(3 * k)]) * width) << ","
        << fmt_f6(double(kp[size_t(3 * k + 1)]) * height) << "," << fmt_f6(kp[size_t(3 * k + 2)]);
    }
    f << "\n";
  }
  check(bool(f), Err::io_error, "write failed: " + path.string());
}

}  // namespace zsmstm
