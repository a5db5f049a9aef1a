#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "test_util.hpp"
#include "zsmstm/errors.hpp"
#include "zsmstm/metrics.hpp"

using namespace zsmstm;
using testutil::polynomial_track;

TEST_CASE("dynamics are zero on a constant track") {
  Eigen::MatrixXf pose = Eigen::MatrixXf::Constant(16, 8, 0.37f);
  CHECK(velocity(pose, 15.0) == 0.0);
  CHECK(acceleration(pose, 15.0) == 0.0);
  CHECK(jerk(pose, 15.0) == 0.0);
}

TEST_CASE("finite-difference identities: t, t^2, t^3 give 1, 2, 6 at fps 1") {
  // x(t) = t  ->  first difference exactly 1
  CHECK(velocity(polynomial_track(10, 3, 1), 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  // x(t) = t^2  ->  second difference exactly 2
  CHECK(acceleration(polynomial_track(10, 3, 2), 1.0) == doctest::Approx(2.0).epsilon(1e-12));
  // x(t) = t^3  ->  third difference exactly 6
  CHECK(jerk(polynomial_track(10, 3, 3), 1.0) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("fps scaling multiplies dynamics by fps^order") {
  auto p1 = polynomial_track(12, 2, 1);
  auto p2 = polynomial_track(12, 2, 2);
  auto p3 = polynomial_track(12, 2, 3);
  CHECK(velocity(p1, 15.0) == doctest::Approx(15.0).epsilon(1e-12));
  CHECK(acceleration(p2, 15.0) == doctest::Approx(2.0 * 15.0 * 15.0).epsilon(1e-12));
  CHECK(jerk(p3, 15.0) == doctest::Approx(6.0 * 15.0 * 15.0 * 15.0).epsilon(1e-12));
}

TEST_CASE("diagonal motion uses the euclidean joint norm") {
  // both coordinates advance by 1 per frame -> per-joint step norm is sqrt(2)
  Eigen::MatrixXf pose(5, 2);
  for (int t = 0; t < 5; ++t) {
    pose(t, 0) = float(t);
    pose(t, 1) = float(t);
  }
  CHECK(velocity(pose, 1.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("wrist restriction isolates the chosen joints") {
  // 5 joints; only joints 1 and 3 move (x advances 1/frame)
  Eigen::MatrixXf pose = Eigen::MatrixXf::Zero(8, 10);
  for (int t = 0; t < 8; ++t) {
    pose(t, 2 * 1) = float(t);
    pose(t, 2 * 3) = float(t);
  }
  CHECK(velocity(pose, 1.0) == doctest::Approx(2.0 / 5.0).epsilon(1e-12));
  auto w = joint_subset_dynamics(pose, 1.0, {1, 3});
  CHECK(w[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w[1] == 0.0);
  CHECK_THROWS_AS((void)joint_subset_dynamics(pose, 1.0, {7}), Error);
}

TEST_CASE("bbox perimeter of a 2 x 1 spread is 6") {
  // joints pinned at the corners of a 2-wide, 1-tall box on every frame
  Eigen::MatrixXf pose(4, 8);
  for (int t = 0; t < 4; ++t) {
    pose.row(t) << 0.f, 0.f, 2.f, 0.f, 0.f, 1.f, 2.f, 1.f;
  }
  CHECK(bbox_perimeter(pose) == doctest::Approx(6.0).epsilon(1e-12));
  // single joint: degenerate box, perimeter 0
  Eigen::MatrixXf one = Eigen::MatrixXf::Constant(3, 2, 5.0f);
  CHECK(bbox_perimeter(one) == 0.0);
}

TEST_CASE("bbox perimeter averages over frames") {
  Eigen::MatrixXf pose(2, 4);
  pose.row(0) << 0.f, 0.f, 1.f, 1.f;  // perimeter 4
  pose.row(1) << 0.f, 0.f, 3.f, 1.f;  // perimeter 8
  CHECK(bbox_perimeter(pose) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("dynamics require enough frames") {
  CHECK_THROWS_AS((void)velocity(polynomial_track(1, 2, 1), 1.0), Error);
  CHECK_THROWS_AS((void)acceleration(polynomial_track(2, 2, 1), 1.0), Error);
  CHECK_THROWS_AS((void)jerk(polynomial_track(3, 2, 1), 1.0), Error);
  CHECK_NOTHROW((void)jerk(polynomial_track(4, 2, 1), 1.0));
}

TEST_CASE("distance report splits 80/20 for distances 8 and 2") {
  SequenceMetrics src, tgt, mdl;
  src.velocity = 10.0;
  tgt.velocity = 2.0;
  mdl.velocity = 4.0;
  auto rows = distance_report(src, tgt, mdl);
  REQUIRE(rows.size() == 7);
  CHECK(rows[0].metric == "velocity");
  CHECK(rows[0].source_dist == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(rows[0].model_dist == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rows[0].source_pct == doctest::Approx(80.0).epsilon(1e-12));
  CHECK(rows[0].model_pct == doctest::Approx(20.0).epsilon(1e-12));
  // untouched metrics have zero distances on both sides -> 50/50 split
  CHECK(rows[1].source_pct == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(rows[1].model_pct == doctest::Approx(50.0).epsilon(1e-12));
  // shares always sum to 100
  for (const auto& r : rows) CHECK(r.source_pct + r.model_pct == doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("distance report row order is fixed") {
  SequenceMetrics m;
  auto rows = distance_report(m, m, m);
  const char* expect[] = {"velocity", "acceleration", "jerk", "wrist_velocity",
                          "wrist_acceleration", "wrist_jerk", "bbox_perimeter"};
  REQUIRE(rows.size() == 7);
  for (size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].metric == expect[i]);
}

TEST_CASE("mean_metrics averages element-wise") {
  SequenceMetrics a, b;
  a.velocity = 1.0; b.velocity = 3.0;
  a.bbox_perimeter = 10.0; b.bbox_perimeter = 30.0;
  auto m = mean_metrics({a, b});
  CHECK(m.velocity == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(m.bbox_perimeter == doctest::Approx(20.0).epsilon(1e-12));
  CHECK_THROWS_AS((void)mean_metrics({}), Error);
}

TEST_CASE("distance CSV has the documented schema") {
  testutil::TempDir tmp("metrics_csv");
  SequenceMetrics src, tgt, mdl;
  src.velocity = 10; tgt.velocity = 2; mdl.velocity = 4;
  auto rows = distance_report(src, tgt, mdl);
  auto csv = tmp.path / "report.csv";
  write_distance_csv(rows, csv);
  std::ifstream f(csv);
  std::string line;
  REQUIRE(std::getline(f, line));
  CHECK(line == "metric,source_dist,model_dist,source_pct,model_pct");
  int n = 0;
  std::string first;
  while (std::getline(f, line)) {
    if (n == 0) first = line;
    ++n;
  }
  CHECK(n == 7);
  CHECK(first == "velocity,8,2,80,20");
}

TEST_CASE("svg plot mentions every metric") {
  testutil::TempDir tmp("metrics_svg");
  SequenceMetrics m;
  auto rows = distance_report(m, m, m);
  auto svg = tmp.path / "report.svg";
  write_distance_svg(rows, svg);
  std::ifstream f(svg);
  std::stringstream ss;
  ss << f.rdbuf();
  std::string body = ss.str();
  CHECK(body.find("<svg") != std::string::npos);
  for (const auto& r : rows) CHECK(body.find(r.metric) != std::string::npos);
}

TEST_CASE("sequence metrics bundle matches the individual functions") {
  Eigen::MatrixXf pose = Eigen::MatrixXf::Zero(12, 20);
  for (int t = 0; t < 12; ++t)
    for (int j = 0; j < 10; ++j) {
      pose(t, 2 * j) = float(std::sin(0.3 * t + j));
      pose(t, 2 * j + 1) = float(std::cos(0.2 * t - j));
    }
  auto m = sequence_metrics(pose, 15.0);
  CHECK(m.velocity == doctest::Approx(velocity(pose, 15.0)).epsilon(1e-15));
  CHECK(m.jerk == doctest::Approx(jerk(pose, 15.0)).epsilon(1e-15));
  auto w = joint_subset_dynamics(pose, 15.0, kDefaultWristJoints);
  CHECK(m.wrist_velocity == doctest::Approx(w[0]).epsilon(1e-15));
  CHECK(m.wrist_jerk == doctest::Approx(w[2]).epsilon(1e-15));
  CHECK(m.bbox_perimeter == doctest::Approx(bbox_perimeter(pose)).epsilon(1e-15));
}
