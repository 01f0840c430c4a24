#include <gtest/gtest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "clouds.hpp"
#include "scenes.hpp"
#include "scopekit/calibration_io.hpp"
#include "scopekit/depth_io.hpp"
#include "scopekit/image_io.hpp"
#include "scopekit/ply.hpp"
#include "scopekit/traj_metrics.hpp"
#include "signals.hpp"
#include "traj_oracle.hpp"

using namespace scopekit;
namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

struct Invocation {
  int code;
  std::string out;
  std::string err;
};

Invocation run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("scopekit_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  [[nodiscard]] std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }

  static Json load(const std::string& p) { return Json::parse(slurp(p)); }

  void write_signal(const std::string& name, const std::vector<double>& v) const {
    std::ofstream out(path(name));
    out.precision(17);
    for (double x : v) out << x << '\n';
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, EvalTrajIdenticalFilesGiveZeroErrors) {
  std::mt19937_64 rng(1);
  const auto [gt, est] = testkit::random_trajectory_pair(rng, 40);
  write_trajectory_csv(path("gt.csv"), gt);
  const Invocation r = run({"eval-traj", path("gt.csv"), path("gt.csv"), "--json", path("r.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = load(path("r.json"));
  EXPECT_EQ(j["schema"], 1);
  EXPECT_EQ(j["samples"]["matched"], 40);
  EXPECT_LT(j["ate_m"]["max"].get<double>(), 1e-12);
  EXPECT_LT(j["rpe"]["trans_m"]["max"].get<double>(), 1e-12);
  EXPECT_LT(j["rpe"]["rot_deg"]["max"].get<double>(), 1e-6);
  EXPECT_NE(r.out.find("ATE"), std::string::npos);
}

TEST_F(Cli, EvalTrajMatchesLibraryAndIsDeterministic) {
  std::mt19937_64 rng(2);
  const auto [gt, est] = testkit::random_trajectory_pair(rng, 30);
  write_trajectory_csv(path("gt.csv"), gt);
  write_trajectory_csv(path("est.csv"), est);
  ASSERT_EQ(run({"eval-traj", path("gt.csv"), path("est.csv"), "--delta", "2", "--json", path("a.json"), "--plot",
                 path("a.png")})
                .code,
            0);
  ASSERT_EQ(run({"eval-traj", path("gt.csv"), path("est.csv"), "--delta", "2", "--json", path("b.json")}).code, 0);
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
  const Json j = load(path("a.json"));
  const AteResult a = ate(read_trajectory_csv(path("gt.csv")), read_trajectory_csv(path("est.csv")));
  EXPECT_EQ(j["ate_m"]["rmse"].get<double>(), a.stats.rmse);
  EXPECT_TRUE(fs::is_regular_file(path("a.png")));
}

TEST_F(Cli, JsonUsesSeventeenSignificantDigits) {
  std::mt19937_64 rng(5);
  const auto [gt, est] = testkit::random_trajectory_pair(rng, 20);
  Trajectory small;
  for (const TimedPose& s : gt.samples()) small.push_back(s.timestamp, Pose(s.pose.rotation(), s.pose.translation() / 3.0));
  write_trajectory_csv(path("gt.csv"), gt);
  write_trajectory_csv(path("small.csv"), small);
  ASSERT_EQ(run({"eval-traj", path("gt.csv"), path("small.csv"), "--scale", "--json", path("r.json")}).code, 0);
  const std::string text = slurp(path("r.json"));
  const double scale = load(path("r.json"))["alignment"]["scale"].get<double>();
  EXPECT_NEAR(scale, 3.0, 1e-9);
  char expected[64];
  std::snprintf(expected, sizeof expected, "\"scale\": %.17g", scale);
  EXPECT_NE(text.find(expected), std::string::npos) << expected;
  EXPECT_NE(text.find("\"schema\": 1"), std::string::npos);
}

TEST_F(Cli, UnknownFlagPrintsUsage) {
  const Invocation r = run({"eval-traj", "--bogus"});
  EXPECT_EQ(r.code, cli::kExitValidation);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitValidation);
  EXPECT_EQ(run({}).code, cli::kExitValidation);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(Cli, MissingInputIsValidationError) {
  const Invocation r = run({"eval-traj", path("nope.csv"), path("nope.csv"), "--json", path("r.json")});
  EXPECT_EQ(r.code, cli::kExitValidation);
  EXPECT_NE(r.err.find("nope.csv"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("r.json")));
  EXPECT_EQ(run({"eval-traj", path("nope.csv"), path("nope.csv"), "--json", path("missing/r.json")}).code,
            cli::kExitValidation);
}

TEST_F(Cli, ComputationErrorLeavesNoReport) {
  Trajectory a, b;
  for (int i = 0; i < 5; ++i) {
    a.push_back(i, Pose::identity());
    b.push_back(100 + i, Pose::identity());
  }
  write_trajectory_csv(path("a.csv"), a);
  write_trajectory_csv(path("b.csv"), b);
  const Invocation r = run({"eval-traj", path("a.csv"), path("b.csv"), "--json", path("r.json")});
  EXPECT_EQ(r.code, cli::kExitComputation);
  EXPECT_NE(r.err.find("NoMatches"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("r.json")));
}

TEST_F(Cli, SyncReportsInjectedLag) {
  std::mt19937_64 rng(3);
  const std::vector<double> cam = testkit::smooth_random_signal(rng, 400);
  write_signal("cam.txt", cam);
  write_signal("robot.txt", testkit::delayed(cam, 17, rng));
  const Invocation r = run({"sync", "--camera-signal", path("cam.txt"), "--robot-signal", path("robot.txt"), "--fps", "30",
                     "--robot-rate", "30", "--sequence", "Colon-IV", "--table", path("t.txt"), "--json",
                     path("s.json"), "--plot", path("s.png")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("lag=17"), std::string::npos) << r.out;
  EXPECT_EQ(load(path("s.json"))["lag"], 17);
  EXPECT_NE(slurp(path("t.txt")).find("Colon-IV"), std::string::npos);
  EXPECT_EQ(run({"sync", "--camera-signal", path("cam.txt"), "--fps", "30"}).code, cli::kExitValidation);
}

TEST_F(Cli, SyncFromRobotPoses) {
  std::mt19937_64 rng(4);
  const std::vector<double> speed = testkit::smooth_random_signal(rng, 300, 0.9);
  Trajectory robot;
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  robot.push_back(0.0, Pose::identity());
  for (std::size_t i = 0; i < speed.size(); ++i) {
    p.x() += (5.0 + speed[i]) / 30.0;
    robot.push_back((i + 1) / 30.0, Pose(Eigen::Matrix3d::Identity(), p));
  }
  write_trajectory_csv(path("robot.csv"), robot);
  std::vector<double> cam(speed.size());
  for (std::size_t i = 0; i < cam.size(); ++i) cam[i] = 5.0 + speed[i];
  write_signal("cam.txt", testkit::delayed(cam, -9, rng));
  const Invocation r = run({"sync", "--camera-signal", path("cam.txt"), "--robot", path("robot.csv"), "--fps", "30",
                     "--cutoff", "14"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("lag=9"), std::string::npos) << r.out;
}

TEST_F(Cli, AugmentPreservesNumberingAndIsDeterministic) {
  fs::create_directories(path("in"));
  for (int i = 0; i < 6; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04d.png", i + 10);
    write_image(dir_ / "in" / name, testkit::textured_image(32, 24, 20 + i, 3));
  }
  std::ofstream(path("spec.txt")) << "resize width=20 height=16\nblur kernel=3 sigma=1 repeat=2\nsubsample factor=2\n";
  ASSERT_EQ(run({"augment", "--input", path("in"), "--output", path("out1"), "--spec", path("spec.txt"), "--json",
                 path("a.json")})
                .code,
            0);
  ASSERT_EQ(run({"augment", "--input", path("in"), "--output", path("out2"), "--spec", path("spec.txt")}).code, 0);
  const std::vector<std::string> expected{"frame_0010.png", "frame_0012.png", "frame_0014.png"};
  EXPECT_EQ(load(path("a.json"))["frames"].get<std::vector<std::string>>(), expected);
  for (const std::string& n : expected) {
    EXPECT_EQ(slurp(path("out1/" + n)), slurp(path("out2/" + n)));
    EXPECT_EQ(read_image(path("out1/" + n)).width(), 20);
  }
  EXPECT_FALSE(fs::exists(path("out1/frame_0011.png")));
  std::ofstream(path("bad.txt")) << "fisheye nu=3\n";
  EXPECT_EQ(run({"augment", "--input", path("in"), "--output", path("out3"), "--spec", path("bad.txt")}).code,
            cli::kExitValidation);
}

TEST_F(Cli, LossOfIdenticalFramesIsZero) {
  const CameraIntrinsics K = camera_preset("HighCam").scaled(0.125);
  std::ofstream(path("K.txt")) << format_intrinsics(K);
  write_image(path("ref.png"), testkit::textured_image(K.width, K.height, 5));
  write_depth(path("d.png"), DepthMap::constant(K.width, K.height, 0.05));
  const Invocation r = run({"loss", "--ref", path("ref.png"), "--src", path("ref.png"), "--depth-ref", path("d.png"),
                     "--depth-src", path("d.png"), "--intrinsics", path("K.txt"), "--json", path("l.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = load(path("l.json"));
  EXPECT_NEAR(j["loss"]["total"].get<double>(), 0.0, 1e-9);
  EXPECT_EQ(run({"loss", "--ref", path("ref.png"), "--src", path("ref.png"), "--depth-ref", path("d.png"),
                 "--camera", "HighCam"})
                .code,
            cli::kExitValidation);
  EXPECT_EQ(run({"loss", "--ref", path("ref.png"), "--src", path("ref.png"), "--depth-ref", path("d.png"),
                 "--intrinsics", path("K.txt"), "--pose", "1", "2"})
                .code,
            cli::kExitValidation);
}

TEST_F(Cli, AlignIdenticalFramesStaysPut) {
  const CameraIntrinsics K = camera_preset("LowCam").scaled(0.125);
  std::ofstream(path("K.txt")) << format_intrinsics(K);
  write_image(path("ref.png"), testkit::textured_image(K.width, K.height, 6));
  write_depth(path("d.png"), DepthMap::constant(K.width, K.height, 0.05));
  const Invocation r = run({"align", "--ref", path("ref.png"), "--src", path("ref.png"), "--depth-ref", path("d.png"),
                     "--intrinsics", path("K.txt"), "--levels", "1", "--json", path("a.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = load(path("a.json"));
  for (double t : j["pose"]["translation"].get<std::vector<double>>()) EXPECT_NEAR(t, 0.0, 1e-9);
}

TEST_F(Cli, StitchTwoCrops) {
  const ImageBuffer big = testkit::textured_image(200, 120, 7, 1);
  ImageBuffer a(120, 120, 1), b(120, 120, 1);
  for (int y = 0; y < 120; ++y) {
    for (int x = 0; x < 120; ++x) {
      a.at(x, y) = big.at(x, y);
      b.at(x, y) = big.at(x + 80, y);
    }
  }
  write_image(path("a.png"), a);
  write_image(path("b.png"), b);
  const Invocation r = run({"stitch", path("a.png"), path("b.png"), "-o", path("pano.png"), "--seed", "3", "--json",
                     path("s.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = load(path("s.json"));
  EXPECT_EQ(j["panoramas"].size(), 1u);
  const ImageBuffer pano = read_image(path("pano.png"));
  EXPECT_NEAR(pano.width(), 200, 2);
}

TEST_F(Cli, SfsWritesDepthAndCloud) {
  const testkit::Hemisphere h;
  write_image(path("h.png"), h.render());
  const Invocation r = run({"sfs", "--input", path("h.png"), "-o", path("d.depth"), "--ply", path("c.ply"), "--json",
                     path("s.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_depth(path("d.depth")).width(), h.size);
  EXPECT_GT(read_ply(path("c.ply")).cloud.size(), 1000u);
  EXPECT_EQ(run({"sfs", "--input", path("h.png"), "-o", path("d.depth"), "--light", "0", "0", "2"}).code,
            cli::kExitValidation);
}

TEST_F(Cli, IcpWithInitPairsAndReport) {
  const PointCloud target = testkit::surface_cloud(2000, 8);
  const Pose T = Pose::from_axis_angle(Eigen::Vector3d(0.2, 1, 0.3).normalized(), 0.6, {40, -25, 10});
  const PointCloud source = testkit::transformed(target, inverse(T));
  write_ply(path("src.ply"), source);
  write_ply(path("dst.ply"), target);
  std::ofstream pairs(path("pairs.txt"));
  pairs.precision(17);
  for (std::size_t i : {std::size_t{0}, std::size_t{700}, std::size_t{1400}}) {
    const Eigen::Vector3d s = source.points[i], t = target.points[i];
    pairs << "p" << i << ' ' << s.x() << ' ' << s.y() << ' ' << s.z() << ' ' << t.x() << ' ' << t.y() << ' ' << t.z()
          << '\n';
  }
  pairs.close();
  const Invocation r = run({"icp", "--source", path("src.ply"), "--target", path("dst.ply"), "--init-pairs",
                     path("pairs.txt"), "--json", path("i.json"), "--plot", path("heat.png"), "--aligned",
                     path("aligned.ply")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = load(path("i.json"));
  EXPECT_LT(j["rmse_cm"].get<double>(), 1e-6);
  EXPECT_TRUE(j["converged"].get<bool>());
  EXPECT_TRUE(fs::is_regular_file(path("heat.png")));

  const Invocation rep = run({"report", path("i.json"), "-o", path("summary.txt")});
  ASSERT_EQ(rep.code, 0) << rep.err;
  EXPECT_NE(rep.out.find("rmse_cm"), std::string::npos);
  EXPECT_EQ(slurp(path("summary.txt")), rep.out);

  std::ofstream(path("bad_pairs.txt")) << "p 1 2 3 4 5 6\n";
  EXPECT_EQ(run({"icp", "--source", path("src.ply"), "--target", path("dst.ply"), "--init-pairs",
                 path("bad_pairs.txt")})
                .code,
            cli::kExitComputation);
  std::ofstream(path("garbled.txt")) << "a 1 2 3\n";
  EXPECT_EQ(run({"icp", "--source", path("src.ply"), "--target", path("dst.ply"), "--init-pairs",
                 path("garbled.txt")})
                .code,
            cli::kExitValidation);
}
