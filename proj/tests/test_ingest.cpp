#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "flarecast/error.hpp"
#include "flarecast/image.hpp"
#include "flarecast/ingest.hpp"
#include "test_util.hpp"

using namespace flarecast;
using namespace flarecast::ingest;
namespace fs = std::filesystem;

namespace {

std::vector<FrameRecord> stream(const std::string& id, int n, double fps) {
  std::vector<FrameRecord> out;
  for (int k = 0; k < n; ++k) out.push_back({id, k, k / fps, {}, {}});
  return out;
}

}  // namespace

TEST(Pairing, NearestVisibleFrame) {
  const std::vector<FrameRecord> ir{{"ir", 0, 0.111, {}, {}}};
  const auto vis = stream("vis", 30, 30.0);
  const auto pairs = pair_by_timestamp(ir, vis, 1.0 / 60.0);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].visible.index, 3);
  EXPECT_NEAR(pairs[0].time_offset, 0.011, 1e-12);
}

TEST(Pairing, ExhaustiveScanAgrees) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> t(0.0, 2.0);
  const auto vis = stream("vis", 60, 30.0);
  std::vector<FrameRecord> ir;
  for (int k = 0; k < 25; ++k) ir.push_back({"ir", k, 0.08 * k + 0.003, {}, {}});
  const auto pairs = pair_by_timestamp(ir, vis, 1.0);
  ASSERT_EQ(pairs.size(), ir.size());
  for (std::size_t i = 0; i < ir.size(); ++i) {
    double best = 1e9;
    std::int64_t idx = -1;
    for (const auto& v : vis) {
      const double d = std::abs(v.timestamp - ir[i].timestamp);
      if (d < best) best = d, idx = v.index;
    }
    EXPECT_EQ(pairs[i].visible.index, idx);
  }
}

TEST(Pairing, OffsetShiftsCandidates) {
  const std::vector<FrameRecord> ir{{"ir", 0, 1.0, {}, {}}};
  const auto vis = stream("vis", 60, 30.0);
  const auto pairs = pair_by_timestamp(ir, vis, 0.01, 0.5);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].visible.index, 15);
}

TEST(Pairing, StorageOrderIrrelevant) {
  auto vis = stream("vis", 30, 30.0);
  const auto ir = stream("ir", 5, 9.0);
  const auto a = pair_by_timestamp(ir, vis, 0.02);
  std::reverse(vis.begin(), vis.end());
  const auto b = pair_by_timestamp(ir, vis, 0.02);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].visible.index, b[i].visible.index);
}

TEST(Pairing, EmptyStreamThrows) {
  const auto vis = stream("vis", 3, 30.0);
  try {
    pair_by_timestamp({}, vis, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyStream);
  }
}

TEST(Pairing, DefaultToleranceIsHalfPeriod) {
  const auto vis = stream("vis", 10, 30.0);
  EXPECT_NEAR(default_pairing_tolerance(vis), 1.0 / 60.0, 1e-12);
  EXPECT_EQ(default_pairing_tolerance(stream("v", 1, 30.0)), 0.0);
}

TEST(StreamIndex, LoadsCsvRelativeToFile) {
  test::TempDir dir;
  std::ofstream(dir.path() / "index.csv") << "index,timestamp_seconds,filename\n0,0.0,a.png\n1,0.5,b.png\n";
  const auto frames = load_stream_index(dir.path(), "ir");
  ASSERT_EQ(frames.size(), 2u);
  EXPECT_EQ(frames[1].path, dir.path() / "b.png");
  EXPECT_DOUBLE_EQ(frames[1].timestamp, 0.5);
}

TEST(Similarity, TwoPointScaleAndShift) {
  const std::vector<cv::Point2d> from{{0, 0}, {10, 0}}, to{{5, 5}, {25, 5}};
  const auto t = solve_similarity(from, to);
  EXPECT_NEAR(t.scale, 2.0, 1e-12);
  EXPECT_NEAR(t.rotation, 0.0, 1e-12);
  EXPECT_NEAR(t.tx, 5.0, 1e-12);
  EXPECT_NEAR(t.ty, 5.0, 1e-12);
}

TEST(Similarity, QuarterTurn) {
  const std::vector<cv::Point2d> from{{0, 0}, {0, 10}}, to{{0, 0}, {10, 0}};
  const auto t = solve_similarity(from, to);
  EXPECT_NEAR(t.scale, 1.0, 1e-12);
  EXPECT_NEAR(std::abs(t.rotation), std::numbers::pi / 2, 1e-12);
  const auto p = t.apply({0, 10});
  EXPECT_NEAR(p.x, 10.0, 1e-9);
  EXPECT_NEAR(p.y, 0.0, 1e-9);
}

TEST(Similarity, RecoversRandomTransform) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-50, 50);
  SimilarityTransform truth{1.3, 0.4, 7.0, -3.0};
  std::vector<cv::Point2d> from, to;
  for (int i = 0; i < 6; ++i) {
    from.emplace_back(u(rng), u(rng));
    to.push_back(truth.apply(from.back()));
  }
  const auto t = solve_similarity(from, to);
  EXPECT_NEAR(t.scale, truth.scale, 1e-9);
  EXPECT_NEAR(t.rotation, truth.rotation, 1e-9);
  EXPECT_NEAR(t.tx, truth.tx, 1e-9);
  EXPECT_NEAR(t.ty, truth.ty, 1e-9);
}

TEST(Similarity, TooFewPointsThrows) {
  const std::vector<cv::Point2d> one{{1, 1}};
  try {
    solve_similarity(one, one);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInsufficientReferences);
  }
}

TEST(Padding, PaperCanvasBorders) {
  const cv::Mat img(288, 384, CV_8UC3, cv::Scalar(1, 2, 3));
  const auto padded = pad_to_canvas(img, 512, 1024);
  EXPECT_EQ(padded.image.cols, 512);
  EXPECT_EQ(padded.image.rows, 1024);
  EXPECT_EQ(padded.canvas.pad_left + padded.canvas.pad_right, 128);
  EXPECT_EQ(padded.canvas.pad_top + padded.canvas.pad_bottom, 736);
  EXPECT_EQ(padded.canvas.pad_left, 64);
  EXPECT_EQ(padded.canvas.pad_top, 368);
  EXPECT_EQ(padded.image.at<cv::Vec3b>(0, 0), cv::Vec3b(0, 0, 0));
  EXPECT_EQ(cv::norm(remove_padding(padded.image, padded.canvas), img, cv::NORM_INF), 0.0);
}

TEST(Padding, OddRemainderGoesRightAndBottom) {
  const auto padded = pad_to_canvas(cv::Mat::ones(3, 3, CV_8UC1), 6, 6);
  EXPECT_EQ(padded.canvas.pad_left, 1);
  EXPECT_EQ(padded.canvas.pad_right, 2);
  EXPECT_EQ(padded.canvas.pad_top, 1);
  EXPECT_EQ(padded.canvas.pad_bottom, 2);
}

TEST(Padding, TooSmallCanvasThrows) {
  try {
    pad_to_canvas(cv::Mat::ones(10, 10, CV_8UC1), 8, 12);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kCanvasTooSmall);
  }
}

TEST(Augment, SixteenDeterministicVariants) {
  std::mt19937_64 rng(3);
  PairedSample s;
  s.visible.image = cv::Mat(24, 32, CV_8UC3);
  s.ir.image = cv::Mat(24, 32, CV_8UC3);
  cv::randu(s.visible.image, 0, 255);
  cv::randu(s.ir.image, 0, 255);
  const auto a = augment(s, 9);
  const auto b = augment(s, 9);
  ASSERT_EQ(a.size(), 16u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].visible.image.size(), s.visible.image.size());
    EXPECT_EQ(cv::norm(a[i].visible.image, b[i].visible.image, cv::NORM_INF), 0.0);
    EXPECT_EQ(cv::norm(a[i].ir.image, b[i].ir.image, cv::NORM_INF), 0.0);
  }
  EXPECT_EQ(cv::norm(a[0].visible.image, s.visible.image, cv::NORM_INF), 0.0);
  cv::Mat mirrored;
  cv::flip(s.ir.image, mirrored, 1);
  EXPECT_EQ(cv::norm(a[1].ir.image, mirrored, cv::NORM_INF), 0.0);
}

TEST(Augment, SameTransformOnBothMembers) {
  PairedSample s;
  s.visible.image = cv::Mat(20, 20, CV_8UC3);
  cv::randu(s.visible.image, 0, 255);
  s.ir.image = s.visible.image.clone();
  for (const auto& v : augment(s, 4)) {
    EXPECT_EQ(cv::norm(v.visible.image, v.ir.image, cv::NORM_INF), 0.0);
  }
}

TEST(Manifest, RoundTripAndRelativePaths) {
  test::TempDir dir;
  DatasetManifest m;
  m.seed = 5;
  m.canvas = CanvasSpec{64, 64, 0, 0, 8, 8};
  ManifestEntry e;
  e.id = "f0";
  e.visible = dir.path() / "vis" / "f0.png";
  e.ir = dir.path() / "ir" / "f0.png";
  e.experiment = "x";
  e.alignment = Affine(2, 0, 1, 0, 2, 3);
  m.entries.push_back(e);
  save_manifest(m, dir.path() / "m.json");
  std::ifstream in(dir.path() / "m.json");
  const std::string text((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(text.find(dir.path().string()), std::string::npos);

  const auto back = load_manifest(dir.path() / "m.json");
  ASSERT_EQ(back.entries.size(), 1u);
  EXPECT_EQ(back.entries[0].visible, e.visible);
  EXPECT_EQ(back.canvas, m.canvas);
  EXPECT_EQ(back.entries[0].alignment(0, 2), 1.0);
  EXPECT_EQ(manifest_json(back), manifest_json(load_manifest(dir.path() / "m.json")));
}

TEST(Split, PartitionIsDisjointAndDeterministic) {
  DatasetManifest m;
  for (int i = 0; i < 37; ++i) m.entries.push_back({.id = "f" + std::to_string(i)});
  const std::vector<double> ratios{0.7, 0.2, 0.1};
  const auto a = split_dataset(m, ratios, 3);
  const auto b = split_dataset(m, ratios, 3);
  ASSERT_EQ(a.size(), 3u);
  std::set<std::string> seen;
  std::size_t total = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    total += a[k].entries.size();
    ASSERT_EQ(a[k].entries.size(), b[k].entries.size());
    for (std::size_t i = 0; i < a[k].entries.size(); ++i) {
      EXPECT_EQ(a[k].entries[i].id, b[k].entries[i].id);
      seen.insert(a[k].entries[i].id);
    }
  }
  EXPECT_EQ(total, 37u);
  EXPECT_EQ(seen.size(), 37u);
  EXPECT_EQ(a[0].entries.size(), 26u);
  EXPECT_EQ(a[0].split_label, "train");
  EXPECT_EQ(a[2].split_label, "test");
}

TEST(Image, PngRoundTripIsExact) {
  test::TempDir dir;
  cv::Mat img(13, 17, CV_8UC3);
  cv::randu(img, 0, 255);
  write_image(dir.path() / "a" / "x.png", img);
  EXPECT_EQ(cv::norm(read_image(dir.path() / "a" / "x.png", 3), img, cv::NORM_INF), 0.0);
}

TEST(Image, SequenceSharesOneRange) {
  std::vector<cv::Mat> frames{cv::Mat(2, 2, CV_16UC1, cv::Scalar(1000)),
                              cv::Mat(2, 2, CV_16UC1, cv::Scalar(3000))};
  const auto out = normalize_sequence(frames);
  EXPECT_EQ(out[0].at<std::uint8_t>(0, 0), 0);
  EXPECT_EQ(out[1].at<std::uint8_t>(0, 0), 255);
}

TEST(Image, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
