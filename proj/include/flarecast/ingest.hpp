#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

namespace flarecast::ingest {

using Affine = cv::Matx23d;

inline Affine identity_affine() { return Affine(1, 0, 0, 0, 1, 0); }

struct FrameRecord {
  std::string source_id;
  std::int64_t index = 0;
  double timestamp = 0.0;  // seconds from stream start
  std::filesystem::path path;
  cv::Mat image;  // empty when only the index was loaded
};

/// One visible/IR pair. `alignment` maps visible pixel coordinates onto IR
/// pixel coordinates.
struct PairedSample {
  FrameRecord visible;
  FrameRecord ir;
  double time_offset = 0.0;
  Affine alignment = identity_affine();
};

/// Target canvas plus the zero borders that were added to reach it.
struct CanvasSpec {
  int width = 0;
  int height = 0;
  int pad_left = 0;
  int pad_right = 0;
  int pad_top = 0;
  int pad_bottom = 0;

  int content_width() const { return width - pad_left - pad_right; }
  int content_height() const { return height - pad_top - pad_bottom; }
  bool operator==(const CanvasSpec&) const = default;
};

struct PaddedImage {
  cv::Mat image;
  CanvasSpec canvas;
};

// ---------------------------------------------------------------------------
// Stream loading and pairing
// ---------------------------------------------------------------------------

/// Loads a per-stream index CSV (`index,timestamp_seconds,filename`). When
/// `location` is a directory, `index.csv` inside it is used. Filenames are
/// resolved relative to the CSV. Images are not decoded.
std::vector<FrameRecord> load_stream_index(const std::filesystem::path& location,
                                           const std::string& source_id);

/// Half the median frame period of a stream: nearest-frame matching without
/// double-matching. Single-frame streams have no period and yield 0.
double default_pairing_tolerance(std::span<const FrameRecord> stream);

/// Pairs every frame of the low-rate `reference` stream (IR) with the
/// high-rate `candidate` frame (visible) nearest in time. Pairs further
/// apart than `tolerance` are dropped; output follows reference order.
/// `candidate_offset` is added to candidate timestamps to compensate for
/// streams that did not start together.
///
/// Frames are ordered by `index` before validation, so the storage order of
/// either input does not matter. Equidistant candidates resolve to the
/// earlier one.
std::vector<PairedSample> pair_by_timestamp(std::span<const FrameRecord> reference,
                                            std::span<const FrameRecord> candidates,
                                            double tolerance, double candidate_offset = 0.0);

// ---------------------------------------------------------------------------
// Framing alignment
// ---------------------------------------------------------------------------

/// x' = s (cos t x - sin t y) + tx,  y' = s (sin t x + cos t y) + ty
struct SimilarityTransform {
  double scale = 1.0;
  double rotation = 0.0;  // radians
  double tx = 0.0;
  double ty = 0.0;

  Affine affine() const;
  cv::Point2d apply(cv::Point2d p) const;
};

/// Least-squares similarity mapping `from` onto `to`.
SimilarityTransform solve_similarity(std::span<const cv::Point2d> from,
                                     std::span<const cv::Point2d> to);

struct AlignmentResult {
  PairedSample sample;
  SimilarityTransform transform;
  std::vector<double> residuals;  // per reference point, IR pixels
};

AlignmentResult align_frames(const PairedSample& sample,
                             std::span<const cv::Point2d> visible_points,
                             std::span<const cv::Point2d> ir_points);

/// Renders the visible frame in IR framing using the sample's alignment.
cv::Mat warp_visible_to_ir(const PairedSample& sample);

// ---------------------------------------------------------------------------
// Canvas padding
// ---------------------------------------------------------------------------

/// Centres `image` on a zero canvas. Odd remainders go to the right/bottom.
PaddedImage pad_to_canvas(const cv::Mat& image, int width, int height);

/// Inverse of pad_to_canvas: returns a copy of the interior region.
cv::Mat remove_padding(const cv::Mat& image, const CanvasSpec& canvas);

// ---------------------------------------------------------------------------
// Augmentation
// ---------------------------------------------------------------------------

/// Identity, horizontal mirror, each rotation with and without mirror, then
/// random crops re-padded to the original size. The default yields 16.
struct AugmentConfig {
  std::vector<double> rotations_deg{5.0, -5.0, 10.0, -10.0};
  int random_crops = 6;
  double crop_min_fraction = 0.80;
  double crop_max_fraction = 0.95;

  std::size_t variants() const { return 2 + 2 * rotations_deg.size() + random_crops; }
};

/// Pure function of (sample, seed): the same geometric transform is applied
/// to both pair members. Both images must be loaded and the same size.
std::vector<PairedSample> augment(const PairedSample& sample, std::uint64_t seed,
                                  const AugmentConfig& config = {});

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

struct ManifestEntry {
  std::string id;
  std::filesystem::path visible;
  std::filesystem::path ir;
  std::filesystem::path mask;       // optional class-id PNG
  std::filesystem::path generated;  // optional artificial IR
  std::string experiment;
  std::int64_t visible_index = -1;
  std::int64_t ir_index = -1;
  double visible_timestamp = 0.0;
  double ir_timestamp = 0.0;
  double time_offset = 0.0;
  Affine alignment = identity_affine();
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::string split_label = "all";  // all | train | val | test
  std::uint64_t seed = 0;
  std::optional<CanvasSpec> canvas;
};

/// Paths are stored relative to the manifest file's directory when they lie
/// beneath it, and resolved to absolute paths on load.
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Canonical JSON text of a manifest, used for content hashing.
std::string manifest_json(const DatasetManifest& manifest);

DatasetManifest manifest_from_pairs(std::span<const PairedSample> pairs, std::uint64_t seed);

/// Augments every entry (images read from disk) and writes the variants as
/// PNGs under `out_dir`. Entry k uses seed mix_seed(seed, k).
DatasetManifest augment_manifest(const DatasetManifest& manifest, std::uint64_t seed,
                                 const std::filesystem::path& out_dir,
                                 const AugmentConfig& config = {});

/// Deterministic shuffled partition. Two ratios give train/val, three give
/// train/val/test. Counts use largest-remainder rounding.
std::vector<DatasetManifest> split_dataset(const DatasetManifest& manifest,
                                           std::span<const double> ratios, std::uint64_t seed);

}  // namespace flarecast::ingest
