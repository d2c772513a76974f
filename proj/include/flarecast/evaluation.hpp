#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "flarecast/metrics.hpp"

namespace flarecast::evaluation {

/// Mean absolute percentage error, relative to the true values t.
/// Throws kDivisionByZero naming the index of a zero t.
double mape(std::span<const double> truth, std::span<const double> predicted);

/// Root-mean-square percentage error with the predicted values p in the
/// denominator. Throws kDivisionByZero naming the index of a zero p.
double rmspe(std::span<const double> truth, std::span<const double> predicted);

/// RMSPE - MAPE; larger spreads mean more variable individual errors.
double error_spread(double mape_value, double rmspe_value);

struct GroundTruthRecord {
  std::string frame_id;
  double true_length_m = 0.0;
  double true_area_m2 = 0.0;
};

/// CSV `frame_id,true_length_m,true_area_m2`; values must be positive.
std::vector<GroundTruthRecord> load_ground_truth(const std::filesystem::path& path);
void write_ground_truth(const std::filesystem::path& path, std::span<const GroundTruthRecord> rows);

inline constexpr const char* kOriginalIr = "original_ir";
inline constexpr const char* kGeneratedIr = "generated_ir";

struct GeometryResult {
  std::string experiment = "default";
  std::string model = "default";
  std::string source = kOriginalIr;
  std::string frame_id;
  double length_m = 0.0;
  double area_m2 = 0.0;
};

/// Reads a geometry CSV (`frame_id,length_m,area_m2,...`). Optional columns
/// experiment/model/source override the supplied defaults per row.
std::vector<GeometryResult> load_geometry(const std::filesystem::path& path,
                                          const GeometryResult& defaults = {});

struct FrameHausdorff {
  std::string experiment;
  std::string model;
  std::string frame_id;
  double distance = 0.0;
};

struct MaskPair {
  std::string experiment;
  std::string model;
  std::string frame_id;
  cv::Mat original;   // mask segmented from the real IR frame
  cv::Mat generated;  // mask segmented from the artificial IR frame
};

struct HausdorffGroup {
  std::string experiment;
  std::string model;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t n = 0;
};

std::vector<FrameHausdorff> frame_hausdorff(std::span<const MaskPair> pairs);

/// Mean per-frame HD grouped by (experiment, model), sorted by key.
std::vector<HausdorffGroup> aggregate_hausdorff(std::span<const FrameHausdorff> frames);
std::vector<HausdorffGroup> aggregate_hausdorff(std::span<const MaskPair> pairs);

struct ErrorCell {
  std::string experiment;
  std::string model;
  std::string source;
  double mape = 0.0;
  double rmspe = 0.0;
  std::size_t n = 0;

  double spread() const { return error_spread(mape, rmspe); }
  /// RMSPE >= MAPE is expected but not guaranteed: the two use different
  /// denominators. Cells violating it are flagged, not rejected.
  bool advisory() const { return rmspe < mape; }
};

struct PercentChange {
  std::string experiment;
  std::string model;
  std::string source;
  std::string frame_id;
  std::string quantity;  // length | area
  double truth = 0.0;
  double predicted = 0.0;
  double percent = 0.0;  // (predicted - truth) / truth * 100
};

struct ImageMetricRow {
  std::string id;
  std::vector<metrics::MetricValue> values;
};

struct Report {
  std::vector<ErrorCell> length;
  std::vector<ErrorCell> area;
  std::vector<HausdorffGroup> hausdorff;
  std::vector<PercentChange> changes;
  std::vector<ImageMetricRow> image_metrics;
  std::vector<std::string> skipped_frames;
  std::vector<std::string> psnr_flags;  // ids whose PSNR is below 30 dB
};

/// Joins geometry with ground truth per (experiment, model, source) group.
/// Frames without ground truth are skipped with a warning. Throws when no
/// geometry is supplied.
Report build_report(std::span<const GeometryResult> geometry,
                    std::span<const GroundTruthRecord> truth,
                    std::span<const ImageMetricRow> image_metrics = {},
                    std::span<const HausdorffGroup> hausdorff = {});

/// Writes length_errors.csv, area_errors.csv (rows MAPE/RMSPE/spread per
/// model, one column per experiment x source), hausdorff.csv,
/// percentage_change.csv, image_metrics.csv and a report.json mirror.
void write_report(const Report& report, const std::filesystem::path& out_dir);

/// Per-image metric table with trailing median and mean rows. PSNR renders
/// infinity as "inf"; the psnr_flag column marks values below 30 dB.
void write_image_metrics_csv(const std::filesystem::path& path,
                             std::span<const ImageMetricRow> rows);

}  // namespace flarecast::evaluation
