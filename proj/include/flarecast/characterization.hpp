#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

namespace flarecast::characterization {

struct CalibrationInfo {
  double pixels_per_metric = 0.0;  // px / m
  std::string source;
  double reference_distance_m = 0.0;
  double reference_distance_px = 0.0;
};

/// Pixels-per-metric from a reference of known length, e.g. the spacing
/// between two thermocouples.
CalibrationInfo calibrate(double reference_distance_px, double reference_distance_m,
                          std::string source = "reference distance");

/// Fuel release point in mask pixel coordinates.
struct NozzleReference {
  cv::Point2d point;
};

/// Polygon vertices live on the pixel-corner lattice: pixel (x, y) covers
/// [x, x+1] x [y, y+1], so a filled w x h rectangle traces to its four outer
/// corners and encloses exactly w*h px^2.
struct Contour {
  std::vector<cv::Point2d> points;
  std::size_t component_pixels = 0;
};

/// External boundary of the largest 8-connected foreground component, all
/// non-zero classes merged. Ties on size go to the component met first in
/// row-major order. Collinear boundary points are collapsed. Throws
/// kNoFlame when the mask has no foreground.
Contour extract_contour(const cv::Mat& mask);

/// Minimum y; ties resolved to the smaller x.
cv::Point2d topmost_point(std::span<const cv::Point2d> contour);

/// Shoelace area in px^2 (absolute value).
double polygon_area_px(std::span<const cv::Point2d> contour);

/// Euclidean nozzle-to-topmost distance in metres. The nozzle must lie in
/// [0, width] x [0, height].
double flame_length(std::span<const cv::Point2d> contour, const NozzleReference& nozzle,
                    const CalibrationInfo& calibration, cv::Size image_size);

/// Polygon area in m^2. Fewer than three points yields 0 and a warning.
double flame_area(std::span<const cv::Point2d> contour, const CalibrationInfo& calibration);

struct FlameGeometry {
  double total_length_m = 0.0;
  double area_m2 = 0.0;
  std::vector<cv::Point2d> contour;
  cv::Point2d topmost_point;
};

FlameGeometry characterize(const cv::Mat& mask, const NozzleReference& nozzle,
                           const CalibrationInfo& calibration);

struct GeometryRow {
  std::string frame_id;
  double length_m = 0.0;
  double area_m2 = 0.0;
  double topmost_x = 0.0;
  double topmost_y = 0.0;
};

/// Characterises every mask PNG in `mask_dir` (frame id = file stem), sorted
/// by frame id. Masks without foreground are skipped with a warning.
std::vector<GeometryRow> characterize_directory(const std::filesystem::path& mask_dir,
                                                const NozzleReference& nozzle,
                                                const CalibrationInfo& calibration);

/// Writes `frame_id,length_m,area_m2,topmost_x,topmost_y`.
void write_geometry_csv(const std::filesystem::path& path, std::span<const GeometryRow> rows);

}  // namespace flarecast::characterization
