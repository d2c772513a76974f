#include "flarecast/characterization.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

#include <opencv2/imgproc.hpp>
#include <spdlog/spdlog.h>

#include "flarecast/csv.hpp"
#include "flarecast/error.hpp"
#include "flarecast/image.hpp"

namespace fs = std::filesystem;

namespace flarecast::characterization {

CalibrationInfo calibrate(double reference_distance_px, double reference_distance_m,
                          std::string source) {
  require(reference_distance_px > 0.0 && std::isfinite(reference_distance_px),
          "calibrate: reference distance in pixels must be positive");
  require(reference_distance_m > 0.0 && std::isfinite(reference_distance_m),
          "calibrate: reference distance in metres must be positive");
  CalibrationInfo info;
  info.pixels_per_metric = reference_distance_px / reference_distance_m;
  info.source = std::move(source);
  info.reference_distance_m = reference_distance_m;
  info.reference_distance_px = reference_distance_px;
  return info;
}

namespace {

// Headings on the corner lattice, image coordinates (y down).
const std::array<cv::Point, 4> kStep{{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};
// Pixel ahead-left / ahead-right of a vertex for each heading, as offsets
// from the vertex to the pixel's top-left corner.
const std::array<cv::Point, 4> kAheadLeft{{{0, -1}, {0, 0}, {-1, 0}, {-1, -1}}};
const std::array<cv::Point, 4> kAheadRight{{{0, 0}, {-1, 0}, {-1, -1}, {0, -1}}};

/// Follows the outer crack boundary keeping the component on the right.
/// `padded` carries a one-pixel zero border; output is in unpadded coordinates.
std::vector<cv::Point2d> trace_boundary(const cv::Mat& padded, cv::Point start_pixel) {
  auto inside = [&](cv::Point p) { return padded.at<std::uint8_t>(p.y, p.x) != 0; };
  const cv::Point start = start_pixel;  // top-left corner of the first pixel
  cv::Point vertex = start;
  int heading = 0;
  std::vector<cv::Point2d> corners;
  corners.emplace_back(start.x - 1, start.y - 1);
  while (true) {
    vertex += kStep[heading];
    int next = heading;
    if (inside(vertex + kAheadLeft[heading])) {
      next = (heading + 3) % 4;
    } else if (!inside(vertex + kAheadRight[heading])) {
      next = (heading + 1) % 4;
    }
    if (vertex == start) break;
    if (next != heading) corners.emplace_back(vertex.x - 1, vertex.y - 1);
    heading = next;
  }
  return corners;
}

}  // namespace

Contour extract_contour(const cv::Mat& mask) {
  require(!mask.empty() && mask.channels() == 1, "extract_contour: expected a single-channel mask");
  cv::Mat binary;
  cv::compare(mask, 0, binary, cv::CMP_NE);
  if (cv::countNonZero(binary) == 0) fail(ErrorKind::kNoFlame, "no flame detected");

  cv::Mat labels;
  cv::Mat stats;
  cv::Mat centroids;
  const int count = cv::connectedComponentsWithStats(binary, labels, stats, centroids, 8, CV_32S);

  std::vector<long> first_seen(static_cast<std::size_t>(count), -1);
  for (int y = 0; y < labels.rows; ++y) {
    const auto* row = labels.ptr<int>(y);
    for (int x = 0; x < labels.cols; ++x) {
      if (row[x] > 0 && first_seen[row[x]] < 0) {
        first_seen[row[x]] = static_cast<long>(y) * labels.cols + x;
      }
    }
  }
  int best = 1;
  for (int label = 2; label < count; ++label) {
    const int area = stats.at<int>(label, cv::CC_STAT_AREA);
    const int best_area = stats.at<int>(best, cv::CC_STAT_AREA);
    if (area > best_area || (area == best_area && first_seen[label] < first_seen[best])) {
      best = label;
    }
  }

  cv::Mat component;
  cv::compare(labels, best, component, cv::CMP_EQ);
  cv::Mat padded;
  cv::copyMakeBorder(component, padded, 1, 1, 1, 1, cv::BORDER_CONSTANT, cv::Scalar(0));
  const long first = first_seen[best];
  const cv::Point start(static_cast<int>(first % labels.cols) + 1,
                        static_cast<int>(first / labels.cols) + 1);

  Contour contour;
  contour.points = trace_boundary(padded, start);
  contour.component_pixels = static_cast<std::size_t>(stats.at<int>(best, cv::CC_STAT_AREA));
  return contour;
}

cv::Point2d topmost_point(std::span<const cv::Point2d> contour) {
  require(!contour.empty(), "topmost_point: empty contour");
  return *std::min_element(contour.begin(), contour.end(), [](const auto& a, const auto& b) {
    return a.y < b.y || (a.y == b.y && a.x < b.x);
  });
}

double polygon_area_px(std::span<const cv::Point2d> contour) {
  if (contour.size() < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < contour.size(); ++i) {
    const auto& p = contour[i];
    const auto& q = contour[(i + 1) % contour.size()];
    twice += p.x * q.y - q.x * p.y;
  }
  return std::abs(twice) * 0.5;
}

double flame_length(std::span<const cv::Point2d> contour, const NozzleReference& nozzle,
                    const CalibrationInfo& calibration, cv::Size image_size) {
  require(!contour.empty(), "flame_length: empty contour");
  require(calibration.pixels_per_metric > 0.0, "flame_length: invalid calibration");
  const cv::Point2d n = nozzle.point;
  require(n.x >= 0.0 && n.y >= 0.0 && n.x <= image_size.width && n.y <= image_size.height,
          "nozzle (" + csv::format(n.x, 2) + ", " + csv::format(n.y, 2) + ") outside image " +
              std::to_string(image_size.width) + "x" + std::to_string(image_size.height));
  const cv::Point2d tip = topmost_point(contour);
  return std::hypot(tip.x - n.x, tip.y - n.y) / calibration.pixels_per_metric;
}

double flame_area(std::span<const cv::Point2d> contour, const CalibrationInfo& calibration) {
  require(calibration.pixels_per_metric > 0.0, "flame_area: invalid calibration");
  const double area_px = polygon_area_px(contour);
  if (contour.size() < 3 || area_px == 0.0) {
    spdlog::warn("flame_area: degenerate contour with {} points, area set to 0", contour.size());
    return 0.0;
  }
  return area_px / (calibration.pixels_per_metric * calibration.pixels_per_metric);
}

FlameGeometry characterize(const cv::Mat& mask, const NozzleReference& nozzle,
                           const CalibrationInfo& calibration) {
  FlameGeometry g;
  g.contour = extract_contour(mask).points;
  g.topmost_point = topmost_point(g.contour);
  g.total_length_m = flame_length(g.contour, nozzle, calibration, mask.size());
  g.area_m2 = flame_area(g.contour, calibration);
  return g;
}

std::vector<GeometryRow> characterize_directory(const fs::path& mask_dir,
                                                const NozzleReference& nozzle,
                                                const CalibrationInfo& calibration) {
  require(fs::is_directory(mask_dir), "mask directory not found: " + mask_dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(mask_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<GeometryRow> rows;
  for (const auto& file : files) {
    const cv::Mat mask = read_image(file, 1);
    try {
      const auto g = characterize(mask, nozzle, calibration);
      rows.push_back({file.stem().string(), g.total_length_m, g.area_m2, g.topmost_point.x,
                      g.topmost_point.y});
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kNoFlame) throw;
      spdlog::warn("characterize: {} skipped: {}", file.filename().string(), e.what());
    }
  }
  return rows;
}

void write_geometry_csv(const fs::path& path, std::span<const GeometryRow> rows) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << "frame_id,length_m,area_m2,topmost_x,topmost_y\n";
  for (const auto& r : rows) {
    out << r.frame_id << ',' << csv::format(r.length_m) << ',' << csv::format(r.area_m2) << ','
        << csv::format(r.topmost_x, 1) << ',' << csv::format(r.topmost_y, 1) << '\n';
  }
}

}  // namespace flarecast::characterization
