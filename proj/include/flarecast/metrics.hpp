#pragma once

#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <opencv2/core.hpp>

// Image-quality and mask-similarity metrics.
//
// Image inputs may be 8-bit (1 or 3 channels, BGR) or single-channel
// floating point with values in [0, 255]. Colour is reduced to BT.601
// luminance first. All functions are pure.

namespace flarecast::metrics {

enum class MetricName { kEntropy, kCorrelation, kPsnr, kSsim, kHausdorff };

struct MetricValue {
  MetricName name;
  double value = 0.0;

  std::string_view label() const;
  std::string_view units() const;
};

inline constexpr double kPsnrBenchmarkDb = 30.0;
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// Shannon entropy of the 256-bin grey-level histogram, bits per pixel.
/// Floating-point input is rounded to the nearest level first.
double entropy(const cv::Mat& image);

/// Pearson correlation Cov(x,y) / sqrt(Var(x) Var(y)). Throws
/// kUndefinedCorrelation if either image has zero variance.
double correlation(const cv::Mat& x, const cv::Mat& y);

double mean_squared_error(const cv::Mat& x, const cv::Mat& y);

/// 10 log10(255^2 / MSE); identical images give kPsnrIdentical.
double psnr(const cv::Mat& x, const cv::Mat& y);

/// True when a PSNR value falls below the 30 dB deterioration benchmark.
inline bool psnr_deteriorated(double db) { return db < kPsnrBenchmarkDb; }

struct SsimParams {
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;
  int window = 11;
  double sigma = 1.5;
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;

  double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }
  double c3() const { return 0.5 * c2(); }
};

/// Mean of the luminance/contrast/structure product over every fully
/// contained Gaussian window. Images smaller than the window are scored as
/// one global window with uniform weights. The mean is clamped to [0, 1], so
/// anti-correlated images score 0.
double ssim(const cv::Mat& x, const cv::Mat& y, const SsimParams& params = {});

/// Symmetric Hausdorff distance between point sets, Euclidean, exact.
/// Throws kEmptyMask if either set is empty.
double hausdorff(std::span<const cv::Point> a, std::span<const cv::Point> b);

/// Directed distance h(a, b) = max over a of the distance to the nearest b.
double directed_hausdorff(std::span<const cv::Point> a, std::span<const cv::Point> b);

/// Hausdorff distance between the foreground (non-zero) pixels of two
/// same-size masks, computed through an exact Euclidean distance transform.
double hausdorff(const cv::Mat& mask_a, const cv::Mat& mask_b);

/// Coordinates of every non-zero pixel in row-major order.
std::vector<cv::Point> foreground_points(const cv::Mat& mask);

/// EN of the candidate plus CC, PSNR and SSIM against the reference.
std::vector<MetricValue> evaluate_pair(const cv::Mat& candidate, const cv::Mat& reference);

}  // namespace flarecast::metrics
