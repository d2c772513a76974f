#include "flarecast/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>

#include <opencv2/imgproc.hpp>

#include "flarecast/error.hpp"
#include "flarecast/image.hpp"
#include "flarecast/random.hpp"

namespace flarecast::metrics {

std::string_view MetricValue::label() const {
  switch (name) {
    case MetricName::kEntropy: return "EN";
    case MetricName::kCorrelation: return "CC";
    case MetricName::kPsnr: return "PSNR";
    case MetricName::kSsim: return "SSIM";
    case MetricName::kHausdorff: return "HD";
  }
  return "?";
}

std::string_view MetricValue::units() const {
  switch (name) {
    case MetricName::kEntropy: return "bits/pixel";
    case MetricName::kPsnr: return "dB";
    case MetricName::kHausdorff: return "pixels";
    default: return "dimensionless";
  }
}

namespace {

cv::Mat gray_checked(const cv::Mat& image, const char* what) {
  require(!image.empty(), std::string(what) + ": empty image");
  cv::Mat gray = to_luminance(image);
  require(cv::checkRange(gray), std::string(what) + ": non-finite pixel values");
  return gray;
}

void require_same_size(const cv::Mat& x, const cv::Mat& y, const char* what) {
  if (x.size() != y.size()) {
    fail(ErrorKind::kDimensionMismatch,
         std::string(what) + ": image sizes differ (" + std::to_string(x.cols) + "x" +
             std::to_string(x.rows) + " vs " + std::to_string(y.cols) + "x" +
             std::to_string(y.rows) + ")");
  }
}

double power(double base, double exponent) {
  return exponent == 1.0 ? base : std::pow(base, exponent);
}

struct Moments {
  double mu_x, mu_y, var_x, var_y, cov;
};

double ssim_from_moments(const Moments& m, const SsimParams& p, bool simplified) {
  const double c1 = p.c1();
  const double c2 = p.c2();
  const double luminance = (2.0 * m.mu_x * m.mu_y + c1) / (m.mu_x * m.mu_x + m.mu_y * m.mu_y + c1);
  if (simplified) {
    // alpha = beta = gamma = 1 and c3 = c2 / 2 collapse contrast x structure
    return luminance * (2.0 * m.cov + c2) / (m.var_x + m.var_y + c2);
  }
  const double sx = std::sqrt(std::max(m.var_x, 0.0));
  const double sy = std::sqrt(std::max(m.var_y, 0.0));
  const double c3 = p.c3();
  const double contrast = (2.0 * sx * sy + c2) / (m.var_x + m.var_y + c2);
  const double structure = (m.cov + c3) / (sx * sy + c3);
  return power(luminance, p.alpha) * power(contrast, p.beta) * power(structure, p.gamma);
}

}  // namespace

double entropy(const cv::Mat& image) {
  const cv::Mat gray = gray_checked(image, "entropy");
  std::array<std::uint64_t, 256> histogram{};
  for (int y = 0; y < gray.rows; ++y) {
    const auto* row = gray.ptr<double>(y);
    for (int x = 0; x < gray.cols; ++x) {
      const long level = std::clamp(std::lround(row[x]), 0L, 255L);
      ++histogram[static_cast<std::size_t>(level)];
    }
  }
  const double total = static_cast<double>(gray.total());
  double en = 0.0;
  for (std::uint64_t count : histogram) {
    if (count == 0) continue;
    const double p = static_cast<double>(count) / total;
    en -= p * std::log2(p);
  }
  return en == 0.0 ? 0.0 : en;  // no negative zero
}

double correlation(const cv::Mat& x, const cv::Mat& y) {
  require_same_size(x, y, "correlation");
  const cv::Mat gx = gray_checked(x, "correlation");
  const cv::Mat gy = gray_checked(y, "correlation");
  const double mx = cv::mean(gx)[0];
  const double my = cv::mean(gy)[0];
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (int r = 0; r < gx.rows; ++r) {
    const auto* px = gx.ptr<double>(r);
    const auto* py = gy.ptr<double>(r);
    for (int c = 0; c < gx.cols; ++c) {
      const double dx = px[c] - mx;
      const double dy = py[c] - my;
      sxx += dx * dx;
      syy += dy * dy;
      sxy += dx * dy;
    }
  }
  const double n = static_cast<double>(gx.total());
  if (sxx / n <= 1e-18 || syy / n <= 1e-18) {
    fail(ErrorKind::kUndefinedCorrelation, "undefined correlation: an input has zero variance");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double mean_squared_error(const cv::Mat& x, const cv::Mat& y) {
  require_same_size(x, y, "mse");
  const cv::Mat gx = gray_checked(x, "mse");
  const cv::Mat gy = gray_checked(y, "mse");
  cv::Mat diff = gx - gy;
  return cv::mean(diff.mul(diff))[0];
}

double psnr(const cv::Mat& x, const cv::Mat& y) {
  const double mse = mean_squared_error(x, y);
  if (mse == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double ssim(const cv::Mat& x, const cv::Mat& y, const SsimParams& params) {
  require_same_size(x, y, "ssim");
  require(params.window >= 1 && params.window % 2 == 1, "ssim: window must be odd and positive");
  require(params.sigma > 0.0, "ssim: sigma must be positive");
  const cv::Mat gx = gray_checked(x, "ssim");
  const cv::Mat gy = gray_checked(y, "ssim");
  const bool simplified = params.alpha == 1.0 && params.beta == 1.0 && params.gamma == 1.0;

  if (gx.rows < params.window || gx.cols < params.window) {
    Moments m{};
    m.mu_x = cv::mean(gx)[0];
    m.mu_y = cv::mean(gy)[0];
    cv::Mat dx = gx - m.mu_x;
    cv::Mat dy = gy - m.mu_y;
    m.var_x = cv::mean(dx.mul(dx))[0];
    m.var_y = cv::mean(dy.mul(dy))[0];
    m.cov = cv::mean(dx.mul(dy))[0];
    return std::clamp(ssim_from_moments(m, params, simplified), 0.0, 1.0);
  }

  const cv::Mat kernel = cv::getGaussianKernel(params.window, params.sigma, CV_64F);
  auto blur = [&](const cv::Mat& src) {
    cv::Mat out;
    cv::sepFilter2D(src, out, CV_64F, kernel, kernel, cv::Point(-1, -1), 0.0, cv::BORDER_REFLECT);
    return out;
  };
  const cv::Mat mu_x = blur(gx);
  const cv::Mat mu_y = blur(gy);
  const cv::Mat e_xx = blur(gx.mul(gx));
  const cv::Mat e_yy = blur(gy.mul(gy));
  const cv::Mat e_xy = blur(gx.mul(gy));

  const int half = params.window / 2;
  double sum = 0.0;
  long count = 0;
  for (int r = half; r < gx.rows - half; ++r) {
    for (int c = half; c < gx.cols - half; ++c) {
      Moments m{};
      m.mu_x = mu_x.at<double>(r, c);
      m.mu_y = mu_y.at<double>(r, c);
      m.var_x = e_xx.at<double>(r, c) - m.mu_x * m.mu_x;
      m.var_y = e_yy.at<double>(r, c) - m.mu_y * m.mu_y;
      m.cov = e_xy.at<double>(r, c) - m.mu_x * m.mu_y;
      sum += ssim_from_moments(m, params, simplified);
      ++count;
    }
  }
  return std::clamp(sum / static_cast<double>(count), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Hausdorff

namespace {

std::int64_t squared_distance(cv::Point a, cv::Point b) {
  const std::int64_t dx = a.x - b.x;
  const std::int64_t dy = a.y - b.y;
  return dx * dx + dy * dy;
}

/// Early-break directed search: the inner scan stops as soon as a point
/// closer than the running maximum is found, since that outer point cannot
/// raise the maximum. Random visiting order makes early breaks likely.
std::int64_t directed_squared(std::span<const cv::Point> a, std::span<const cv::Point> b) {
  std::vector<cv::Point> outer(a.begin(), a.end());
  std::vector<cv::Point> inner(b.begin(), b.end());
  Rng rng(0x6a09e667f3bcc908ULL);
  rng.shuffle(std::span(outer));
  rng.shuffle(std::span(inner));
  std::int64_t cmax = 0;
  for (const cv::Point& p : outer) {
    std::int64_t cmin = INT64_MAX;
    bool broke = false;
    for (const cv::Point& q : inner) {
      const std::int64_t d = squared_distance(p, q);
      if (d < cmax) {
        broke = true;
        break;
      }
      cmin = std::min(cmin, d);
    }
    if (!broke && cmin > cmax) cmax = cmin;
  }
  return cmax;
}

/// Exact squared Euclidean distance to the nearest non-zero pixel of `mask`
/// (separable lower-envelope transform, integer valued).
cv::Mat squared_distance_transform(const cv::Mat& mask) {
  const int rows = mask.rows;
  const int cols = mask.cols;
  constexpr std::int64_t kInf = INT64_MAX / 4;

  // column pass: 1-D distance to the nearest site in the same column
  std::vector<std::int64_t> column(static_cast<std::size_t>(rows) * cols, kInf);
  for (int c = 0; c < cols; ++c) {
    std::int64_t last = -1;
    for (int r = 0; r < rows; ++r) {
      if (mask.at<std::uint8_t>(r, c) != 0) last = r;
      if (last >= 0) column[static_cast<std::size_t>(r) * cols + c] = r - last;
    }
    last = -1;
    for (int r = rows - 1; r >= 0; --r) {
      if (mask.at<std::uint8_t>(r, c) != 0) last = r;
      auto& cell = column[static_cast<std::size_t>(r) * cols + c];
      if (last >= 0) cell = std::min(cell, last - r);
    }
  }

  cv::Mat out(rows, cols, CV_64F);
  std::vector<int> sites(cols);
  std::vector<double> bounds(cols + 1);
  std::vector<std::int64_t> f(cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const std::int64_t d = column[static_cast<std::size_t>(r) * cols + c];
      f[c] = d >= kInf ? kInf : d * d;
    }
    int k = -1;
    for (int q = 0; q < cols; ++q) {
      if (f[q] >= kInf) continue;
      while (k >= 0) {
        const int v = sites[k];
        const double s =
            static_cast<double>((f[q] + std::int64_t{q} * q) - (f[v] + std::int64_t{v} * v)) /
            (2.0 * (q - v));
        if (s <= bounds[k]) {
          --k;
        } else {
          break;
        }
      }
      ++k;
      sites[k] = q;
      if (k == 0) {
        bounds[0] = -std::numeric_limits<double>::infinity();
      } else {
        const int v = sites[k - 1];
        bounds[k] =
            static_cast<double>((f[q] + std::int64_t{q} * q) - (f[v] + std::int64_t{v} * v)) /
            (2.0 * (q - v));
      }
    }
    auto* dst = out.ptr<double>(r);
    int j = 0;
    for (int q = 0; q < cols; ++q) {
      while (j < k && bounds[j + 1] < q) ++j;
      const std::int64_t dq = q - sites[j];
      dst[q] = static_cast<double>(dq * dq + f[sites[j]]);
    }
  }
  return out;
}

cv::Mat binary_mask(const cv::Mat& mask) {
  require(!mask.empty() && mask.channels() == 1, "hausdorff: masks must be single-channel");
  cv::Mat binary;
  cv::compare(mask, 0, binary, cv::CMP_NE);
  return binary;
}

double directed_from_transform(const cv::Mat& from, const cv::Mat& distance_to) {
  double worst = 0.0;
  for (int r = 0; r < from.rows; ++r) {
    const auto* m = from.ptr<std::uint8_t>(r);
    const auto* d = distance_to.ptr<double>(r);
    for (int c = 0; c < from.cols; ++c) {
      if (m[c] != 0) worst = std::max(worst, d[c]);
    }
  }
  return worst;
}

}  // namespace

double directed_hausdorff(std::span<const cv::Point> a, std::span<const cv::Point> b) {
  if (a.empty() || b.empty()) fail(ErrorKind::kEmptyMask, "empty mask: point set is empty");
  return std::sqrt(static_cast<double>(directed_squared(a, b)));
}

double hausdorff(std::span<const cv::Point> a, std::span<const cv::Point> b) {
  if (a.empty() || b.empty()) fail(ErrorKind::kEmptyMask, "empty mask: point set is empty");
  const std::int64_t d = std::max(directed_squared(a, b), directed_squared(b, a));
  return std::sqrt(static_cast<double>(d));
}

double hausdorff(const cv::Mat& mask_a, const cv::Mat& mask_b) {
  require_same_size(mask_a, mask_b, "hausdorff");
  const cv::Mat a = binary_mask(mask_a);
  const cv::Mat b = binary_mask(mask_b);
  if (cv::countNonZero(a) == 0 || cv::countNonZero(b) == 0) {
    fail(ErrorKind::kEmptyMask, "empty mask: no foreground pixels");
  }
  const double d2 = std::max(directed_from_transform(a, squared_distance_transform(b)),
                             directed_from_transform(b, squared_distance_transform(a)));
  return std::sqrt(d2);
}

std::vector<cv::Point> foreground_points(const cv::Mat& mask) {
  const cv::Mat binary = binary_mask(mask);
  std::vector<cv::Point> points;
  for (int r = 0; r < binary.rows; ++r) {
    const auto* row = binary.ptr<std::uint8_t>(r);
    for (int c = 0; c < binary.cols; ++c) {
      if (row[c] != 0) points.emplace_back(c, r);
    }
  }
  return points;
}

std::vector<MetricValue> evaluate_pair(const cv::Mat& candidate, const cv::Mat& reference) {
  return {{MetricName::kEntropy, entropy(candidate)},
          {MetricName::kCorrelation, correlation(candidate, reference)},
          {MetricName::kPsnr, psnr(candidate, reference)},
          {MetricName::kSsim, ssim(candidate, reference)}};
}

}  // namespace flarecast::metrics
