#pragma once

// Brute-force reference implementations used to check the library. They work
// on plain vectors and share no code with src/.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <opencv2/core.hpp>

namespace oracle {

struct Gray {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;
  double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
};

inline Gray from_mat(const cv::Mat& m) {
  Gray g{m.rows, m.cols, {}};
  for (int r = 0; r < m.rows; ++r) {
    for (int c = 0; c < m.cols; ++c) g.v.push_back(m.at<std::uint8_t>(r, c));
  }
  return g;
}

inline double entropy(const Gray& g) {
  std::vector<double> hist(256, 0.0);
  for (double x : g.v) hist[static_cast<int>(x)] += 1.0;
  double en = 0.0;
  for (double h : hist) {
    if (h > 0) en += -(h / g.v.size()) * std::log2(h / g.v.size());
  }
  return en;
}

inline double correlation(const Gray& a, const Gray& b) {
  const double n = static_cast<double>(a.v.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    ma += a.v[i];
    mb += b.v[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    cov += (a.v[i] - ma) * (b.v[i] - mb);
    va += (a.v[i] - ma) * (a.v[i] - ma);
    vb += (b.v[i] - mb) * (b.v[i] - mb);
  }
  return cov / std::sqrt(va * vb);
}

inline double psnr(const Gray& a, const Gray& b) {
  double se = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) se += (a.v[i] - b.v[i]) * (a.v[i] - b.v[i]);
  const double mse = se / a.v.size();
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

/// Direct windowed SSIM: for every fully contained 11x11 window, Gaussian
/// weighted two-pass moments, then the product form with c3 = c2/2. The mean
/// is clamped to [0, 1].
inline double ssim(const Gray& a, const Gray& b) {
  const int win = 11;
  const double sigma = 1.5;
  const double c1 = (0.01 * 255) * (0.01 * 255);
  const double c2 = (0.03 * 255) * (0.03 * 255);
  const double c3 = c2 / 2;
  std::vector<double> g1(win);
  double s = 0.0;
  for (int i = 0; i < win; ++i) {
    g1[i] = std::exp(-((i - win / 2) * (i - win / 2)) / (2 * sigma * sigma));
    s += g1[i];
  }
  for (auto& x : g1) x /= s;

  double total = 0.0;
  int count = 0;
  for (int r0 = 0; r0 + win <= a.rows; ++r0) {
    for (int c0 = 0; c0 + win <= a.cols; ++c0) {
      double mx = 0, my = 0;
      for (int i = 0; i < win; ++i) {
        for (int j = 0; j < win; ++j) {
          const double w = g1[i] * g1[j];
          mx += w * a.at(r0 + i, c0 + j);
          my += w * b.at(r0 + i, c0 + j);
        }
      }
      double vx = 0, vy = 0, cxy = 0;
      for (int i = 0; i < win; ++i) {
        for (int j = 0; j < win; ++j) {
          const double w = g1[i] * g1[j];
          const double dx = a.at(r0 + i, c0 + j) - mx;
          const double dy = b.at(r0 + i, c0 + j) - my;
          vx += w * dx * dx;
          vy += w * dy * dy;
          cxy += w * dx * dy;
        }
      }
      const double sx = std::sqrt(vx), sy = std::sqrt(vy);
      const double l = (2 * mx * my + c1) / (mx * mx + my * my + c1);
      const double c = (2 * sx * sy + c2) / (vx + vy + c2);
      const double st = (cxy + c3) / (sx * sy + c3);
      total += l * c * st;
      ++count;
    }
  }
  return std::clamp(total / count, 0.0, 1.0);
}

/// O(n*m) scan in both directions.
inline double hausdorff(const std::vector<cv::Point>& a, const std::vector<cv::Point>& b) {
  auto directed = [](const std::vector<cv::Point>& p, const std::vector<cv::Point>& q) {
    double worst = 0.0;
    for (const auto& x : p) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& y : q) best = std::min(best, std::hypot(double(x.x - y.x), double(x.y - y.y)));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

inline std::vector<cv::Point> nonzero(const cv::Mat& mask) {
  std::vector<cv::Point> pts;
  for (int y = 0; y < mask.rows; ++y) {
    for (int x = 0; x < mask.cols; ++x) {
      if (mask.at<std::uint8_t>(y, x)) pts.emplace_back(x, y);
    }
  }
  return pts;
}

/// Random 8-bit image. Half the fixtures are smooth so SSIM and CC are not
/// always near zero.
inline cv::Mat random_image(std::mt19937_64& rng, int rows, int cols, bool smooth) {
  cv::Mat m(rows, cols, CV_8UC1);
  std::uniform_int_distribution<int> level(0, 255);
  if (!smooth) {
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) m.at<std::uint8_t>(r, c) = static_cast<std::uint8_t>(level(rng));
    }
    return m;
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double fx = 0.05 + 0.3 * u(rng), fy = 0.05 + 0.3 * u(rng), ph = 6.28 * u(rng);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double v = 128 + 100 * std::sin(fx * c + fy * r + ph) + 20 * (u(rng) - 0.5);
      m.at<std::uint8_t>(r, c) = cv::saturate_cast<std::uint8_t>(std::lround(v));
    }
  }
  return m;
}

/// `base` plus bounded noise, so the pair is correlated.
inline cv::Mat perturb(std::mt19937_64& rng, const cv::Mat& base, int amplitude) {
  std::uniform_int_distribution<int> d(-amplitude, amplitude);
  cv::Mat m = base.clone();
  for (int r = 0; r < m.rows; ++r) {
    for (int c = 0; c < m.cols; ++c) {
      m.at<std::uint8_t>(r, c) = cv::saturate_cast<std::uint8_t>(m.at<std::uint8_t>(r, c) + d(rng));
    }
  }
  return m;
}

inline cv::Mat random_mask(std::mt19937_64& rng, int rows, int cols, double density) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  cv::Mat m = cv::Mat::zeros(rows, cols, CV_8UC1);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (u(rng) < density) m.at<std::uint8_t>(r, c) = 1;
    }
  }
  if (cv::countNonZero(m) == 0) m.at<std::uint8_t>(rows / 2, cols / 2) = 1;
  return m;
}

inline double relative_error(double got, double want) {
  if (got == want) return 0.0;
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

}  // namespace oracle
