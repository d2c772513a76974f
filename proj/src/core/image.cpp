#include "flarecast/image.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <openssl/evp.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "flarecast/error.hpp"
#include "flarecast/random.hpp"

namespace flarecast {

namespace {

cv::Mat scale_to_8bit(const cv::Mat& image, double lo, double hi) {
  cv::Mat out;
  const double range = hi - lo;
  if (range <= 0.0) {
    image.convertTo(out, CV_8U, 0.0, 0.0);
  } else {
    image.convertTo(out, CV_8U, 255.0 / range, -lo * 255.0 / range);
  }
  return out;
}

cv::Mat with_channels(const cv::Mat& image, int channels) {
  if (image.channels() == channels) return image;
  cv::Mat out;
  if (channels == 1) {
    cv::cvtColor(image, out, image.channels() == 4 ? cv::COLOR_BGRA2GRAY : cv::COLOR_BGR2GRAY);
  } else if (image.channels() == 1) {
    cv::cvtColor(image, out, cv::COLOR_GRAY2BGR);
  } else {
    cv::cvtColor(image, out, cv::COLOR_BGRA2BGR);
  }
  return out;
}

}  // namespace

cv::Mat read_image(const std::filesystem::path& path, int channels) {
  require(channels == 1 || channels == 3, "read_image: channels must be 1 or 3");
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) fail(ErrorKind::kIo, "cannot read image: " + path.string());
  if (raw.depth() != CV_8U) {
    double lo = 0.0;
    double hi = 0.0;
    cv::minMaxLoc(raw.reshape(1), &lo, &hi);
    raw = scale_to_8bit(raw, lo, hi);
  }
  return with_channels(raw, channels);
}

void write_image(const std::filesystem::path& path, const cv::Mat& image) {
  require(!image.empty(), "write_image: empty image for " + path.string());
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), image)) {
    fail(ErrorKind::kIo, "cannot write image: " + path.string());
  }
}

std::vector<cv::Mat> normalize_sequence(std::span<const cv::Mat> frames) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& frame : frames) {
    require(!frame.empty(), "normalize_sequence: empty frame");
    double fmin = 0.0;
    double fmax = 0.0;
    cv::minMaxLoc(frame.reshape(1), &fmin, &fmax);
    lo = std::min(lo, fmin);
    hi = std::max(hi, fmax);
  }
  std::vector<cv::Mat> out;
  out.reserve(frames.size());
  for (const auto& frame : frames) out.push_back(scale_to_8bit(frame, lo, hi));
  return out;
}

cv::Mat to_luminance(const cv::Mat& image) {
  require(!image.empty(), "to_luminance: empty image");
  cv::Mat as_double;
  image.convertTo(as_double, CV_64F);
  if (as_double.channels() == 1) return as_double;
  require(as_double.channels() == 3, "to_luminance: expected 1 or 3 channels");
  cv::Mat gray(as_double.size(), CV_64FC1);
  for (int y = 0; y < as_double.rows; ++y) {
    const auto* src = as_double.ptr<cv::Vec3d>(y);
    auto* dst = gray.ptr<double>(y);
    for (int x = 0; x < as_double.cols; ++x) {
      dst[x] = 0.114 * src[x][0] + 0.587 * src[x][1] + 0.299 * src[x][2];
    }
  }
  return gray;
}

cv::Mat to_three_channel(const cv::Mat& image) { return with_channels(image, 3); }

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr);
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return sha256_hex(buffer.str());
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 finaliser over the combined value
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace flarecast
