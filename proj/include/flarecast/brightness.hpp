#pragma once

#include <string_view>

#include <opencv2/core.hpp>

namespace flarecast::translation {

enum class ReferenceMode { kPairedReal, kCorpusMean };

ReferenceMode parse_reference_mode(std::string_view text);
std::string_view to_string(ReferenceMode mode);

/// Post-correction for artificial IR frames that come out brighter than the
/// real ones. When B(artificial) - B(reference) exceeds `threshold`, every
/// pixel is multiplied by factor * B(reference) / B(artificial), so the RMS
/// brightness lands at factor * B(reference). Dimmer images never trigger.
struct BrightnessPolicy {
  double threshold = 20.0;
  double factor = 1.5;
  ReferenceMode reference_mode = ReferenceMode::kPairedReal;
};

/// Root-mean-square intensity over every pixel and channel, in [0, 255].
double rms_brightness(const cv::Mat& image);

struct BrightnessAdjustment {
  cv::Mat image;
  bool applied = false;
  double scale = 1.0;
  double rms_before = 0.0;
  double rms_target = 0.0;  // factor * reference when applied, else rms_before
};

BrightnessAdjustment adjust_brightness(const cv::Mat& artificial, double reference_rms,
                                       const BrightnessPolicy& policy = {});

}  // namespace flarecast::translation
