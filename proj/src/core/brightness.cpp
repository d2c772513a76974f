#include "flarecast/brightness.hpp"

#include <cassert>
#include <cmath>
#include <string>

#include "flarecast/error.hpp"

namespace flarecast::translation {

ReferenceMode parse_reference_mode(std::string_view text) {
  if (text == "paired" || text == "paired_real") return ReferenceMode::kPairedReal;
  if (text == "corpus_mean") return ReferenceMode::kCorpusMean;
  fail(ErrorKind::kValidation,
       "unknown brightness reference '" + std::string(text) + "' (expected paired|corpus_mean)");
}

std::string_view to_string(ReferenceMode mode) {
  return mode == ReferenceMode::kPairedReal ? "paired_real" : "corpus_mean";
}

double rms_brightness(const cv::Mat& image) {
  require(!image.empty(), "rms_brightness: empty image");
  cv::Mat values;
  image.convertTo(values, CV_64F);
  values = values.reshape(1);
  return std::sqrt(cv::mean(values.mul(values))[0]);
}

BrightnessAdjustment adjust_brightness(const cv::Mat& artificial, double reference_rms,
                                       const BrightnessPolicy& policy) {
  require(policy.threshold > 0.0, "brightness threshold must be > 0");
  require(policy.factor > 0.0, "brightness factor must be > 0");
  require(reference_rms >= 0.0 && reference_rms <= 255.0,
          "reference RMS brightness must lie in [0, 255]");
  require(artificial.depth() == CV_8U, "adjust_brightness: expected an 8-bit image");

  BrightnessAdjustment out;
  out.rms_before = rms_brightness(artificial);
  out.rms_target = out.rms_before;
  if (out.rms_before - reference_rms <= policy.threshold) {
    out.image = artificial.clone();
    return out;
  }
  // gap > threshold > 0 implies rms_before > 0
  assert(out.rms_before > 0.0);
  out.applied = true;
  out.scale = policy.factor * reference_rms / out.rms_before;
  out.rms_target = policy.factor * reference_rms;
  artificial.convertTo(out.image, CV_8U, out.scale);  // rounds and saturates
  return out;
}

}  // namespace flarecast::translation
